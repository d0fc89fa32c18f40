#include <doctest.h>

#include "../fixtures.hpp"
#include "../oracles.hpp"
#include "hbmu/conditionals_marginal.hpp"
#include "hbmu/errors.hpp"
#include "hbmu/gibbs.hpp"

using namespace hbmu;

namespace {

struct Noisy {
  fixture::Scenario sc = fixture::scenario(fixture::damage_setup(3));
  SystemState state;
  Noisy() {
    GibbsConfig c;
    c.algorithm = Algorithm::marginal;
    c.n_samples = 10;
    c.seed = 5;
    Rng rng(5);
    state = run_algorithm2(sc.undamaged, sc.model, c, rng).state(9);
  }
};

StructuralModel chain(int n) {
  BenchmarkSpec s;
  s.n_stories = n;
  return build_shear_building(s);
}

// Student-t log density against beta-quadrature at 10 points around the mean.
void check_mixture(const StudentTSpec& t, const BlockGaussian& post, const GammaSpec& beta, Rng& rng) {
  const Matrix cov = post.precision.inverse() * beta.rate / beta.shape;
  const Vector sd = cov.diagonal().cwiseSqrt();
  for (int i = 0; i < 10; ++i) {
    const Vector x = post.mean + sd.cwiseProduct(rng.normal_vector(post.mean.size())) * 1.5;
    const double ref = oracle::mixture_logpdf(x, post.mean, post.precision, beta.shape, beta.rate);
    CHECK(logpdf_student_t(t, x) == doctest::Approx(ref).epsilon(1e-6));
  }
}

}  // namespace

TEST_CASE("shape parameters of the Student-t conditionals") {
  SUBCASE("mode shapes: 8 observed DOFs, 10 segments, 8 modes") {
    BenchmarkSpec s;
    s.n_stories = oracle::kPhiShapeObserved;
    s.n_modes = oracle::kPhiShapeModes;
    s.n_segments = oracle::kPhiShapeSegments;
    const StructuralModel m = build_shear_building(s);
    Rng rng(1);
    const auto [data, truth] = simulate_modal_data(m, Vector::Ones(8), s, rng);
    const LinearBlock b = phi_block(data, m, truth.exact_modes.omega_sq.head(8), Vector::Ones(8));
    CHECK(b.marginal_shape() == oracle::kPhiShape);
  }
  SUBCASE("stiffness: 12 DOFs, 5 modes") {
    const StructuralModel m = chain(oracle::kThetaShapeDofs);
    const ModalSolution s = eigen_solve(m, Vector::Ones(12));
    const Vector hat = Vector::Ones(12);
    const LinearBlock b = theta_block(m, stack_modes(s.phi, 5), s.omega_sq.head(5), &hat);
    CHECK(b.marginal_shape() == oracle::kThetaShape);
    // Without the pseudo-datum the unknowns are no longer offset by data rows.
    const LinearBlock nb = theta_block(m, stack_modes(s.phi, 5), s.omega_sq.head(5), nullptr);
    CHECK(nb.marginal_shape() == (60.0 - 12.0) / 2.0 + 1.0);
  }
  SUBCASE("frequencies: (N_d N_m + N_s N_m - N_m) / 2 + 1") {
    Noisy n;
    const LinearBlock b = omega_block(n.sc.undamaged, n.sc.model, n.state.phi, n.state.theta);
    const double nd = 4, nm = 4, ns = 10;
    CHECK(b.marginal_shape() == (nd * nm + ns * nm - nm) / 2.0 + 1.0);
  }
}

TEST_CASE("each Student-t conditional is the beta-mixture of its Gaussian") {
  Noisy n;
  Rng rng(2);
  const ModalDataset& d = n.sc.undamaged;
  const StructuralModel& m = n.sc.model;
  SUBCASE("mode shapes") {
    HyperStateMarginal h;
    const ScalarFit fit = solve_phi_marginal(d, m, n.state.omega_sq, n.state.theta, h);
    check_mixture(student_conditional(fit.posterior, fit.scale_posterior), fit.posterior, fit.scale_posterior, rng);
  }
  SUBCASE("frequencies") {
    HyperStateMarginal h;
    const ScalarFit fit = solve_omega2_marginal(d, m, n.state.phi, n.state.theta, h);
    check_mixture(student_conditional(fit.posterior, fit.scale_posterior), fit.posterior, fit.scale_posterior, rng);
  }
  SUBCASE("stiffness, with and without the pseudo-datum") {
    HyperStateMarginal h;
    const ArdFit plain = solve_theta_marginal(m, n.state.phi, n.state.omega_sq, nullptr, h);
    check_mixture(student_conditional(plain.posterior, plain.scale_posterior), plain.posterior, plain.scale_posterior, rng);
    HyperStateMarginal hs;
    hs.sparse_mode = true;
    const Vector hat = (Vector(4) << 1.0, 0.8, 1.0, 1.0).finished();
    const ArdFit sparse = solve_theta_marginal(m, n.state.phi, n.state.omega_sq, &hat, hs);
    check_mixture(student_conditional(sparse.posterior, sparse.scale_posterior), sparse.posterior, sparse.scale_posterior, rng);
    // Mean of E'E + diag(1/gamma) against E'r + theta_hat / gamma.
    const LinearBlock b = theta_block(m, n.state.phi, n.state.omega_sq, &hat);
    const Vector inv = sparse.value.cwiseInverse();
    const Matrix lam = b.ete() + Matrix(inv.asDiagonal());
    const Vector mu = lam.fullPivLu().solve(b.etr() + inv.cwiseProduct(hat));
    CHECK((mu - sparse.posterior.mean).norm() < 1e-8 * mu.norm());
  }
}

TEST_CASE("Student-t fixed points are stationary and evidence-optimal") {
  Noisy n;
  const ModalDataset& d = n.sc.undamaged;
  const StructuralModel& m = n.sc.model;
  auto check_scalar = [](const LinearBlock& b, const ScalarFit& fit) {
    REQUIRE(fit.report.converged);
    const double a = b.marginal_shape();
    const Vector mu = fit.posterior.mean;
    const double q = (b.y() - b.theta() * mu).squaredNorm() / fit.value + b.prior_residual_sq(mu);
    CHECK(fit.b0 == doctest::Approx(q / static_cast<double>(b.n_prior_rows() + b.n_data() - b.dim())).epsilon(1e-10));
    const Matrix cov = fit.posterior.precision.inverse();
    const double rhs = ((cov * b.ttt()).trace() +
                        a / fit.scale_posterior.rate * (b.y() - b.theta() * mu).squaredNorm()) /
                       static_cast<double>(b.n_data());
    CHECK(rhs == doctest::Approx(fit.value).epsilon(1e-8));
    auto L = [&](double v, double b0) { return evidence_marginal(b, Vector::Constant(b.n_data(), v), b0); };
    const double l0 = std::abs(L(fit.value, fit.b0));
    CHECK(std::abs(oracle::central_difference([&](double v) { return L(v, fit.b0); }, fit.value) * fit.value) < 1e-6 * l0);
    CHECK(std::abs(oracle::central_difference([&](double b0) { return L(fit.value, b0); }, fit.b0) * fit.b0) < 1e-6 * l0);
  };
  SUBCASE("mode shapes") {
    HyperStateMarginal h;
    const ScalarFit fit = solve_phi_marginal(d, m, n.state.omega_sq, n.state.theta, h);
    check_scalar(phi_block(d, m, n.state.omega_sq, n.state.theta), fit);
    CHECK(h.tau == fit.value);
    CHECK(h.b0_phi == fit.b0);
  }
  SUBCASE("frequencies") {
    HyperStateMarginal h;
    const ScalarFit fit = solve_omega2_marginal(d, m, n.state.phi, n.state.theta, h);
    check_scalar(omega_block(d, m, n.state.phi, n.state.theta), fit);
  }
  SUBCASE("stiffness relevance variances") {
    HyperStateMarginal h;
    h.sparse_mode = true;
    const Vector hat = (Vector(4) << 1.0, 0.8, 1.0, 1.0).finished();
    const ArdFit fit = solve_theta_marginal(m, n.state.phi, n.state.omega_sq, &hat, h);
    REQUIRE(fit.report.converged);
    const LinearBlock b = theta_block(m, n.state.phi, n.state.omega_sq, &hat);
    const double a = b.marginal_shape();
    const Matrix cov = fit.posterior.precision.inverse();
    const double q = marginal_quadratic(b, fit.posterior.mean, fit.value);
    CHECK(fit.b0 == doctest::Approx(q / 16.0).epsilon(1e-10));
    for (int k = 0; k < 4; ++k) {
      if (fit.at_floor[static_cast<std::size_t>(k)]) continue;
      const double res = hat[k] - fit.posterior.mean[k];
      CHECK(cov(k, k) + a / fit.scale_posterior.rate * res * res == doctest::Approx(fit.value[k]).epsilon(1e-8));
      auto L = [&](double g) {
        Vector nu = fit.value;
        nu[k] = g;
        return evidence_marginal(b, nu, fit.b0);
      };
      CHECK(std::abs(oracle::central_difference(L, fit.value[k]) * fit.value[k]) < 1e-6 * std::abs(L(fit.value[k])));
    }
  }
}

TEST_CASE("consistency limits") {
  const StructuralModel m = build_shear_building(fixture::damage_setup());
  const auto [data, truth] = fixture::exact_data(m, Vector::Ones(4), 3);
  Rng rng(3);
  // Residuals are pure rounding, so the shared variances have no well-defined
  // optimum; the means do not depend on them.
  FixedPointOptions quiet;
  quiet.throw_on_failure = false;
  SUBCASE("noise-free complete data recovers the exact shapes") {
    HyperStateMarginal h;
    const StudentDraw d =
        cond_phi_marginal(data, m, truth.exact_modes.omega_sq.head(3), Vector::Ones(4), h, rng, quiet);
    Matrix phi = truth.exact_modes.phi.leftCols(3);
    for (int i = 0; i < 3; ++i) phi.col(i) = normalize_shape(phi.col(i));
    const Vector ref = stack_modes(phi, 3);
    CHECK((d.conditional.mean - ref).cwiseAbs().maxCoeff() < 1e-4 * ref.cwiseAbs().maxCoeff());
  }
  SUBCASE("noise-free data: frequency mean matches the identified values") {
    HyperStateMarginal h;
    const Vector phi = stack_modes(truth.exact_modes.phi, 3);
    const StudentDraw d = cond_omega2_marginal(data, m, phi, Vector::Ones(4), h, rng, quiet);
    const Vector ref = data.mean_freq_sq();
    CHECK((d.conditional.mean - ref).cwiseAbs().maxCoeff() < 1e-4 * ref.cwiseAbs().maxCoeff());
  }
  SUBCASE("pseudo-datum equal to the truth: relevance floored, draws at the datum") {
    const ModalSolution s = eigen_solve(m, Vector::Ones(4));
    const Vector hat = Vector::Ones(4);
    HyperStateMarginal h;
    h.sparse_mode = true;
    const StudentDraw d = cond_theta_marginal(m, stack_modes(s.phi, 4), s.omega_sq, &hat, h, rng);
    for (bool p : h.pruned) CHECK(p);
    CHECK((d.sample - hat).cwiseAbs().maxCoeff() < 1e-3);
  }
}

TEST_CASE("heavier tails than the Gaussian conditionals") {
  Noisy n;
  HyperStateMarginal h;
  const ArdFit fit = solve_theta_marginal(n.sc.model, n.state.phi, n.state.omega_sq, nullptr, h);
  const StudentTSpec t = student_conditional(fit.posterior, fit.scale_posterior);
  REQUIRE(t.dof > 4.0);
  Rng rng(4);
  const PrecisionFactor f(t.scale_precision);
  Vector x(100000);
  for (auto& v : x) v = sample_student_t(t.mean, f, t.dof, rng)[0];
  const double m = x.mean();
  const double m2 = (x.array() - m).square().mean();
  const double m4 = (x.array() - m).pow(4).mean();
  const double kurt = m4 / (m2 * m2) - 3.0;
  const double expected = 6.0 / (t.dof - 4.0);
  CHECK(kurt > 0.0);
  CHECK(kurt == doctest::Approx(expected).epsilon(0.35));
}

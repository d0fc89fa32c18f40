#include <doctest.h>

#include <random>

#include "../oracles.hpp"
#include "hbmu/errors.hpp"
#include "hbmu/fixed_point.hpp"

using namespace hbmu;

namespace {

// Random linear-Gaussian block: 8 prior rows, 3 unknowns, 12 data.
LinearBlock random_block(std::uint64_t seed, double noise = 0.3) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> z;
  Matrix e(8, 3), t(12, 3);
  Vector r(8), y(12), x(3);
  for (auto& v : e.reshaped()) v = z(g);
  for (auto& v : t.reshaped()) v = z(g);
  for (auto& v : x) v = z(g);
  for (auto& v : r) v = z(g);
  y = t * x;
  for (auto& v : y) v += noise * z(g);
  return LinearBlock(e, r, t, y);
}

FixedPointOptions strict() { return FixedPointOptions{}; }

}  // namespace

TEST_CASE("block Gaussian posterior") {
  const LinearBlock b = random_block(1);
  const BlockGaussian g = block_gaussian(b, 2.0, 0.5);
  const Matrix p = 2.0 * b.e().transpose() * b.e() + b.theta().transpose() * b.theta() / 0.5;
  CHECK((g.precision - p).norm() < 1e-12 * p.norm());
  const Vector mu = p.fullPivLu().solve(2.0 * b.e().transpose() * b.r() + b.theta().transpose() * b.y() / 0.5);
  CHECK((g.mean - mu).norm() < 1e-10 * mu.norm());
  CHECK(b.marginal_shape() == doctest::Approx((8 + 12 - 3) / 2.0 + 1.0));
  CHECK_THROWS_AS(LinearBlock(Matrix(2, 3), Vector(3), Matrix(0, 3), Vector()), InputError);
}

TEST_CASE("shared-variance fixed point, Gaussian form") {
  const LinearBlock b = random_block(2);
  const double s = 1.5;
  const ScalarFit fit = fit_scalar_gaussian(b, s, 1.0, 1e-12, strict());
  REQUIRE(fit.report.converged);
  // Update: [tr(Sigma Theta'Theta) + ||y - Theta mu||^2] / n.
  const Matrix cov = fit.posterior.precision.inverse();
  const double rhs = ((cov * b.theta().transpose() * b.theta()).trace() +
                      (b.y() - b.theta() * fit.posterior.mean).squaredNorm()) / 12.0;
  CHECK(rhs == doctest::Approx(fit.value).epsilon(1e-8));
  auto L = [&](double nu) { return evidence_gaussian(b, s, Vector::Constant(12, nu)); };
  const double grad = oracle::central_difference(L, fit.value) * fit.value;
  CHECK(std::abs(grad) < 1e-6 * std::abs(L(fit.value)));
  CHECK(L(fit.value) > L(1.1 * fit.value));
  CHECK(L(fit.value) > L(0.9 * fit.value));
}

TEST_CASE("shared-variance fixed point, Student-t form") {
  const LinearBlock b = random_block(3);
  const ScalarFit fit = fit_scalar_marginal(b, 1.0, 1e-12, strict());
  REQUIRE(fit.report.converged);
  const double a = b.marginal_shape();
  const Vector mu = fit.posterior.mean;
  const Vector nu = Vector::Constant(12, fit.value);
  const double q = (b.y() - b.theta() * mu).squaredNorm() / fit.value + b.prior_residual_sq(mu);
  // Rate of the exponential prior: quadratic / (rows(E) + n - dim).
  CHECK(fit.b0 == doctest::Approx(q / (8 + 12 - 3)).epsilon(1e-12));
  CHECK(fit.scale_posterior.shape == a);
  CHECK(fit.scale_posterior.rate == doctest::Approx(0.5 * q + fit.b0).epsilon(1e-12));
  const Matrix cov = fit.posterior.precision.inverse();
  const double rhs = ((cov * b.theta().transpose() * b.theta()).trace() +
                      a / fit.scale_posterior.rate * (b.y() - b.theta() * mu).squaredNorm()) / 12.0;
  CHECK(rhs == doctest::Approx(fit.value).epsilon(1e-8));

  auto L = [&](double v, double b0) { return evidence_marginal(b, Vector::Constant(12, v), b0); };
  const double l0 = std::abs(L(fit.value, fit.b0));
  const double gv = oracle::central_difference([&](double v) { return L(v, fit.b0); }, fit.value) * fit.value;
  const double gb = oracle::central_difference([&](double b0) { return L(fit.value, b0); }, fit.b0) * fit.b0;
  CHECK(std::abs(gv) < 1e-6 * l0);
  CHECK(std::abs(gb) < 1e-6 * l0);
}

TEST_CASE("noise-free data drives the shared variance to its floor") {
  const LinearBlock b = random_block(4, 0.0);
  FixedPointOptions o;
  o.throw_on_failure = false;
  const ScalarFit fit = fit_scalar_gaussian(b, 1.0, 1.0, 1e-10, o);
  CHECK(fit.at_floor);
  CHECK(fit.value == 1e-10);
}

TEST_CASE("per-entry fixed point") {
  // Three entries: two reproduce the prior mean exactly, one is far off.
  Matrix e = Matrix::Identity(3, 3);
  const Vector r = Vector::Ones(3);
  const Vector y = (Vector(3) << 1.0, 1.0, 3.0).finished();
  const LinearBlock b(e, r, Matrix::Identity(3, 3), y);
  SUBCASE("Gaussian form") {
    const ArdFit fit = fit_ard_gaussian(b, 4.0, Vector::Ones(3), 1e-12, strict());
    REQUIRE(fit.report.converged);
    CHECK(fit.at_floor[0]);
    CHECK(fit.at_floor[1]);
    CHECK_FALSE(fit.at_floor[2]);
    CHECK(fit.report.n_floored == 2);
    // Update for the free entry: Sigma_kk + (y - mu)_k^2.
    const Matrix cov = fit.posterior.precision.inverse();
    const double res = y[2] - fit.posterior.mean[2];
    CHECK(cov(2, 2) + res * res == doctest::Approx(fit.value[2]).epsilon(1e-8));
    auto L = [&](double v) {
      Vector nu = fit.value;
      nu[2] = v;
      return evidence_gaussian(b, 4.0, nu);
    };
    CHECK(std::abs(oracle::central_difference(L, fit.value[2]) * fit.value[2]) < 1e-6 * std::abs(L(fit.value[2])));
    // Closed form for identity blocks: nu = (y - r)^2 - 1/s.
    CHECK(fit.value[2] == doctest::Approx(4.0 - 0.25).epsilon(1e-10));
  }
  SUBCASE("Student-t form") {
    const LinearBlock wide = [] {
      std::mt19937_64 g(5);
      std::normal_distribution<double> z;
      Matrix e(10, 3);
      for (auto& v : e.reshaped()) v = z(g);
      const Vector x = (Vector(3) << 1.0, 1.0, 1.0).finished();
      Vector r = e * x;
      for (auto& v : r) v += 0.05 * z(g);
      const Vector y = (Vector(3) << 1.0, 1.0, 1.6).finished();
      return LinearBlock(e, r, Matrix::Identity(3, 3), y);
    }();
    const ArdFit fit = fit_ard_marginal(wide, Vector::Ones(3), 1e-12, strict());
    REQUIRE(fit.report.converged);
    CHECK(fit.value[2] > 100.0 * std::max(fit.value[0], fit.value[1]));
    const double a = wide.marginal_shape();
    const Matrix cov = fit.posterior.precision.inverse();
    for (int k = 0; k < 3; ++k) {
      if (fit.at_floor[static_cast<std::size_t>(k)]) continue;
      const double res = wide.y()[k] - fit.posterior.mean[k];
      CHECK(cov(k, k) + a / fit.scale_posterior.rate * res * res ==
            doctest::Approx(fit.value[k]).epsilon(1e-8));
      auto L = [&](double v) {
        Vector nu = fit.value;
        nu[k] = v;
        return evidence_marginal(wide, nu, fit.b0);
      };
      CHECK(std::abs(oracle::central_difference(L, fit.value[k]) * fit.value[k]) <
            1e-6 * std::abs(L(fit.value[k])));
    }
  }
}

TEST_CASE("Student-t block without data") {
  const LinearBlock b(random_block(6).e(), random_block(6).r(), Matrix(0, 3), Vector());
  const ScalarFit fit = fit_nodata_marginal(b);
  const double q = b.prior_residual_sq(fit.posterior.mean);
  CHECK(fit.b0 == doctest::Approx(q / (8 - 3)).epsilon(1e-12));
  CHECK(fit.scale_posterior.shape == doctest::Approx((8 - 3) / 2.0 + 1.0));
  CHECK_THROWS_AS(fit_nodata_marginal(random_block(6)), InputError);
}

TEST_CASE("non-convergence is an error unless disabled") {
  const LinearBlock b = random_block(7);
  FixedPointOptions o;
  o.max_iter = 1;
  CHECK_THROWS_AS(fit_scalar_gaussian(b, 1.0, 100.0, 1e-12, o), ConvergenceError);
  o.throw_on_failure = false;
  const ScalarFit fit = fit_scalar_gaussian(b, 1.0, 100.0, 1e-12, o);
  CHECK_FALSE(fit.report.converged);
  CHECK(fit.report.iterations == 1);
  CHECK_THROWS_AS(fit_scalar_gaussian(b, 1.0, -1.0, 1e-12, FixedPointOptions{}), InputError);
}

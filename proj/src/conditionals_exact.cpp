#include "hbmu/conditionals_exact.hpp"

#include <cmath>

#include "hbmu/errors.hpp"

namespace hbmu {

namespace {

double pooled_variance(const Vector& values, int n_segments, int per_segment) {
  const double mean_sq = values.squaredNorm() / static_cast<double>(values.size());
  if (n_segments == 1) return 1e-2 * mean_sq;
  double ss = 0.0;
  for (int c = 0; c < per_segment; ++c) {
    double m = 0.0;
    for (int r = 0; r < n_segments; ++r) m += values[r * per_segment + c];
    m /= n_segments;
    for (int r = 0; r < n_segments; ++r) {
      const double d = values[r * per_segment + c] - m;
      ss += d * d;
    }
  }
  const double pooled = ss / (static_cast<double>(per_segment) * (n_segments - 1));
  return std::max(pooled, 1e-6 * mean_sq);
}

double mean_square(const Vector& v) { return v.squaredNorm() / static_cast<double>(v.size()); }

}  // namespace

LinearBlock phi_block(const ModalDataset& data, const StructuralModel& model,
                      const Vector& omega_sq, const Vector& theta) {
  data.check_against(model.n_dof());
  if (omega_sq.size() != data.n_modes()) throw InputError("omega_sq length must equal n_modes");
  Matrix f = build_F(model, omega_sq, theta);
  const auto rows = f.rows();
  return LinearBlock(std::move(f), Vector::Zero(rows), data.gamma_matrix(model.n_dof()),
                     data.mode_shapes());
}

LinearBlock omega_block(const ModalDataset& data, const StructuralModel& model, const Vector& phi,
                        const Vector& theta) {
  data.check_against(model.n_dof());
  if (phi.size() != static_cast<Eigen::Index>(model.n_dof()) * data.n_modes())
    throw InputError("phi length must equal n_dof * n_modes");
  LinearForm gc = build_G_c(model, phi, theta);
  return LinearBlock(std::move(gc.matrix), std::move(gc.rhs), data.t_matrix(), data.freq_sq());
}

LinearBlock theta_block(const StructuralModel& model, const Vector& phi, const Vector& omega_sq,
                        const Vector* theta_hat) {
  LinearForm hb = build_H_b(model, phi, omega_sq);
  const int nt = model.n_theta();
  if (theta_hat) {
    if (theta_hat->size() != nt) throw InputError("theta_hat length must equal n_theta");
    return LinearBlock(std::move(hb.matrix), std::move(hb.rhs), Matrix::Identity(nt, nt),
                       *theta_hat);
  }
  return LinearBlock(std::move(hb.matrix), std::move(hb.rhs), Matrix(0, nt), Vector());
}

double initial_shape_variance(const ModalDataset& data) {
  return pooled_variance(data.mode_shapes(), data.n_segments(),
                         data.n_modes() * data.n_observed());
}

double initial_freq_variance(const ModalDataset& data) {
  return pooled_variance(data.freq_sq(), data.n_segments(), data.n_modes());
}

double shape_variance_floor(const ModalDataset& data) {
  return 1e-12 * mean_square(data.mode_shapes());
}

double freq_variance_floor(const ModalDataset& data) {
  return 1e-12 * mean_square(data.freq_sq());
}

double relevance_floor(const Vector& theta_hat) {
  const double ms = theta_hat.size() ? mean_square(theta_hat) : 0.0;
  return 1e-12 * (ms > 0.0 ? ms : 1.0);
}

ScalarFit solve_phi(const ModalDataset& data, const StructuralModel& model,
                    const Vector& omega_sq, const Vector& theta, double beta,
                    HyperStateExact& hyper, const FixedPointOptions& options) {
  if (!(beta > 0.0)) throw InputError("beta must be positive");
  const LinearBlock block = phi_block(data, model, omega_sq, theta);
  const double init = hyper.eta > 0.0 ? hyper.eta : initial_shape_variance(data);
  ScalarFit fit = fit_scalar_gaussian(block, beta, init, shape_variance_floor(data), options);
  hyper.eta = fit.value;
  return fit;
}

ScalarFit solve_omega2(const ModalDataset& data, const StructuralModel& model, const Vector& phi,
                       const Vector& theta, double beta, HyperStateExact& hyper,
                       const FixedPointOptions& options) {
  if (!(beta > 0.0)) throw InputError("beta must be positive");
  const LinearBlock block = omega_block(data, model, phi, theta);
  const double init = hyper.rho > 0.0 ? hyper.rho : initial_freq_variance(data);
  ScalarFit fit = fit_scalar_gaussian(block, beta, init, freq_variance_floor(data), options);
  hyper.rho = fit.value;
  return fit;
}

ArdFit solve_theta(const StructuralModel& model, const Vector& phi, const Vector& omega_sq,
                   double beta, const Vector* theta_hat, HyperStateExact& hyper,
                   const FixedPointOptions& options) {
  if (!(beta > 0.0)) throw InputError("beta must be positive");
  if (hyper.sparse_mode && !theta_hat)
    throw InputError("sparse mode needs a theta_hat pseudo-datum");
  const LinearBlock block = theta_block(model, phi, omega_sq, hyper.sparse_mode ? theta_hat : nullptr);
  if (!hyper.sparse_mode) {
    ArdFit fit;
    fit.posterior = block_gaussian(block, beta, Vector());
    fit.report.converged = true;
    return fit;
  }
  const int nt = model.n_theta();
  const Vector init = hyper.alpha.size() == nt ? hyper.alpha : Vector::Ones(nt);
  ArdFit fit = fit_ard_gaussian(block, beta, init, relevance_floor(*theta_hat), options);
  hyper.alpha = fit.value;
  hyper.pruned = fit.at_floor;
  return fit;
}

Vector draw_positive(const Vector& mean, const PrecisionFactor& precision, Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Vector x = sample_gaussian(mean, precision, rng);
    if ((x.array() > 0.0).all()) return x;
  }
  throw NumericalError("no positive frequency-squared draw in 1000 attempts");
}

GaussianDraw cond_phi(const ModalDataset& data, const StructuralModel& model,
                      const Vector& omega_sq, const Vector& theta, double beta,
                      HyperStateExact& hyper, Rng& rng, const FixedPointOptions& options) {
  ScalarFit fit = solve_phi(data, model, omega_sq, theta, beta, hyper, options);
  Vector x = sample_gaussian(fit.posterior.mean, fit.posterior.factor, rng);
  return GaussianDraw{std::move(x), GaussianSpec{fit.posterior.mean, fit.posterior.precision},
                      fit.report};
}

GaussianDraw cond_omega2(const ModalDataset& data, const StructuralModel& model,
                         const Vector& phi, const Vector& theta, double beta,
                         HyperStateExact& hyper, Rng& rng, const FixedPointOptions& options) {
  ScalarFit fit = solve_omega2(data, model, phi, theta, beta, hyper, options);
  Vector x = draw_positive(fit.posterior.mean, fit.posterior.factor, rng);
  return GaussianDraw{std::move(x), GaussianSpec{fit.posterior.mean, fit.posterior.precision},
                      fit.report};
}

GaussianDraw cond_theta(const StructuralModel& model, const Vector& phi, const Vector& omega_sq,
                        double beta, const Vector* theta_hat, HyperStateExact& hyper, Rng& rng,
                        const FixedPointOptions& options) {
  ArdFit fit = solve_theta(model, phi, omega_sq, beta, theta_hat, hyper, options);
  Vector x = sample_gaussian(fit.posterior.mean, fit.posterior.factor, rng);
  return GaussianDraw{std::move(x), GaussianSpec{fit.posterior.mean, fit.posterior.precision},
                      fit.report};
}

GammaSpec beta_conditional(const StructuralModel& model, const Vector& phi,
                           const Vector& omega_sq, const Vector& theta, double* b0) {
  const double r = equation_error(model, phi, omega_sq, theta);
  const double n = static_cast<double>(model.n_dof()) * static_cast<double>(omega_sq.size());
  const double rate0 = std::max(r, 1e-300) / n;
  if (b0) *b0 = rate0;
  return GammaSpec{1.0 + 0.5 * n, rate0 + 0.5 * r};
}

BetaDraw cond_beta(const StructuralModel& model, const Vector& phi, const Vector& omega_sq,
                   const Vector& theta, Rng& rng) {
  BetaDraw out;
  out.conditional = beta_conditional(model, phi, omega_sq, theta, &out.b0);
  out.sample = sample_gamma(out.conditional, rng);
  return out;
}

}  // namespace hbmu

#include "hbmu/conditionals_marginal.hpp"

#include "hbmu/errors.hpp"

namespace hbmu {

namespace {

double mean_diag(const Matrix& a) { return a.diagonal().mean(); }

StudentDraw draw(const BlockGaussian& post, const GammaSpec& beta_post,
                 const FixedPointReport& report, bool positive, Rng& rng) {
  StudentDraw out{Vector(), student_conditional(post, beta_post), beta_post, report};
  const PrecisionFactor f(out.conditional.scale_precision);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Vector x = sample_student_t(out.conditional.mean, f, out.conditional.dof, rng);
    if (!positive || (x.array() > 0.0).all()) {
      out.sample = std::move(x);
      return out;
    }
  }
  throw NumericalError("no positive frequency-squared draw in 1000 attempts");
}

}  // namespace

double initial_tau(const LinearBlock& phi_blk, int n_segments) {
  return n_segments / mean_diag(phi_blk.ete());
}

double initial_v(const LinearBlock& omega_blk, int n_segments) {
  return n_segments / mean_diag(omega_blk.ete());
}

double initial_gamma(const LinearBlock& theta_blk) { return 1.0 / mean_diag(theta_blk.ete()); }

ScalarFit solve_phi_marginal(const ModalDataset& data, const StructuralModel& model,
                             const Vector& omega_sq, const Vector& theta,
                             HyperStateMarginal& hyper, const FixedPointOptions& options) {
  const LinearBlock block = phi_block(data, model, omega_sq, theta);
  const double scale = initial_tau(block, data.n_segments());
  const double init = hyper.tau > 0.0 ? hyper.tau : scale;
  ScalarFit fit = fit_scalar_marginal(block, init, 1e-12 * scale, options);
  hyper.tau = fit.value;
  hyper.b0_phi = fit.b0;
  return fit;
}

ScalarFit solve_omega2_marginal(const ModalDataset& data, const StructuralModel& model,
                                const Vector& phi, const Vector& theta,
                                HyperStateMarginal& hyper, const FixedPointOptions& options) {
  const LinearBlock block = omega_block(data, model, phi, theta);
  const double scale = initial_v(block, data.n_segments());
  const double init = hyper.v > 0.0 ? hyper.v : scale;
  ScalarFit fit = fit_scalar_marginal(block, init, 1e-12 * scale, options);
  hyper.v = fit.value;
  hyper.b0_w = fit.b0;
  return fit;
}

ArdFit solve_theta_marginal(const StructuralModel& model, const Vector& phi,
                            const Vector& omega_sq, const Vector* theta_hat,
                            HyperStateMarginal& hyper, const FixedPointOptions& options) {
  if (hyper.sparse_mode && !theta_hat)
    throw InputError("sparse mode needs a theta_hat pseudo-datum");
  const LinearBlock block =
      theta_block(model, phi, omega_sq, hyper.sparse_mode ? theta_hat : nullptr);
  if (!hyper.sparse_mode) {
    ScalarFit nodata = fit_nodata_marginal(block);
    ArdFit fit;
    fit.posterior = std::move(nodata.posterior);
    fit.scale_posterior = nodata.scale_posterior;
    fit.b0 = nodata.b0;
    fit.report = nodata.report;
    hyper.b0_theta = fit.b0;
    return fit;
  }
  const int nt = model.n_theta();
  const double scale = initial_gamma(block);
  const Vector init = hyper.gamma.size() == nt ? hyper.gamma : Vector::Constant(nt, scale);
  ArdFit fit = fit_ard_marginal(block, init, 1e-12 * scale, options);
  hyper.gamma = fit.value;
  hyper.pruned = fit.at_floor;
  hyper.b0_theta = fit.b0;
  return fit;
}

StudentTSpec student_conditional(const BlockGaussian& posterior, const GammaSpec& beta_posterior) {
  return gamma_gaussian_mixture(posterior.mean, posterior.precision, beta_posterior);
}

StudentDraw cond_phi_marginal(const ModalDataset& data, const StructuralModel& model,
                              const Vector& omega_sq, const Vector& theta,
                              HyperStateMarginal& hyper, Rng& rng,
                              const FixedPointOptions& options) {
  const ScalarFit fit = solve_phi_marginal(data, model, omega_sq, theta, hyper, options);
  return draw(fit.posterior, fit.scale_posterior, fit.report, false, rng);
}

StudentDraw cond_omega2_marginal(const ModalDataset& data, const StructuralModel& model,
                                 const Vector& phi, const Vector& theta,
                                 HyperStateMarginal& hyper, Rng& rng,
                                 const FixedPointOptions& options) {
  const ScalarFit fit = solve_omega2_marginal(data, model, phi, theta, hyper, options);
  return draw(fit.posterior, fit.scale_posterior, fit.report, true, rng);
}

StudentDraw cond_theta_marginal(const StructuralModel& model, const Vector& phi,
                                const Vector& omega_sq, const Vector* theta_hat,
                                HyperStateMarginal& hyper, Rng& rng,
                                const FixedPointOptions& options) {
  const ArdFit fit = solve_theta_marginal(model, phi, omega_sq, theta_hat, hyper, options);
  return draw(fit.posterior, fit.scale_posterior, fit.report, false, rng);
}

}  // namespace hbmu

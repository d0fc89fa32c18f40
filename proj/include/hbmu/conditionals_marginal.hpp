#pragma once

// Student-t full conditionals of phi, omega^2 and theta for the sampler that
// integrates beta out. Noise hyperparameters are products with beta
// (tau = beta eta, v = beta rho, gamma = beta alpha) and are fitted jointly with
// the exponential-prior rate b0 of each conditional.

#include <vector>

#include "hbmu/conditionals_exact.hpp"
#include "hbmu/distributions.hpp"
#include "hbmu/fixed_point.hpp"

namespace hbmu {

struct HyperStateMarginal {
  double tau = 0.0;
  double v = 0.0;
  Vector gamma;
  double b0_phi = 0.0;
  double b0_w = 0.0;
  double b0_theta = 0.0;
  bool sparse_mode = false;
  std::vector<bool> pruned;
};

struct StudentDraw {
  Vector sample;
  StudentTSpec conditional;
  GammaSpec beta_posterior;  // Gamma(a, b) that the conditional mixes over
  FixedPointReport report;
};

// Starting values tau0 = N_s / mean diag(F'F), v0 = N_s / mean diag(G'G),
// gamma0 = 1 / mean diag(H'H); floors are 1e-12 of these.
double initial_tau(const LinearBlock& phi_blk, int n_segments);
double initial_v(const LinearBlock& omega_blk, int n_segments);
double initial_gamma(const LinearBlock& theta_blk);

ScalarFit solve_phi_marginal(const ModalDataset& data, const StructuralModel& model,
                             const Vector& omega_sq, const Vector& theta,
                             HyperStateMarginal& hyper, const FixedPointOptions& options = {});
ScalarFit solve_omega2_marginal(const ModalDataset& data, const StructuralModel& model,
                                const Vector& phi, const Vector& theta,
                                HyperStateMarginal& hyper,
                                const FixedPointOptions& options = {});
// Without sparse mode there is no pseudo-datum and the result's `value` is empty.
ArdFit solve_theta_marginal(const StructuralModel& model, const Vector& phi,
                            const Vector& omega_sq, const Vector* theta_hat,
                            HyperStateMarginal& hyper, const FixedPointOptions& options = {});

// St(mu, (a/b) Lambda, 2a) from a fitted block.
StudentTSpec student_conditional(const BlockGaussian& posterior, const GammaSpec& beta_posterior);

StudentDraw cond_phi_marginal(const ModalDataset& data, const StructuralModel& model,
                              const Vector& omega_sq, const Vector& theta,
                              HyperStateMarginal& hyper, Rng& rng,
                              const FixedPointOptions& options = {});
// Redraws (up to 1000 times) until every entry is positive.
StudentDraw cond_omega2_marginal(const ModalDataset& data, const StructuralModel& model,
                                 const Vector& phi, const Vector& theta,
                                 HyperStateMarginal& hyper, Rng& rng,
                                 const FixedPointOptions& options = {});
StudentDraw cond_theta_marginal(const StructuralModel& model, const Vector& phi,
                                const Vector& omega_sq, const Vector* theta_hat,
                                HyperStateMarginal& hyper, Rng& rng,
                                const FixedPointOptions& options = {});

}  // namespace hbmu

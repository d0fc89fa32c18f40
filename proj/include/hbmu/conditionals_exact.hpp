#pragma once

// Gaussian full conditionals of phi, omega^2 and theta, and the Gamma
// conditional of beta, for the sampler that keeps beta as a chain variable.
// Each Gaussian conditional fits its noise hyperparameter by the evidence
// fixed point before drawing.

#include <optional>
#include <vector>

#include "hbmu/distributions.hpp"
#include "hbmu/fixed_point.hpp"
#include "hbmu/model.hpp"

namespace hbmu {

// Hyperparameters carried between Gibbs iterations (warm starts). Zero or
// empty entries mean "not fitted yet" and are initialized from the data.
struct HyperStateExact {
  double eta = 0.0;     // mode-shape noise variance
  double rho = 0.0;     // frequency-squared noise variance
  Vector alpha;         // pseudo-datum variances of theta (sparse mode)
  double b0 = 0.0;      // rate of the exponential prior on beta
  bool sparse_mode = false;
  std::vector<bool> pruned;
};

struct GaussianDraw {
  Vector sample;
  GaussianSpec conditional;
  FixedPointReport report;
};

struct BetaDraw {
  double sample = 0.0;
  GammaSpec conditional;
  double b0 = 0.0;
};

// Blocks for the three vector conditionals:
//   phi:     E = F(omega^2, theta), r = 0,  Theta = Gamma, y = mode shapes
//   omega^2: E = G(phi),            r = c,  Theta = T,     y = frequencies squared
//   theta:   E = H(phi, omega^2),   r = b,  Theta = I,     y = theta_hat (none when not sparse)
LinearBlock phi_block(const ModalDataset& data, const StructuralModel& model,
                      const Vector& omega_sq, const Vector& theta);
LinearBlock omega_block(const ModalDataset& data, const StructuralModel& model, const Vector& phi,
                        const Vector& theta);
LinearBlock theta_block(const StructuralModel& model, const Vector& phi, const Vector& omega_sq,
                        const Vector* theta_hat);

// Data-driven starting values: pooled across-segment variance, floored at
// 1e-6 of the mean square (1e-2 with a single segment).
double initial_shape_variance(const ModalDataset& data);
double initial_freq_variance(const ModalDataset& data);
// Lower bounds of the fitted variances: 1e-12 of the data mean square.
double shape_variance_floor(const ModalDataset& data);
double freq_variance_floor(const ModalDataset& data);
// 1e-12 times the mean square of theta_hat (1e-12 if that is zero).
double relevance_floor(const Vector& theta_hat);

ScalarFit solve_phi(const ModalDataset& data, const StructuralModel& model,
                    const Vector& omega_sq, const Vector& theta, double beta,
                    HyperStateExact& hyper, const FixedPointOptions& options = {});
ScalarFit solve_omega2(const ModalDataset& data, const StructuralModel& model, const Vector& phi,
                       const Vector& theta, double beta, HyperStateExact& hyper,
                       const FixedPointOptions& options = {});
// Without sparse mode the result has an empty `value` and precision beta H'H.
ArdFit solve_theta(const StructuralModel& model, const Vector& phi, const Vector& omega_sq,
                   double beta, const Vector* theta_hat, HyperStateExact& hyper,
                   const FixedPointOptions& options = {});

GaussianDraw cond_phi(const ModalDataset& data, const StructuralModel& model,
                      const Vector& omega_sq, const Vector& theta, double beta,
                      HyperStateExact& hyper, Rng& rng, const FixedPointOptions& options = {});
// Redraws (up to 1000 times) until every entry is positive; NumericalError after that.
GaussianDraw cond_omega2(const ModalDataset& data, const StructuralModel& model,
                         const Vector& phi, const Vector& theta, double beta,
                         HyperStateExact& hyper, Rng& rng,
                         const FixedPointOptions& options = {});
// Sparse mode requires theta_hat.
GaussianDraw cond_theta(const StructuralModel& model, const Vector& phi, const Vector& omega_sq,
                        double beta, const Vector* theta_hat, HyperStateExact& hyper, Rng& rng,
                        const FixedPointOptions& options = {});

// Gamma(1 + N_m N_d / 2, b0 + R / 2) with R the equation error and
// b0 = max(R, 1e-300) / (N_m N_d).
GammaSpec beta_conditional(const StructuralModel& model, const Vector& phi,
                           const Vector& omega_sq, const Vector& theta, double* b0 = nullptr);
BetaDraw cond_beta(const StructuralModel& model, const Vector& phi, const Vector& omega_sq,
                   const Vector& theta, Rng& rng);

// Draws until all entries are positive.
Vector draw_positive(const Vector& mean, const PrecisionFactor& precision, Rng& rng);

}  // namespace hbmu

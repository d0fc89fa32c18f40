#pragma once

// Linear-Gaussian conditional blocks and their MAP hyperparameter fixed points.
//
// A block describes x through
//   prior      p(x) ∝ exp(-s/2 ||E x - r||^2)      (s = beta, or 1 when beta is integrated out)
//   data       y = Theta x + e,  e ~ N(0, diag(nu))
// With nu given, x | y is Gaussian with precision s E'E + Theta' diag(1/nu) Theta.
// The noise variances nu are either one shared scalar or one per data entry
// (relevance determination). They are set by maximizing the evidence, either
// with s fixed (Gaussian conditionals) or with s integrated against its Gamma
// posterior and the exponential-prior rate b0 maximized jointly (Student-t
// conditionals).

#include <optional>
#include <vector>

#include "hbmu/distributions.hpp"
#include "hbmu/model.hpp"

namespace hbmu {

struct FixedPointOptions {
  double tol = 1e-8;  // max relative change of the free components
  int max_iter = 200;  // scalar fits also stop, unconverged, after 35 sweeps without halving the change
  // When false, a fixed point that hits max_iter returns its last iterate and
  // reports converged = false instead of throwing ConvergenceError.
  bool throw_on_failure = true;
  // A scalar that has decreased for this many consecutive sweeps is tested
  // against the floor: if the update map sends the floor below itself, the
  // optimum is on the boundary and the iteration stops there. Runs of increases
  // are tested the same way against the ceiling (1e20 x floor).
  int snap_after = 20;
};

struct FixedPointReport {
  int iterations = 0;
  bool converged = false;
  double last_change = 0.0;
  int n_floored = 0;
};

class LinearBlock {
 public:
  // theta may have zero rows (no data for this block).
  LinearBlock(Matrix e, Vector r, Matrix theta, Vector y);

  Eigen::Index dim() const { return e_.cols(); }
  Eigen::Index n_data() const { return theta_.rows(); }
  Eigen::Index n_prior_rows() const { return e_.rows(); }

  const Matrix& e() const { return e_; }
  const Vector& r() const { return r_; }
  const Matrix& theta() const { return theta_; }
  const Vector& y() const { return y_; }
  const Matrix& ete() const { return ete_; }
  const Vector& etr() const { return etr_; }
  const Matrix& ttt() const { return ttt_; }
  const Vector& tty() const { return tty_; }

  // ||y - Theta x||^2 and ||E x - r||^2.
  double data_residual_sq(const Vector& x) const { return (y_ - theta_ * x).squaredNorm(); }
  double prior_residual_sq(const Vector& x) const { return (e_ * x - r_).squaredNorm(); }

  // Shape of the Gamma posterior of s when s is integrated out:
  // (rows(E) + n_data - dim) / 2 + 1.
  double marginal_shape() const;

 private:
  Matrix e_;
  Vector r_;
  Matrix theta_;
  Vector y_;
  Matrix ete_;
  Vector etr_;
  Matrix ttt_;
  Vector tty_;
};

struct BlockGaussian {
  Vector mean;
  Matrix precision;
  PrecisionFactor factor;
};

// Posterior of x for given prior scale s and noise variances.
BlockGaussian block_gaussian(const LinearBlock& block, double prior_scale, double noise_var);
BlockGaussian block_gaussian(const LinearBlock& block, double prior_scale, const Vector& noise_var);

// Rate of the Gamma posterior of s after integrating it out with rate b0:
// Q / 2 + b0 with Q = (y - Theta mu)' diag(1/nu) (y - Theta mu) + ||E mu - r||^2.
double marginal_quadratic(const LinearBlock& block, const Vector& mean, const Vector& noise_var);

// Evidence objectives up to additive constants independent of the
// hyperparameters. The Gaussian form is the log marginal density of y given s;
// the marginal form is log b0 - 1/2 log|diag(nu) + Theta (E'E)^{-1} Theta'| - a log(Q/2 + b0).
double evidence_gaussian(const LinearBlock& block, double prior_scale, const Vector& noise_var);
double evidence_marginal(const LinearBlock& block, const Vector& noise_var, double b0);

struct ScalarFit {
  double value = 0.0;  // shared noise variance at the fixed point
  bool at_floor = false;
  bool at_ceiling = false;  // pinned at 1e20 x floor: the data carry no weight
  BlockGaussian posterior;
  // Student-t fits only: Gamma posterior of s and the MAP b0.
  GammaSpec scale_posterior;
  double b0 = 0.0;
  FixedPointReport report;
};

struct ArdFit {
  Vector value;                 // per-entry noise variances
  std::vector<bool> at_floor;   // pruned entries
  BlockGaussian posterior;
  GammaSpec scale_posterior;
  double b0 = 0.0;
  FixedPointReport report;
};

// Shared-variance fixed point
//   nu <- [tr(Sigma Theta'Theta) + w ||y - Theta mu||^2] / n_data
// with w = 1 for the Gaussian form and w = a / b for the Student-t form.
ScalarFit fit_scalar_gaussian(const LinearBlock& block, double prior_scale, double init,
                              double floor, const FixedPointOptions& options);
ScalarFit fit_scalar_marginal(const LinearBlock& block, double init, double floor,
                              const FixedPointOptions& options);

// Per-entry fixed point nu_k <- (Theta Sigma Theta')_kk + w (y - Theta mu)_k^2,
// reached by coordinate ascent: each entry in turn moves to the exact optimum
// of the evidence with the others held, which is a fixed point of that update.
// An entry whose optimum lies at or below the floor is pruned to the floor and
// restored once its optimum rises above it again; entries are capped at
// 1e20 x floor.
ArdFit fit_ard_gaussian(const LinearBlock& block, double prior_scale, const Vector& init,
                        double floor, const FixedPointOptions& options);
ArdFit fit_ard_marginal(const LinearBlock& block, const Vector& init, double floor,
                        const FixedPointOptions& options);

// Student-t block without data (n_data = 0): no hyperparameters besides b0.
ScalarFit fit_nodata_marginal(const LinearBlock& block);

}  // namespace hbmu

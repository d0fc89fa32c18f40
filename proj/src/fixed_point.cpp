#include "hbmu/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "hbmu/errors.hpp"

namespace hbmu {

namespace {

constexpr double kTiny = std::numeric_limits<double>::min();
// With floors at 1e-12 of the working scale this caps variances near 1e8 of it.
// Past that the posterior solve is left with fewer than half the digits.
constexpr double kCeilingRatio = 1e20;
constexpr int kStallWindow = 35;
// Longest extrapolated move, in units of the last plain step. A ratio near one
// predicts a jump far past where the map is still informative.
constexpr double kMaxAitkenSteps = 20.0;

void check_positive_init(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw InputError(std::string(what) + " must be positive and finite");
}

// Everything one sweep of a fixed point needs at the current iterate.
struct Sweep {
  BlockGaussian post;
  Vector resid;         // y - Theta mu
  Vector fitted_var;    // diag(Theta Sigma Theta')
  double weight = 1.0;  // 1, or a/b for the Student-t form
  double quadratic = 0.0;
};

Sweep sweep(const LinearBlock& block, double s, bool marginal, const Vector& nu) {
  Sweep out{block_gaussian(block, s, nu), Vector(), Vector(), 1.0, 0.0};
  out.resid = block.y() - block.theta() * out.post.mean;
  const Matrix cov = out.post.factor.covariance();
  const Matrix tc = block.theta() * cov;
  out.fitted_var = (tc.array() * block.theta().array()).rowwise().sum();
  if (marginal) {
    out.quadratic = std::max(marginal_quadratic(block, out.post.mean, nu), kTiny);
    out.weight = 2.0 * (block.marginal_shape() - 1.0) / out.quadratic;
  }
  return out;
}

double scalar_target(const Sweep& sw) {
  const double k = static_cast<double>(sw.resid.size());
  return (sw.fitted_var.sum() + sw.weight * sw.resid.squaredNorm()) / k;
}

GammaSpec scale_posterior(const LinearBlock& block, double quadratic, double* b0) {
  const double a = block.marginal_shape();
  *b0 = quadratic / (2.0 * (a - 1.0));
  return GammaSpec{a, 0.5 * quadratic + *b0};
}

[[noreturn]] void fail(const char* what, const FixedPointReport& report) {
  std::ostringstream msg;
  msg << what << " fixed point did not converge in " << report.iterations
      << " iterations (last relative change " << report.last_change << ")";
  throw ConvergenceError(msg.str(), report.iterations, report.last_change);
}

ScalarFit fit_scalar(const LinearBlock& block, double s, bool marginal, double init,
                     double floor, const FixedPointOptions& opt) {
  if (block.n_data() == 0) throw InputError("shared-variance fit needs data");
  check_positive_init(init, "initial noise variance");
  floor = std::max(floor, kTiny);
  const Eigen::Index k = block.n_data();
  auto at = [&](double v) { return sweep(block, s, marginal, Vector::Constant(k, v)); };

  // Symmetric bound for evidence that keeps rising as the data are discounted.
  const double ceiling = floor * kCeilingRatio;
  double kappa = std::clamp(init, floor, ceiling);
  FixedPointReport report;
  int decreasing = 0;
  int increasing = 0;
  std::vector<double> trail;
  double best_change = std::numeric_limits<double>::infinity();
  int best_it = 0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    report.iterations = it;
    const double target = scalar_target(at(kappa));
    const double next = std::clamp(target, floor, ceiling);
    if ((kappa <= floor && target <= floor) || (kappa >= ceiling && target >= ceiling)) {
      report.converged = true;
      report.last_change = 0.0;
      break;
    }
    report.last_change = std::abs(next - kappa) / kappa;
    decreasing = next < kappa ? decreasing + 1 : 0;
    increasing = next > kappa ? increasing + 1 : 0;
    kappa = next;
    if (report.last_change < opt.tol) {
      report.converged = true;
      break;
    }
    // Stalled at the map's rounding noise: give up early, still unconverged.
    if (report.last_change < 0.5 * best_change) {
      best_change = report.last_change;
      best_it = it;
    } else if (it - best_it >= kStallWindow) {
      break;
    }
    // Plain updates contract linearly and can crawl; extrapolate geometrically in
    // log space once three monotone iterates are available. Steps that do not
    // shrink mean a distant fixed point, so they take the longest move.
    trail.push_back(std::log(kappa));
    if (trail.size() == 3) {
      const double d1 = trail[1] - trail[0];
      const double d2 = trail[2] - trail[1];
      trail.erase(trail.begin(), trail.begin() + 2);
      if (d1 * d2 > 0.0) {
        const double r = d2 / d1;
        const double jump = (r < 1.0 ? std::min(r / (1.0 - r), kMaxAitkenSteps) : kMaxAitkenSteps) * d2;
        kappa = std::clamp(std::exp(trail[0] + jump), floor, ceiling);
        trail[0] = std::log(kappa);
      }
    }
    if (increasing >= opt.snap_after && (increasing - opt.snap_after) % 10 == 0 &&
        kappa < ceiling && scalar_target(at(ceiling)) >= ceiling) {
      kappa = ceiling;
      report.converged = true;
      report.last_change = 0.0;
      break;
    }
    if (decreasing >= opt.snap_after && (decreasing - opt.snap_after) % 10 == 0 &&
        kappa > floor && scalar_target(at(floor)) <= floor) {
      kappa = floor;
      report.converged = true;
      break;
    }
  }
  if (!report.converged && opt.throw_on_failure)
    fail(marginal ? "Student-t noise variance" : "noise variance", report);

  Sweep final = at(kappa);
  ScalarFit fit;
  fit.value = kappa;
  fit.at_floor = kappa <= floor;
  fit.at_ceiling = kappa >= ceiling;
  report.n_floored = fit.at_floor ? 1 : 0;
  fit.report = report;
  if (marginal) fit.scale_posterior = scale_posterior(block, final.quadratic, &fit.b0);
  fit.posterior = std::move(final.post);
  return fit;
}

// Exact optimum of the evidence over entry `k` alone, the others held at nu.
// The leave-one-out system is assembled directly: subtracting a floored
// entry's 1/nu term from the full precision would cancel catastrophically.
double coordinate_optimum(const LinearBlock& block, double s, bool marginal, const Vector& nu,
                          Eigen::Index k) {
  const Vector row = block.theta().row(k).transpose();
  Vector inv = nu.cwiseInverse();
  inv[k] = 0.0;
  Matrix p = s * block.ete();
  p.noalias() += block.theta().transpose() * inv.asDiagonal() * block.theta();
  const Vector rhs = s * block.etr() + block.theta().transpose() * inv.cwiseProduct(block.y());
  try {
    const PrecisionFactor f(p);
    const Vector mu = f.solve(rhs);
    const double e = block.y()[k] - row.dot(mu);
    const double spread = row.dot(f.solve(row));
    if (!marginal) return e * e - spread;
    Vector resid = block.y() - block.theta() * mu;
    resid[k] = 0.0;
    const double q = resid.cwiseAbs2().cwiseQuotient(nu).sum() + block.prior_residual_sq(mu);
    const double a = block.marginal_shape();
    return (2.0 * a - 3.0) * e * e / std::max(q, kTiny) - spread;
  } catch (const NumericalError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

ArdFit fit_ard(const LinearBlock& block, double s, bool marginal, const Vector& init,
               double floor, const FixedPointOptions& opt) {
  const Eigen::Index k = block.n_data();
  if (k == 0) throw InputError("per-entry fit needs data");
  if (init.size() != k) throw InputError("initial variance vector has the wrong length");
  for (Eigen::Index i = 0; i < k; ++i) check_positive_init(init[i], "initial noise variance");
  floor = std::max(floor, kTiny);

  const double ceiling = floor * kCeilingRatio;
  Vector nu = init.cwiseMax(floor).cwiseMin(ceiling);
  FixedPointReport report;
  // Gauss-Seidel over entries, each moved to its exact one-coordinate optimum.
  // A fixed point of this sweep is a fixed point of the EM update as well.
  for (int it = 1; it <= opt.max_iter; ++it) {
    report.iterations = it;
    bool status_changed = false;
    double change = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      const double opt_i = coordinate_optimum(block, s, marginal, nu, i);
      double v;
      if (!std::isfinite(opt_i)) {
        const Sweep sw = sweep(block, s, marginal, nu);
        v = sw.fitted_var[i] + sw.weight * sw.resid[i] * sw.resid[i];
      } else {
        v = opt_i;
      }
      v = std::clamp(v, floor, ceiling);
      const bool was_bound = nu[i] <= floor || nu[i] >= ceiling;
      const bool now_bound = v <= floor || v >= ceiling;
      if (now_bound != was_bound || (now_bound && v != nu[i])) status_changed = true;
      if (!now_bound && !was_bound) change = std::max(change, std::abs(v - nu[i]) / nu[i]);
      nu[i] = v;
    }
    report.last_change = change;
    if (!status_changed && change < opt.tol) {
      report.converged = true;
      break;
    }
  }
  if (!report.converged && opt.throw_on_failure)
    fail(marginal ? "Student-t relevance" : "relevance", report);

  Sweep final = sweep(block, s, marginal, nu);
  ArdFit fit;
  fit.value = nu;
  fit.at_floor.resize(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    fit.at_floor[static_cast<std::size_t>(i)] = nu[i] <= floor;
    if (nu[i] <= floor) ++report.n_floored;
  }
  fit.report = report;
  if (marginal) fit.scale_posterior = scale_posterior(block, final.quadratic, &fit.b0);
  fit.posterior = std::move(final.post);
  return fit;
}

}  // namespace

LinearBlock::LinearBlock(Matrix e, Vector r, Matrix theta, Vector y)
    : e_(std::move(e)), r_(std::move(r)), theta_(std::move(theta)), y_(std::move(y)) {
  if (r_.size() != e_.rows()) throw InputError("prior rhs length must match rows of E");
  if (theta_.rows() > 0 && theta_.cols() != e_.cols())
    throw InputError("observation matrix must have as many columns as E");
  if (y_.size() != theta_.rows()) throw InputError("data length must match observation rows");
  if (theta_.rows() == 0) theta_.resize(0, e_.cols());
  ete_ = e_.transpose() * e_;
  etr_ = e_.transpose() * r_;
  ttt_ = theta_.transpose() * theta_;
  tty_ = theta_.transpose() * y_;
}

double LinearBlock::marginal_shape() const {
  return 0.5 * static_cast<double>(n_prior_rows() + n_data() - dim()) + 1.0;
}

BlockGaussian block_gaussian(const LinearBlock& block, double prior_scale, double noise_var) {
  Matrix p = prior_scale * block.ete();
  p.noalias() += block.ttt() / noise_var;
  const Vector rhs = prior_scale * block.etr() + block.tty() / noise_var;
  PrecisionFactor f(p);
  Vector mean = f.solve(rhs);
  return BlockGaussian{std::move(mean), std::move(p), std::move(f)};
}

BlockGaussian block_gaussian(const LinearBlock& block, double prior_scale,
                             const Vector& noise_var) {
  if (noise_var.size() != block.n_data())
    throw InputError("noise variance vector has the wrong length");
  const Vector inv = noise_var.cwiseInverse();
  Matrix p = prior_scale * block.ete();
  p.noalias() += block.theta().transpose() * inv.asDiagonal() * block.theta();
  const Vector rhs = prior_scale * block.etr() +
                     block.theta().transpose() * inv.cwiseProduct(block.y());
  PrecisionFactor f(p);
  Vector mean = f.solve(rhs);
  return BlockGaussian{std::move(mean), std::move(p), std::move(f)};
}

double marginal_quadratic(const LinearBlock& block, const Vector& mean, const Vector& noise_var) {
  const Vector resid = block.y() - block.theta() * mean;
  return resid.cwiseAbs2().cwiseQuotient(noise_var).sum() + block.prior_residual_sq(mean);
}

double evidence_gaussian(const LinearBlock& block, double prior_scale, const Vector& noise_var) {
  const BlockGaussian g = block_gaussian(block, prior_scale, noise_var);
  const Vector resid = block.y() - block.theta() * g.mean;
  return -0.5 * (noise_var.array().log().sum() + g.factor.log_det() +
                 resid.cwiseAbs2().cwiseQuotient(noise_var).sum() +
                 prior_scale * block.prior_residual_sq(g.mean));
}

double evidence_marginal(const LinearBlock& block, const Vector& noise_var, double b0) {
  const BlockGaussian g = block_gaussian(block, 1.0, noise_var);
  const double q = marginal_quadratic(block, g.mean, noise_var);
  const double a = block.marginal_shape();
  return std::log(b0) - 0.5 * (noise_var.array().log().sum() + g.factor.log_det()) -
         a * std::log(0.5 * q + b0);
}

ScalarFit fit_scalar_gaussian(const LinearBlock& block, double prior_scale, double init,
                              double floor, const FixedPointOptions& options) {
  return fit_scalar(block, prior_scale, false, init, floor, options);
}

ScalarFit fit_scalar_marginal(const LinearBlock& block, double init, double floor,
                              const FixedPointOptions& options) {
  return fit_scalar(block, 1.0, true, init, floor, options);
}

ArdFit fit_ard_gaussian(const LinearBlock& block, double prior_scale, const Vector& init,
                        double floor, const FixedPointOptions& options) {
  return fit_ard(block, prior_scale, false, init, floor, options);
}

ArdFit fit_ard_marginal(const LinearBlock& block, const Vector& init, double floor,
                        const FixedPointOptions& options) {
  return fit_ard(block, 1.0, true, init, floor, options);
}

ScalarFit fit_nodata_marginal(const LinearBlock& block) {
  if (block.n_data() != 0) throw InputError("block has data; use a variance fit");
  if (block.marginal_shape() <= 1.0)
    throw InputError("Student-t conditional needs more equation rows than unknowns");
  ScalarFit fit;
  fit.posterior = block_gaussian(block, 1.0, Vector());
  fit.report.converged = true;
  const double q = std::max(block.prior_residual_sq(fit.posterior.mean), kTiny);
  fit.scale_posterior = scale_posterior(block, q, &fit.b0);
  return fit;
}

}  // namespace hbmu

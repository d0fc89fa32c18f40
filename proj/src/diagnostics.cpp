#include "hbmu/diagnostics.hpp"

#include <cmath>
#include <limits>

#include "hbmu/errors.hpp"

namespace hbmu {

double batch_means_variance(const Eigen::Ref<const Vector>& x) {
  const Eigen::Index n = x.size();
  if (n < 2) return 0.0;
  const Eigen::Index batches = std::min<Eigen::Index>(20, n);
  const Eigen::Index len = n / batches;
  const Eigen::Index skip = n - batches * len;
  Vector means(batches);
  for (Eigen::Index b = 0; b < batches; ++b) means[b] = x.segment(skip + b * len, len).mean();
  const double m = means.mean();
  const double var = (means.array() - m).square().sum() / static_cast<double>(batches - 1);
  return var / static_cast<double>(batches);
}

double mc_standard_error(const Eigen::Ref<const Vector>& x) {
  return std::sqrt(batch_means_variance(x));
}

BurnInResult detect_burn_in(const Matrix& samples, long window, double z_threshold) {
  const long n = static_cast<long>(samples.rows());
  const Eigen::Index p = samples.cols();
  if (window <= 0) window = std::max<long>(1, n / 10);
  if (n <= 2 * window)
    throw InputError("burn-in detection needs more than two windows of samples");

  BurnInResult out;
  out.window = window;
  const long step = std::max<long>(1, window / 10);
  for (long s = 0; s <= n - 2 * window; s += step) out.starts.push_back(s);
  out.z.resize(static_cast<Eigen::Index>(out.starts.size()), p);

  const auto tail = samples.bottomRows(window);
  Vector tail_mean(p), tail_var(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    tail_mean[j] = tail.col(j).mean();
    tail_var[j] = batch_means_variance(tail.col(j));
  }

  out.index = n;
  out.stationary = false;
  for (std::size_t k = 0; k < out.starts.size(); ++k) {
    bool ok = true;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double diff = samples.col(j).segment(out.starts[k], window).mean() - tail_mean[j];
      double z;
      if (diff == 0.0)
        z = 0.0;
      else if (tail_var[j] <= 0.0)
        z = std::numeric_limits<double>::infinity();
      else
        z = diff / std::sqrt(2.0 * tail_var[j]);
      out.z(static_cast<Eigen::Index>(k), j) = z;
      if (!(std::abs(z) < z_threshold)) ok = false;
    }
    if (ok && !out.stationary) {
      out.index = out.starts[k];
      out.stationary = true;
    }
  }
  return out;
}

BurnInResult detect_burn_in(const Chain& chain, long window, double z_threshold) {
  return detect_burn_in(chain.theta, window, z_threshold);
}

double split_rhat(const std::vector<Vector>& chains) {
  if (chains.empty()) throw InputError("split-R-hat needs at least one chain");
  const Eigen::Index len = chains.front().size() / 2;
  if (len < 2) throw InputError("split-R-hat needs at least four draws per chain");
  std::vector<Vector> halves;
  for (const auto& c : chains) {
    if (c.size() != chains.front().size()) throw InputError("chains must have equal length");
    halves.push_back(c.segment(c.size() - 2 * len, len));
    halves.push_back(c.segment(c.size() - len, len));
  }
  const double m = static_cast<double>(halves.size());
  const double nl = static_cast<double>(len);
  Vector means(halves.size());
  double w = 0.0;
  for (std::size_t i = 0; i < halves.size(); ++i) {
    means[static_cast<Eigen::Index>(i)] = halves[i].mean();
    w += (halves[i].array() - halves[i].mean()).square().sum() / (nl - 1.0);
  }
  w /= m;
  const double b = nl * (means.array() - means.mean()).square().sum() / (m - 1.0);
  if (!(w > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double var_plus = (nl - 1.0) / nl * w + b / nl;
  return std::sqrt(var_plus / w);
}

ErgodicityReport ergodicity_report(const std::vector<Chain>& chains, long burn_in) {
  if (chains.size() < 2) throw InputError("ergodicity report needs at least two chains");
  const Eigen::Index nt = chains.front().theta.cols();
  const long n = chains.front().size();
  if (burn_in < 0 || n - burn_in < 4) throw InputError("burn-in leaves fewer than four draws");
  for (const auto& c : chains)
    if (c.size() != n || c.theta.cols() != nt) throw InputError("chains must have equal shape");

  ErgodicityReport rep;
  rep.labels = chains.front().theta_labels;
  rep.burn_in = burn_in;
  rep.rhat.resize(nt);
  const auto nc = static_cast<Eigen::Index>(chains.size());
  rep.chain_means.resize(nc, nt);
  rep.chain_se.resize(nc, nt);
  rep.max_mean_separation = Vector::Zero(nt);

  bool identical = true;
  for (std::size_t c = 1; c < chains.size(); ++c)
    if (chains[c].theta != chains.front().theta) identical = false;
  rep.degenerate = identical;

  for (Eigen::Index j = 0; j < nt; ++j) {
    std::vector<Vector> cols;
    for (Eigen::Index c = 0; c < nc; ++c) {
      const Vector x = chains[static_cast<std::size_t>(c)].theta.col(j).tail(n - burn_in);
      rep.chain_means(c, j) = x.mean();
      rep.chain_se(c, j) = mc_standard_error(x);
      cols.push_back(x);
    }
    rep.rhat[j] = identical ? std::numeric_limits<double>::quiet_NaN() : split_rhat(cols);
    for (Eigen::Index a = 0; a < nc; ++a) {
      for (Eigen::Index b = a + 1; b < nc; ++b) {
        const double se = std::hypot(rep.chain_se(a, j), rep.chain_se(b, j));
        const double d = std::abs(rep.chain_means(a, j) - rep.chain_means(b, j));
        const double sep = d == 0.0 ? 0.0 : (se > 0.0 ? d / se : std::numeric_limits<double>::infinity());
        rep.max_mean_separation[j] = std::max(rep.max_mean_separation[j], sep);
      }
    }
  }
  return rep;
}

}  // namespace hbmu

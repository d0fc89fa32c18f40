#include "hbmu/damage.hpp"

#include "hbmu/errors.hpp"

namespace hbmu {

namespace {

constexpr std::uint64_t kResampleStream = 0x7265736d706cULL;

}  // namespace

Chain calibrate(const ModalDataset& data_u, const StructuralModel& model,
                const GibbsConfig& config) {
  if (config.sparse_mode && !config.theta_hat)
    throw InputError("sparse calibration needs theta_hat");
  Rng rng(config.seed, 0);
  return run_chain(data_u, model, config, rng);
}

MonitorResult monitor(const ModalDataset& data_d, const StructuralModel& model,
                      const Chain& calibration, const GibbsConfig& config,
                      const MonitorOptions& options) {
  if (calibration.theta.cols() != model.n_theta())
    throw InputError("calibration chain does not match the model's parameter count");
  if (config.n_samples < 1) throw InputError("n_samples must be at least 1");
  MonitorResult out;
  const long nc = calibration.size();
  if (options.calibration_burn_in) {
    out.calibration_burn_in = *options.calibration_burn_in;
  } else {
    // A chain that never passes the scan keeps its second half.
    const BurnInResult b = nc > 20 ? detect_burn_in(calibration) : BurnInResult{};
    out.calibration_stationary = b.stationary;
    out.calibration_burn_in = b.stationary ? b.index : nc / 2;
  }
  if (out.calibration_burn_in < 0 || out.calibration_burn_in > nc)
    throw InputError("calibration burn-in outside the chain");
  const Matrix pool = calibration.theta_after(out.calibration_burn_in);
  const long need = std::min<long>(100, config.n_samples);
  if (pool.rows() < need)
    throw InputError("calibration pool has " + std::to_string(pool.rows()) +
                     " post-burn-in draws; at least " + std::to_string(need) + " required");
  out.calibration_mean = pool.colwise().mean().transpose();

  out.warmup = options.warmup ? *options.warmup
                              : std::max(out.calibration_burn_in, config.n_samples / 10);
  if (out.warmup < 0) throw InputError("warmup must be non-negative");
  const long total = out.warmup + config.n_samples;

  Rng resample(config.seed, kResampleStream);
  const long n_draws = options.inject_during_burnin ? total : config.n_samples;
  Matrix draws(n_draws, model.n_theta());
  for (long n = 0; n < n_draws; ++n)
    draws.row(n) = pool.row(static_cast<Eigen::Index>(resample.index(static_cast<std::size_t>(pool.rows()))));

  GibbsConfig mc = config;
  mc.sparse_mode = true;
  mc.n_samples = total;
  mc.theta_hat = out.calibration_mean;
  if (!mc.theta_init) mc.theta_init = out.calibration_mean;
  RunHooks hooks;
  if (!options.laplace_shortcut) {
    const long warm = out.warmup;
    const Vector mean = out.calibration_mean;
    if (options.inject_during_burnin)
      hooks.theta_hat = [&draws](long n) -> Vector { return draws.row(n).transpose(); };
    else
      hooks.theta_hat = [&draws, warm, mean](long n) -> Vector {
        return n < warm ? mean : Vector(draws.row(n - warm).transpose());
      };
  }
  Rng rng(config.seed, 0);
  out.chain = run_chain(data_d, model, mc, rng, hooks);

  out.pairs.labels = model.labels();
  out.pairs.theta_d = out.chain.theta.bottomRows(config.n_samples);
  out.pairs.theta_u = draws.bottomRows(config.n_samples);
  return out;
}

Vector default_fraction_grid() { return Vector::LinSpaced(101, -0.5, 1.0); }

DamageCurves damage_probability(const PairedSamples& pairs, const Vector& fractions) {
  if (pairs.theta_u.rows() == 0) throw InputError("no paired samples");
  if (pairs.theta_u.rows() != pairs.theta_d.rows() || pairs.theta_u.cols() != pairs.theta_d.cols())
    throw InputError("paired sample matrices differ in shape");
  const Eigen::Index n = pairs.theta_u.rows();
  const Eigen::Index nt = pairs.theta_u.cols();
  DamageCurves out{fractions, Matrix::Zero(nt, fractions.size()), pairs.labels};
  for (Eigen::Index j = 0; j < nt; ++j) {
    for (Eigen::Index k = 0; k < fractions.size(); ++k) {
      const double keep = 1.0 - fractions[k];
      long count = 0;
      for (Eigen::Index r = 0; r < n; ++r)
        if (pairs.theta_d(r, j) < keep * pairs.theta_u(r, j)) ++count;
      out.probabilities(j, k) = static_cast<double>(count) / static_cast<double>(n);
    }
  }
  return out;
}

DamageCurves damage_probability(const PairedSamples& pairs) {
  return damage_probability(pairs, default_fraction_grid());
}

std::vector<MedianLoss> median_loss(const DamageCurves& curves) {
  std::vector<MedianLoss> out;
  const Vector& f = curves.fractions;
  const Eigen::Index g = f.size();
  if (g == 0) throw InputError("empty fraction grid");
  for (Eigen::Index j = 0; j < curves.probabilities.rows(); ++j) {
    const auto p = curves.probabilities.row(j);
    MedianLoss m{f[g - 1], false};
    if (p[0] < 0.5) {
      m = {f[0], false};
    } else {
      for (Eigen::Index k = 0; k < g; ++k) {
        if (p[k] == 0.5) {
          m = {f[k], true};
          break;
        }
        if (p[k] < 0.5) {
          const double t = (p[k - 1] - 0.5) / (p[k - 1] - p[k]);
          m = {f[k - 1] + t * (f[k] - f[k - 1]), true};
          break;
        }
      }
    }
    out.push_back(m);
  }
  return out;
}

}  // namespace hbmu

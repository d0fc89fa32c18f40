#pragma once

// Calibration / monitoring workflow and damage probability curves
//   P_j(f) = (1/N) sum_n I[theta_d(n)_j < (1 - f) theta_u(n)_j].

#include <optional>
#include <string>
#include <vector>

#include "hbmu/gibbs.hpp"

namespace hbmu {

struct PairedSamples {
  Matrix theta_u;  // N x N_theta, calibration draws in the order they were consumed
  Matrix theta_d;  // N x N_theta, monitoring draws, row-paired with theta_u
  std::vector<std::string> labels;
};

struct DamageCurves {
  Vector fractions;
  Matrix probabilities;  // N_theta x fractions.size()
  std::vector<std::string> labels;
};

struct MedianLoss {
  double value = 0.0;
  bool bracketed = true;  // false when P never crosses 0.5 on the grid (value clamped to an end)
};

// Runs the configured algorithm on calibration data. Sparse mode needs config.theta_hat.
Chain calibrate(const ModalDataset& data_u, const StructuralModel& model,
                const GibbsConfig& config);

struct MonitorOptions {
  // Calibration samples before this index are discarded; detected when absent
  // (half the chain when the scan finds no stationary start).
  std::optional<long> calibration_burn_in;
  // Monitoring iterations run with theta_hat fixed at the calibration mean before
  // pool draws are injected; default max(calibration burn-in, n_samples / 10).
  std::optional<long> warmup;
  // Inject pool draws from the first iteration instead of after the warmup.
  bool inject_during_burnin = false;
  // Use the calibration mean as theta_hat throughout (pairs still use pool draws).
  bool laplace_shortcut = false;
};

struct MonitorResult {
  PairedSamples pairs;
  Chain chain;  // full monitoring chain, warmup included
  long calibration_burn_in = 0;
  bool calibration_stationary = true;  // false when detection failed and half the chain was kept
  long warmup = 0;
  Vector calibration_mean;
};

// Sparse-mode monitoring run. At pairing iteration n the pseudo-datum is
// theta_u(n), drawn with replacement from the post-burn-in calibration pool.
// Throws InputError when that pool holds fewer than min(100, n_samples) draws.
MonitorResult monitor(const ModalDataset& data_d, const StructuralModel& model,
                      const Chain& calibration, const GibbsConfig& config,
                      const MonitorOptions& options = {});

// 101 points on [-0.5, 1].
Vector default_fraction_grid();

DamageCurves damage_probability(const PairedSamples& pairs, const Vector& fractions);
DamageCurves damage_probability(const PairedSamples& pairs);

// f at which each curve crosses 0.5, linearly interpolated on the grid.
std::vector<MedianLoss> median_loss(const DamageCurves& curves);

}  // namespace hbmu

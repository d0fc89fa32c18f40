#pragma once

// Burn-in detection, split-R-hat and Monte-Carlo standard errors.

#include <optional>
#include <string>
#include <vector>

#include "hbmu/chain.hpp"
#include "hbmu/model.hpp"

namespace hbmu {

struct BurnInResult {
  long index = 0;
  bool stationary = true;  // false when no start index passed; index is then the chain length
  long window = 0;
  std::vector<long> starts;  // scanned window starts
  Matrix z;                  // starts.size() x n_params, z-score of each scanned window
};

// Geweke-style scan. For each start s (step max(1, window/10), up to n - 2 window)
// compares the mean of rows [s, s + window) with the mean of the final window:
//   z = (mean_s - mean_final) / sqrt(2 V),
// V the batch-means variance of the final-window mean. Returns the first s
// with |z| < z_threshold for every column. window = 0 selects 10% of the chain.
BurnInResult detect_burn_in(const Matrix& samples, long window = 0, double z_threshold = 2.0);
BurnInResult detect_burn_in(const Chain& chain, long window = 0, double z_threshold = 2.0);

// Batch-means estimate of the variance of the sample mean
// (min(20, n) equal batches, remainder dropped from the front).
double batch_means_variance(const Eigen::Ref<const Vector>& x);
double mc_standard_error(const Eigen::Ref<const Vector>& x);

// Split-R-hat over chains of equal length (each split in halves). NaN when
// the within-chain variance vanishes.
double split_rhat(const std::vector<Vector>& chains);

struct ErgodicityReport {
  std::vector<std::string> labels;
  long burn_in = 0;
  Vector rhat;                     // per theta component
  Matrix chain_means;              // n_chains x N_theta, post burn-in
  Matrix chain_se;                 // matching Monte-Carlo standard errors
  Vector max_mean_separation;      // max over chain pairs of |m_a - m_b| / sqrt(se_a^2 + se_b^2)
  bool degenerate = false;         // chains identical: R-hat is undefined
};

ErgodicityReport ergodicity_report(const std::vector<Chain>& chains, long burn_in);

}  // namespace hbmu

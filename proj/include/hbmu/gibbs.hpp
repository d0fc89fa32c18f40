#pragma once

// Gibbs samplers. The exact algorithm updates phi, omega^2, beta, theta in that
// order each iteration; the marginal algorithm updates phi, omega^2, theta.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "hbmu/chain.hpp"
#include "hbmu/conditionals_exact.hpp"
#include "hbmu/conditionals_marginal.hpp"
#include "hbmu/diagnostics.hpp"
#include "hbmu/distributions.hpp"
#include "hbmu/model.hpp"

namespace hbmu {

struct GibbsConfig {
  Algorithm algorithm = Algorithm::exact;
  long n_samples = 1000;
  std::uint64_t seed = 0;
  int n_chains = 1;
  bool sparse_mode = false;
  double beta_init = 100.0;
  // Starting theta; defaults to theta_hat when given, otherwise all ones.
  std::optional<Vector> theta_init;
  // Pseudo-datum for sparse mode, used at every iteration unless a schedule is given.
  std::optional<Vector> theta_hat;
  FixedPointOptions fixed_point;
  bool store_phi = true;
  // Per-chain seeds for run_parallel_chains; when empty chain c uses stream c of `seed`.
  std::vector<std::uint64_t> chain_seeds;
};

// Holds selected blocks at fixed values instead of sampling them.
struct ClampSpec {
  std::optional<Vector> phi;
  std::optional<Vector> omega_sq;
  std::optional<double> beta;
};

// theta_hat to use at (zero-based) iteration n.
using ThetaHatSchedule = std::function<Vector(long n)>;

struct RunHooks {
  ClampSpec clamp;
  ThetaHatSchedule theta_hat;
};

// Errors from inside the loop are rethrown as AtIteration<NumericalError> or
// AtIteration<ConvergenceError>.
Chain run_algorithm1(const ModalDataset& data, const StructuralModel& model,
                     const GibbsConfig& config, Rng& rng, const RunHooks& hooks = {});
Chain run_algorithm2(const ModalDataset& data, const StructuralModel& model,
                     const GibbsConfig& config, Rng& rng, const RunHooks& hooks = {});
// Dispatches on config.algorithm.
Chain run_chain(const ModalDataset& data, const StructuralModel& model,
                const GibbsConfig& config, Rng& rng, const RunHooks& hooks = {});

struct ParallelRun {
  std::vector<Chain> chains;
  ErgodicityReport report;
};

// Runs config.n_chains (>= 2) independent chains, concurrently when hardware
// threads allow. When burn_in is absent it is detected per chain and the
// largest value is used for the report.
ParallelRun run_parallel_chains(const ModalDataset& data, const StructuralModel& model,
                                const GibbsConfig& config, std::optional<long> burn_in = {},
                                const RunHooks& hooks = {});

}  // namespace hbmu

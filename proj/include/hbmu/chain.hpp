#pragma once

// Stored Markov chain: one row per Gibbs iteration.

#include <cstdint>
#include <string>
#include <vector>

#include "hbmu/model.hpp"

namespace hbmu {

enum class Algorithm {
  exact,     // beta sampled as a chain variable
  marginal,  // beta integrated out (Student-t conditionals)
};

std::string to_string(Algorithm a);
// Accepts "exact" / "marginal" (also "1" / "2"); throws InputError otherwise.
Algorithm parse_algorithm(const std::string& s);

struct ChainMeta {
  Algorithm algorithm = Algorithm::exact;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  bool sparse_mode = false;
  double elapsed_seconds = 0.0;
  long fixed_point_warnings = 0;  // fixed points that stopped at max_iter
  int max_fixed_point_iterations = 0;
};

struct Chain {
  ChainMeta meta;
  std::vector<std::string> theta_labels;
  int n_dof = 0;
  int n_modes = 0;
  Matrix theta;                 // N x N_theta
  Matrix omega_sq;              // N x N_m
  Matrix phi;                   // N x (N_d N_m); zero columns when not stored
  Vector beta;                  // N, empty for the marginal algorithm
  std::vector<std::string> hyper_names;
  Matrix hyper;                 // N x hyper_names.size()

  long size() const { return static_cast<long>(theta.rows()); }
  bool has_phi() const { return phi.cols() > 0; }
  SystemState state(long n) const;
  // Rows [from, size()).
  Matrix theta_after(long from) const;

  bool operator==(const Chain& other) const;
};

}  // namespace hbmu

#pragma once

// Shear-building models and noisy, partially observed modal data with a known
// ground truth.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hbmu/distributions.hpp"
#include "hbmu/model.hpp"

namespace hbmu {

enum class Substructuring {
  per_story,  // planar chain, one DOF and one parameter per story
  per_face,   // rigid floors with (x, y, rotation) DOFs, one parameter per story face
  custom,     // matrices supplied directly
};

struct NoiseSpec {
  double freq_cov = 0.0;   // fractional std of the identified frequencies squared
  double shape_cov = 0.0;  // per-component std, as a fraction of ||Gamma phi|| / sqrt(N_o)
};

struct BenchmarkSpec {
  int n_stories = 1;
  // One value per story, or a single value used for all stories.
  std::vector<double> story_mass{1.0};
  std::vector<double> story_stiffness{1.0};
  Substructuring substructuring = Substructuring::per_story;
  // Floor half-dimensions for per_face models.
  double half_width_x = 1.0;
  double half_width_y = 1.0;
  // custom models
  Matrix custom_mass;
  Matrix custom_k0;
  std::vector<Matrix> custom_substructures;
  std::vector<std::string> custom_labels;

  std::vector<int> observed_dofs;  // zero-based; empty means all DOFs
  int n_segments = 1;
  int n_modes = 1;
  NoiseSpec noise;
  std::uint64_t seed = 0;
  std::vector<std::pair<int, double>> damage;  // (parameter index, fraction)
};

struct GroundTruth {
  Vector theta_true;
  ModalSolution exact_modes;
};

// K0 = 0 for the generated layouts. Face parameters of a per_face model are
// ordered +x (stories 1..n), +y, -x, -y; the +x face sits at x = +a and resists
// y-motion through u_y + a r, the +y face resists x-motion through u_x - b r.
StructuralModel build_shear_building(const BenchmarkSpec& spec);

// theta_j (1 - fraction) at the listed indices; fractions must lie in (-1, 1).
Vector apply_damage(const Vector& theta, const std::vector<std::pair<int, double>>& pattern);

// Lowest n_modes eigenpairs of K(theta_true), perturbed per segment:
//   w^2_hat = w^2 (1 + freq_cov eps),
//   psi_hat = Gamma phi + N(0, (shape_cov ||Gamma phi|| / sqrt(N_o))^2 I),
// each psi_hat scaled to unit norm with its largest-magnitude entry positive.
std::pair<ModalDataset, GroundTruth> simulate_modal_data(const StructuralModel& model,
                                                         const Vector& theta_true,
                                                         const BenchmarkSpec& spec, Rng& rng);

// Unit norm, largest-magnitude component positive. Idempotent.
Vector normalize_shape(const Vector& psi);

}  // namespace hbmu

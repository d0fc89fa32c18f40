#pragma once

// Seeded synthetic setups shared by the unit and acceptance tests.

#include <cstdint>
#include <utility>

#include "hbmu/synthetic.hpp"

namespace fixture {

using namespace hbmu;

// Four-story planar chain, 4 modes from 10 segments, 1% frequency and 5% shape
// noise, the two lowest floors observed.
inline BenchmarkSpec damage_setup(std::uint64_t data_seed = 1) {
  BenchmarkSpec s;
  s.n_stories = 4;
  s.n_modes = 4;
  s.n_segments = 10;
  s.observed_dofs = {0, 1};
  s.noise = {0.01, 0.05};
  s.seed = data_seed;
  return s;
}

// Second-story stiffness reduced by a third.
inline constexpr int kDamagedIndex = 1;

struct Scenario {
  StructuralModel model;
  ModalDataset undamaged;
  ModalDataset damaged;
  GroundTruth truth_u;
  GroundTruth truth_d;
};

inline Scenario scenario(const BenchmarkSpec& spec, double fraction = 1.0 / 3.0) {
  Scenario out;
  out.model = build_shear_building(spec);
  const Vector ones = Vector::Ones(out.model.n_theta());
  Rng ru(spec.seed, 100), rd(spec.seed, 200);
  std::tie(out.undamaged, out.truth_u) = simulate_modal_data(out.model, ones, spec, ru);
  const Vector damaged = apply_damage(ones, {{kDamagedIndex, fraction}});
  std::tie(out.damaged, out.truth_d) = simulate_modal_data(out.model, damaged, spec, rd);
  return out;
}

// Noise-free, fully observed single-segment data.
inline std::pair<ModalDataset, GroundTruth> exact_data(const StructuralModel& model,
                                                       const Vector& theta, int n_modes) {
  BenchmarkSpec s;
  s.n_modes = n_modes;
  s.n_segments = 1;
  Rng rng(0, 0);
  return simulate_modal_data(model, theta, s, rng);
}

}  // namespace fixture

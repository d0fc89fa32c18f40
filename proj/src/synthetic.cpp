#include "hbmu/synthetic.hpp"

#include <cmath>

#include "hbmu/errors.hpp"

namespace hbmu {

namespace {

double per_story(const std::vector<double>& values, int story, const char* what) {
  if (values.size() == 1) return values[0];
  if (static_cast<int>(values.size()) != 0 && story < static_cast<int>(values.size()))
    return values[static_cast<std::size_t>(story)];
  throw InputError(std::string(what) + " must have 1 or n_stories entries");
}

void check_story_values(const BenchmarkSpec& spec) {
  for (const auto* v : {&spec.story_mass, &spec.story_stiffness}) {
    const auto n = v->size();
    if (n != 1 && static_cast<int>(n) != spec.n_stories)
      throw InputError("story_mass/story_stiffness must have 1 or n_stories entries");
    for (double x : *v)
      if (!(x > 0.0)) throw InputError("story masses and stiffnesses must be positive");
  }
}

StructuralModel chain_model(const BenchmarkSpec& spec) {
  const int n = spec.n_stories;
  Matrix mass = Matrix::Zero(n, n);
  std::vector<Matrix> subs;
  std::vector<std::string> labels;
  for (int j = 0; j < n; ++j) {
    mass(j, j) = per_story(spec.story_mass, j, "story_mass");
    Vector w = Vector::Zero(n);
    w[j] = 1.0;
    if (j > 0) w[j - 1] = -1.0;
    subs.push_back(per_story(spec.story_stiffness, j, "story_stiffness") * w * w.transpose());
    labels.push_back("story_" + std::to_string(j + 1));
  }
  return StructuralModel(std::move(mass), Matrix::Zero(n, n), std::move(subs), std::move(labels));
}

StructuralModel face_model(const BenchmarkSpec& spec) {
  const int n = spec.n_stories;
  const int nd = 3 * n;
  const double a = spec.half_width_x;
  const double b = spec.half_width_y;
  if (!(a > 0.0) || !(b > 0.0)) throw InputError("floor half-widths must be positive");
  Matrix mass = Matrix::Zero(nd, nd);
  for (int j = 0; j < n; ++j) {
    const double m = per_story(spec.story_mass, j, "story_mass");
    mass(3 * j, 3 * j) = m;
    mass(3 * j + 1, 3 * j + 1) = m;
    mass(3 * j + 2, 3 * j + 2) = m * (a * a + b * b) / 3.0;
  }
  // (translation DOF offset, rotation coefficient) for faces +x, +y, -x, -y.
  const struct {
    int dof;
    double rot;
    const char* name;
  } faces[4] = {{1, a, "+x"}, {0, -b, "+y"}, {1, -a, "-x"}, {0, b, "-y"}};
  std::vector<Matrix> subs;
  std::vector<std::string> labels;
  for (const auto& face : faces) {
    for (int j = 0; j < n; ++j) {
      Vector w = Vector::Zero(nd);
      w[3 * j + face.dof] = 1.0;
      w[3 * j + 2] = face.rot;
      if (j > 0) {
        w[3 * (j - 1) + face.dof] = -1.0;
        w[3 * (j - 1) + 2] = -face.rot;
      }
      const double k = 0.5 * per_story(spec.story_stiffness, j, "story_stiffness");
      subs.push_back(k * w * w.transpose());
      labels.push_back("story_" + std::to_string(j + 1) + face.name);
    }
  }
  return StructuralModel(std::move(mass), Matrix::Zero(nd, nd), std::move(subs),
                         std::move(labels));
}

}  // namespace

StructuralModel build_shear_building(const BenchmarkSpec& spec) {
  if (spec.substructuring == Substructuring::custom) {
    return StructuralModel(spec.custom_mass, spec.custom_k0, spec.custom_substructures,
                           spec.custom_labels);
  }
  if (spec.n_stories < 1) throw InputError("n_stories must be positive");
  check_story_values(spec);
  return spec.substructuring == Substructuring::per_story ? chain_model(spec) : face_model(spec);
}

Vector apply_damage(const Vector& theta, const std::vector<std::pair<int, double>>& pattern) {
  Vector out = theta;
  for (const auto& [index, fraction] : pattern) {
    if (index < 0 || index >= theta.size())
      throw InputError("damage index " + std::to_string(index) + " out of range");
    if (!(fraction > -1.0 && fraction < 1.0))
      throw InputError("damage fraction must lie in (-1, 1)");
    out[index] *= 1.0 - fraction;
  }
  return out;
}

Vector normalize_shape(const Vector& psi) {
  const double norm = psi.norm();
  if (!(norm > 0.0)) throw NumericalError("cannot normalize a zero mode shape");
  Vector out = psi / norm;
  Eigen::Index arg = 0;
  out.cwiseAbs().maxCoeff(&arg);
  if (out[arg] < 0.0) out = -out;
  return out;
}

std::pair<ModalDataset, GroundTruth> simulate_modal_data(const StructuralModel& model,
                                                         const Vector& theta_true,
                                                         const BenchmarkSpec& spec, Rng& rng) {
  const int nd = model.n_dof();
  const int nm = spec.n_modes;
  if (nm < 1 || nm > nd) throw InputError("n_modes must lie in [1, n_dof]");
  if (spec.n_segments < 1) throw InputError("n_segments must be positive");
  if (spec.noise.freq_cov < 0.0 || spec.noise.shape_cov < 0.0)
    throw InputError("noise levels must be non-negative");

  std::vector<int> observed = spec.observed_dofs;
  if (observed.empty())
    for (int d = 0; d < nd; ++d) observed.push_back(d);
  for (int d : observed)
    if (d < 0 || d >= nd) throw InputError("observed DOF out of range");

  GroundTruth truth{theta_true, eigen_solve(model, theta_true)};
  const Vector& w2 = truth.exact_modes.omega_sq;
  const int last = std::min(nm, nd - 1);
  for (int i = 1; i <= last; ++i) {
    if (w2[i] - w2[i - 1] <= 1e-8 * std::abs(w2[i]))
      throw InputError("modes " + std::to_string(i) + " and " + std::to_string(i + 1) +
                       " are (nearly) repeated; index-based mode matching is ambiguous");
  }
  if (!(w2[0] > 0.0)) throw InputError("model has a non-positive eigenvalue");

  const int no = static_cast<int>(observed.size());
  const int ns = spec.n_segments;
  Vector freq(static_cast<Eigen::Index>(ns) * nm);
  Vector shapes(static_cast<Eigen::Index>(ns) * nm * no);
  for (int r = 0; r < ns; ++r) {
    for (int i = 0; i < nm; ++i) {
      freq[r * nm + i] = w2[i] * (1.0 + spec.noise.freq_cov * rng.normal());
      Vector psi(no);
      for (int k = 0; k < no; ++k) psi[k] = truth.exact_modes.phi(observed[k], i);
      const double sd = spec.noise.shape_cov * psi.norm() / std::sqrt(static_cast<double>(no));
      for (int k = 0; k < no; ++k) psi[k] += sd * rng.normal();
      shapes.segment((static_cast<Eigen::Index>(r) * nm + i) * no, no) = normalize_shape(psi);
    }
  }
  ModalDataset data(nm, ns, std::move(freq), std::move(shapes), std::move(observed));
  return {std::move(data), std::move(truth)};
}

}  // namespace hbmu

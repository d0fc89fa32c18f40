#include "hbmu/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "hbmu/errors.hpp"

namespace hbmu {

namespace {

bool is_symmetric(const Matrix& a) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError(what);
}

void check_lengths(const StructuralModel& model, const Vector* phi, const Vector* omega_sq,
                   const Vector* theta, int n_modes) {
  const int nd = model.n_dof();
  if (phi) {
    require(phi->size() == static_cast<Eigen::Index>(nd) * n_modes,
            "phi length " + std::to_string(phi->size()) + " != n_dof * n_modes");
  }
  if (omega_sq) {
    require(omega_sq->size() == n_modes, "omega_sq length mismatch");
  }
  if (theta) {
    require(theta->size() == model.n_theta(),
            "theta length " + std::to_string(theta->size()) + " != " +
                std::to_string(model.n_theta()));
  }
}

}  // namespace

StructuralModel::StructuralModel(Matrix mass, Matrix k0, std::vector<Matrix> substructures,
                                 std::vector<std::string> labels)
    : mass_(std::move(mass)),
      k0_(std::move(k0)),
      substructures_(std::move(substructures)),
      labels_(std::move(labels)) {
  const auto n = mass_.rows();
  require(n > 0 && mass_.cols() == n, "mass must be a non-empty square matrix");
  require(k0_.rows() == n && k0_.cols() == n, "k0 must match the mass dimension");
  require(is_symmetric(mass_), "mass must be symmetric");
  require(is_symmetric(k0_), "k0 must be symmetric");
  for (std::size_t j = 0; j < substructures_.size(); ++j) {
    const auto& kj = substructures_[j];
    require(kj.rows() == n && kj.cols() == n,
            "substructure " + std::to_string(j) + " must match the mass dimension");
    require(is_symmetric(kj), "substructure " + std::to_string(j) + " must be symmetric");
  }
  Eigen::LLT<Matrix> llt(mass_);
  require(llt.info() == Eigen::Success, "mass must be positive definite");
  if (labels_.empty()) {
    for (std::size_t j = 0; j < substructures_.size(); ++j)
      labels_.push_back("theta_" + std::to_string(j + 1));
  }
  require(labels_.size() == substructures_.size(), "one label per substructure required");
}

StructuralModel StructuralModel::scaled(double factor) const {
  std::vector<Matrix> subs;
  subs.reserve(substructures_.size());
  for (const auto& k : substructures_) subs.push_back(factor * k);
  return StructuralModel(factor * mass_, factor * k0_, std::move(subs), labels_);
}

ModalDataset::ModalDataset(int n_modes, int n_segments, Vector freq_sq, Vector mode_shapes,
                           std::vector<int> observed_dofs)
    : n_modes_(n_modes),
      n_segments_(n_segments),
      freq_sq_(std::move(freq_sq)),
      mode_shapes_(std::move(mode_shapes)),
      observed_dofs_(std::move(observed_dofs)) {
  require(n_modes_ > 0, "n_modes must be positive");
  require(n_segments_ > 0, "n_segments must be positive");
  require(!observed_dofs_.empty(), "observed_dofs must not be empty");
  require(freq_sq_.size() == static_cast<Eigen::Index>(n_modes_) * n_segments_,
          "freq_sq length must be n_segments * n_modes");
  require(mode_shapes_.size() ==
              static_cast<Eigen::Index>(n_observed()) * n_modes_ * n_segments_,
          "mode_shapes length must be n_observed * n_segments * n_modes");
  require((freq_sq_.array() > 0.0).all(), "freq_sq entries must be strictly positive");
  std::set<int> seen;
  for (int d : observed_dofs_) {
    require(d >= 0, "observed DOF indices must be positive (one-based in files)");
    require(seen.insert(d).second, "observed DOF " + std::to_string(d + 1) + " listed twice");
  }
}

void ModalDataset::check_against(int n_dof) const {
  for (int d : observed_dofs_) {
    require(d < n_dof, "observed DOF " + std::to_string(d + 1) + " exceeds model size " +
                           std::to_string(n_dof));
  }
}

Vector ModalDataset::t_transpose_freq() const {
  Vector out = Vector::Zero(n_modes_);
  for (int r = 0; r < n_segments_; ++r) out += freq_sq_.segment(r * n_modes_, n_modes_);
  return out;
}

Vector ModalDataset::mean_freq_sq() const { return t_transpose_freq() / n_segments_; }

double ModalDataset::freq_residual_sq(const Vector& omega_sq) const {
  double s = 0.0;
  for (int r = 0; r < n_segments_; ++r)
    s += (freq_sq_.segment(r * n_modes_, n_modes_) - omega_sq).squaredNorm();
  return s;
}

Vector ModalDataset::gamma_transpose_shapes(int n_dof) const {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(n_dof) * n_modes_);
  for (int r = 0; r < n_segments_; ++r) {
    for (int i = 0; i < n_modes_; ++i) {
      const auto psi = shape_at(r, i);
      for (int k = 0; k < n_observed(); ++k) out[i * n_dof + observed_dofs_[k]] += psi[k];
    }
  }
  return out;
}

Vector ModalDataset::gamma_gram_diagonal(int n_dof) const {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(n_dof) * n_modes_);
  for (int i = 0; i < n_modes_; ++i)
    for (int d : observed_dofs_) out[i * n_dof + d] = n_segments_;
  return out;
}

double ModalDataset::shape_residual_sq(const Vector& phi, int n_dof) const {
  double s = 0.0;
  for (int r = 0; r < n_segments_; ++r) {
    for (int i = 0; i < n_modes_; ++i) {
      const auto psi = shape_at(r, i);
      for (int k = 0; k < n_observed(); ++k) {
        const double e = psi[k] - phi[i * n_dof + observed_dofs_[k]];
        s += e * e;
      }
    }
  }
  return s;
}

Matrix ModalDataset::gamma_matrix(int n_dof) const {
  const int no = n_observed();
  Matrix g = Matrix::Zero(static_cast<Eigen::Index>(no) * n_segments_ * n_modes_,
                          static_cast<Eigen::Index>(n_dof) * n_modes_);
  for (int r = 0; r < n_segments_; ++r)
    for (int i = 0; i < n_modes_; ++i)
      for (int k = 0; k < no; ++k)
        g((r * n_modes_ + i) * no + k, i * n_dof + observed_dofs_[k]) = 1.0;
  return g;
}

Matrix ModalDataset::t_matrix() const {
  Matrix t = Matrix::Zero(static_cast<Eigen::Index>(n_segments_) * n_modes_, n_modes_);
  for (int r = 0; r < n_segments_; ++r)
    t.block(r * n_modes_, 0, n_modes_, n_modes_).setIdentity();
  return t;
}

ModalDataset ModalDataset::scaled_shapes(double factor) const {
  return ModalDataset(n_modes_, n_segments_, freq_sq_, factor * mode_shapes_, observed_dofs_);
}

Matrix assemble_stiffness(const StructuralModel& model, const Vector& theta) {
  check_lengths(model, nullptr, nullptr, &theta, 0);
  Matrix k = model.k0();
  for (int j = 0; j < model.n_theta(); ++j) k.noalias() += theta[j] * model.substructure(j);
  return k;
}

LinearForm build_H_b(const StructuralModel& model, const Vector& phi, const Vector& omega_sq) {
  const int nd = model.n_dof();
  const int nm = static_cast<int>(omega_sq.size());
  check_lengths(model, &phi, &omega_sq, nullptr, nm);
  LinearForm out{Matrix(static_cast<Eigen::Index>(nm) * nd, model.n_theta()),
                 Vector(static_cast<Eigen::Index>(nm) * nd)};
  for (int i = 0; i < nm; ++i) {
    const auto phi_i = phi.segment(i * nd, nd);
    for (int j = 0; j < model.n_theta(); ++j)
      out.matrix.block(i * nd, j, nd, 1).noalias() = model.substructure(j) * phi_i;
    out.rhs.segment(i * nd, nd).noalias() = omega_sq[i] * (model.mass() * phi_i);
    out.rhs.segment(i * nd, nd).noalias() -= model.k0() * phi_i;
  }
  return out;
}

LinearForm build_G_c(const StructuralModel& model, const Vector& phi, const Vector& theta) {
  const int nd = model.n_dof();
  const int nm = static_cast<int>(phi.size() / std::max(nd, 1));
  check_lengths(model, &phi, nullptr, &theta, nm);
  const Matrix k = assemble_stiffness(model, theta);
  LinearForm out{Matrix::Zero(static_cast<Eigen::Index>(nm) * nd, nm),
                 Vector(static_cast<Eigen::Index>(nm) * nd)};
  for (int i = 0; i < nm; ++i) {
    const auto phi_i = phi.segment(i * nd, nd);
    out.matrix.block(i * nd, i, nd, 1).noalias() = model.mass() * phi_i;
    out.rhs.segment(i * nd, nd).noalias() = k * phi_i;
  }
  return out;
}

Matrix build_F(const StructuralModel& model, const Vector& omega_sq, const Vector& theta) {
  const int nd = model.n_dof();
  const int nm = static_cast<int>(omega_sq.size());
  check_lengths(model, nullptr, &omega_sq, &theta, nm);
  const Matrix k = assemble_stiffness(model, theta);
  Matrix f = Matrix::Zero(static_cast<Eigen::Index>(nm) * nd, static_cast<Eigen::Index>(nm) * nd);
  for (int i = 0; i < nm; ++i) f.block(i * nd, i * nd, nd, nd) = k - omega_sq[i] * model.mass();
  return f;
}

double equation_error(const StructuralModel& model, const Vector& phi, const Vector& omega_sq,
                      const Vector& theta) {
  const int nd = model.n_dof();
  const int nm = static_cast<int>(omega_sq.size());
  check_lengths(model, &phi, &omega_sq, &theta, nm);
  const Matrix k = assemble_stiffness(model, theta);
  double s = 0.0;
  for (int i = 0; i < nm; ++i) {
    const auto phi_i = phi.segment(i * nd, nd);
    s += (k * phi_i - omega_sq[i] * (model.mass() * phi_i)).squaredNorm();
  }
  return s;
}

double equation_error(const StructuralModel& model, const SystemState& state) {
  return equation_error(model, state.phi, state.omega_sq, state.theta);
}

ModalSolution eigen_solve(const StructuralModel& model, const Vector& theta) {
  const Matrix k = assemble_stiffness(model, theta);
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(k, model.mass(),
                                                          Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) {
    Eigen::JacobiSVD<Matrix> svd(model.mass());
    const auto& s = svd.singularValues();
    std::ostringstream msg;
    msg << "generalized eigen-solve failed; mass condition number "
        << s[0] / s[s.size() - 1];
    throw NumericalError(msg.str());
  }
  ModalSolution out{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index c = 0; c < out.phi.cols(); ++c) {
    Eigen::Index arg = 0;
    out.phi.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.phi(arg, c) < 0.0) out.phi.col(c) *= -1.0;
  }
  return out;
}

Vector stack_modes(const Matrix& phi, int n_modes) {
  if (n_modes > phi.cols()) throw InputError("requested more modes than available");
  const auto nd = phi.rows();
  Vector out(nd * n_modes);
  for (int i = 0; i < n_modes; ++i) out.segment(i * nd, nd) = phi.col(i);
  return out;
}

}  // namespace hbmu

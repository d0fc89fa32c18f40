#pragma once

// Structural model, modal data, and the linear-in-parameter forms of the
// eigen-equation residual (K(theta) - w_i^2 M) phi_i.
//
// Stacking conventions used everywhere in the library:
//   phi        mode-major: [phi_1; phi_2; ...; phi_Nm], each block N_d long
//   freq_sq    segment-major: [w^2_{1,1} .. w^2_{1,Nm}, w^2_{2,1} .. w^2_{Ns,Nm}]
//   mode_shapes segment-major, then mode, then observed DOF

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hbmu {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class StructuralModel {
 public:
  StructuralModel() = default;

  // Throws InputError unless every matrix is square, symmetric, and of the
  // same size, and the mass matrix admits a Cholesky factorization.
  StructuralModel(Matrix mass, Matrix k0, std::vector<Matrix> substructures,
                  std::vector<std::string> labels = {});

  int n_dof() const { return static_cast<int>(mass_.rows()); }
  int n_theta() const { return static_cast<int>(substructures_.size()); }

  const Matrix& mass() const { return mass_; }
  const Matrix& k0() const { return k0_; }
  const std::vector<Matrix>& substructures() const { return substructures_; }
  const Matrix& substructure(int j) const { return substructures_.at(j); }
  const std::vector<std::string>& labels() const { return labels_; }

  // Same model with mass, k0, and every K_j multiplied by `factor`.
  StructuralModel scaled(double factor) const;

 private:
  Matrix mass_;
  Matrix k0_;
  std::vector<Matrix> substructures_;
  std::vector<std::string> labels_;
};

class ModalDataset {
 public:
  ModalDataset() = default;

  // observed_dofs are zero-based here; files store them one-based.
  // Throws InputError on inconsistent lengths, non-positive frequencies,
  // or duplicate/negative DOF indices.
  ModalDataset(int n_modes, int n_segments, Vector freq_sq, Vector mode_shapes,
               std::vector<int> observed_dofs);

  int n_modes() const { return n_modes_; }
  int n_segments() const { return n_segments_; }
  int n_observed() const { return static_cast<int>(observed_dofs_.size()); }
  const Vector& freq_sq() const { return freq_sq_; }
  const Vector& mode_shapes() const { return mode_shapes_; }
  const std::vector<int>& observed_dofs() const { return observed_dofs_; }

  // Checks the observed DOF indices against a model size.
  void check_against(int n_dof) const;

  double freq_sq_at(int segment, int mode) const {
    return freq_sq_[segment * n_modes_ + mode];
  }
  // Observed components of mode `mode` in segment `segment`.
  Eigen::Map<const Vector> shape_at(int segment, int mode) const {
    return {mode_shapes_.data() + (segment * n_modes_ + mode) * n_observed(), n_observed()};
  }

  // Mean of the identified frequencies-squared over segments (T' w / N_s).
  Vector mean_freq_sq() const;
  // T' w^hat.
  Vector t_transpose_freq() const;
  // || w^hat - T w ||^2.
  double freq_residual_sq(const Vector& omega_sq) const;

  // Gamma' Psi^hat, length N_d * N_m.
  Vector gamma_transpose_shapes(int n_dof) const;
  // diag(Gamma' Gamma): N_s at observed DOFs of every mode block, 0 elsewhere.
  Vector gamma_gram_diagonal(int n_dof) const;
  // || Psi^hat - Gamma phi ||^2.
  double shape_residual_sq(const Vector& phi, int n_dof) const;

  // Dense selector matrices, for checks and small problems only.
  Matrix gamma_matrix(int n_dof) const;
  Matrix t_matrix() const;

  // Same dataset with every mode-shape component multiplied by `factor`.
  ModalDataset scaled_shapes(double factor) const;

 private:
  int n_modes_ = 0;
  int n_segments_ = 0;
  Vector freq_sq_;
  Vector mode_shapes_;
  std::vector<int> observed_dofs_;
};

struct SystemState {
  Vector phi;       // N_d * N_m, mode-major
  Vector omega_sq;  // N_m
  Vector theta;     // N_theta
  std::optional<double> beta;

  bool operator==(const SystemState&) const = default;
};

struct LinearForm {
  Matrix matrix;
  Vector rhs;
};

// K0 + sum_j theta_j K_j.
Matrix assemble_stiffness(const StructuralModel& model, const Vector& theta);

// H (N_m N_d x N_theta) with row block i = [K_1 phi_i ... K_Nt phi_i], and
// b with block i = (w_i^2 M - K0) phi_i. The residual is H theta - b.
LinearForm build_H_b(const StructuralModel& model, const Vector& phi, const Vector& omega_sq);

// G (N_m N_d x N_m) block-diagonal in M phi_i, and c stacking K(theta) phi_i.
// The residual is c - G w^2.
LinearForm build_G_c(const StructuralModel& model, const Vector& phi, const Vector& theta);

// Block-diagonal F with blocks K(theta) - w_i^2 M. The residual is F phi.
Matrix build_F(const StructuralModel& model, const Vector& omega_sq, const Vector& theta);

// sum_i || (K(theta) - w_i^2 M) phi_i ||^2.
double equation_error(const StructuralModel& model, const Vector& phi, const Vector& omega_sq,
                      const Vector& theta);
double equation_error(const StructuralModel& model, const SystemState& state);

struct ModalSolution {
  Vector omega_sq;  // ascending
  Matrix phi;       // columns mass-normalized, largest-magnitude entry positive
};

// Generalized eigenpairs of (K(theta), M). Throws NumericalError if the
// pencil cannot be reduced.
ModalSolution eigen_solve(const StructuralModel& model, const Vector& theta);

// Stacks the first n_modes columns of phi into the mode-major layout.
Vector stack_modes(const Matrix& phi, int n_modes);

}  // namespace hbmu

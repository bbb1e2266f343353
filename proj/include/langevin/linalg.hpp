#pragma once

#include <Eigen/Dense>

namespace langevin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kSymmetryTolerance = 1e-10;
inline constexpr double kEigenFloor = 1e-12;

/// Largest absolute entry of A - A^T.
double symmetry_residual(const Matrix& a);

/// Throws NotSpd unless `a` is square, symmetric to kSymmetryTolerance and
/// has every eigenvalue above kEigenFloor. `what` names the matrix in the
/// error message.
void require_spd(const Matrix& a, const char* what);

/// Symmetric positive definite matrix together with its symmetric square
/// root and the inverse of that root, all computed once from a single
/// eigendecomposition.
///
/// Diagonal input takes an exact path (elementwise sqrt) so that dyadic
/// diagonal preconditioners produce exactly representable roots.
class SpdMatrix {
 public:
  explicit SpdMatrix(Matrix a);

  static SpdMatrix identity(Eigen::Index d) { return SpdMatrix(Matrix::Identity(d, d)); }

  Eigen::Index dim() const { return mat_.rows(); }
  const Matrix& mat() const { return mat_; }
  const Matrix& sqrt() const { return sqrt_; }
  const Matrix& inv_sqrt() const { return inv_sqrt_; }
  const Matrix& inverse() const { return inverse_; }
  double op_norm() const { return max_eig_; }
  double min_eigenvalue() const { return min_eig_; }
  double log_det() const { return log_det_; }
  bool is_identity() const { return identity_; }

 private:
  Matrix mat_;
  Matrix sqrt_;
  Matrix inv_sqrt_;
  Matrix inverse_;
  double max_eig_ = 0.0;
  double min_eig_ = 0.0;
  double log_det_ = 0.0;
  bool identity_ = false;
};

}  // namespace langevin

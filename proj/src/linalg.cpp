#include "langevin/linalg.hpp"

#include <cmath>
#include <sstream>

#include "langevin/error.hpp"

namespace langevin {

double symmetry_residual(const Matrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  return (a - a.transpose()).cwiseAbs().maxCoeff();
}

void require_spd(const Matrix& a, const char* what) {
  if (a.rows() == 0 || a.rows() != a.cols()) {
    throw NotSpd(std::string(what) + ": matrix must be square and nonempty");
  }
  if (!a.allFinite()) throw NotSpd(std::string(what) + ": non-finite entry");
  const double res = symmetry_residual(a);
  if (res > kSymmetryTolerance) {
    std::ostringstream os;
    os << what << ": symmetry residual " << res << " exceeds " << kSymmetryTolerance;
    throw NotSpd(os.str());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NotSpd(std::string(what) + ": eigensolver failed");
  if (es.eigenvalues().minCoeff() <= kEigenFloor) {
    std::ostringstream os;
    os << what << ": smallest eigenvalue " << es.eigenvalues().minCoeff() << " is not positive";
    throw NotSpd(os.str());
  }
}

SpdMatrix::SpdMatrix(Matrix a) : mat_(std::move(a)) {
  require_spd(mat_, "SpdMatrix");
  const bool diagonal = (mat_ - Matrix(mat_.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
  if (diagonal) {
    const Vector ev = mat_.diagonal();
    sqrt_ = Matrix(ev.cwiseSqrt().asDiagonal());
    inv_sqrt_ = Matrix(ev.cwiseSqrt().cwiseInverse().asDiagonal());
    inverse_ = Matrix(ev.cwiseInverse().asDiagonal());
    max_eig_ = ev.maxCoeff();
    min_eig_ = ev.minCoeff();
    log_det_ = ev.array().log().sum();
    identity_ = (ev.array() == 1.0).all();
    return;
  }
  // Symmetrize before the solve so the roots are exactly symmetric.
  const Matrix sym = 0.5 * (mat_ + mat_.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw NotSpd("SpdMatrix: eigensolver failed");
  const Vector ev = es.eigenvalues();
  const Matrix& q = es.eigenvectors();
  sqrt_ = q * ev.cwiseSqrt().asDiagonal() * q.transpose();
  inv_sqrt_ = q * ev.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose();
  inverse_ = q * ev.cwiseInverse().asDiagonal() * q.transpose();
  sqrt_ = 0.5 * (sqrt_ + sqrt_.transpose()).eval();
  inv_sqrt_ = 0.5 * (inv_sqrt_ + inv_sqrt_.transpose()).eval();
  inverse_ = 0.5 * (inverse_ + inverse_.transpose()).eval();
  max_eig_ = ev.maxCoeff();
  min_eig_ = ev.minCoeff();
  log_det_ = ev.array().log().sum();
}

}  // namespace langevin

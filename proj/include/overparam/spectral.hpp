#pragma once

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "overparam/errors.hpp"

namespace overparam {

/// Dense symmetric matrix in 64-bit precision. Construction symmetrizes via
/// (A + A^T)/2 rather than rejecting, because Monte-Carlo averages accumulate
/// floating-point asymmetry. Entries must be finite.
class SymMatrix {
 public:
  explicit SymMatrix(Eigen::MatrixXd a) : mat_(std::move(a)) {
    if (mat_.rows() != mat_.cols())
      throw InputError("SymMatrix requires a square matrix, got " +
                       std::to_string(mat_.rows()) + "x" +
                       std::to_string(mat_.cols()));
    if (!mat_.allFinite())
      throw InputError("SymMatrix entries must be finite");
    mat_ = ((mat_ + mat_.transpose()) / 2.0).eval();
  }

  Eigen::Index order() const { return mat_.rows(); }
  const Eigen::MatrixXd& mat() const { return mat_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return mat_(i, j); }
  double frobenius_norm() const { return mat_.norm(); }

 private:
  Eigen::MatrixXd mat_;
};

/// Eigendecomposition A = sum_i values[i] * vectors.col(i) * vectors.col(i)^T
/// with values sorted ascending and vectors orthonormal.
struct EigenSystem {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

inline EigenSystem sym_eig(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.mat());
  if (solver.info() != Eigen::Success)
    throw InputError("symmetric eigendecomposition did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline Eigen::VectorXd sym_eigenvalues(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.mat(),
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw InputError("symmetric eigendecomposition did not converge");
  return solver.eigenvalues();
}

/// max_i |lambda_i|.
inline double spectral_norm(const SymMatrix& a) {
  if (a.order() == 0) return 0.0;
  Eigen::VectorXd ev = sym_eigenvalues(a);
  return std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
}

inline double min_eigenvalue(const SymMatrix& a) {
  return sym_eigenvalues(a)[0];
}

/// Solves A x = b for positive definite A (min eigenvalue > 1e-12).
/// LDLT plus one step of iterative refinement keeps the residual at
/// ||Ax - b|| <= 1e-8 ||b|| even for poorly conditioned inputs.
inline Eigen::VectorXd solve_spd(const SymMatrix& a, const Eigen::VectorXd& b) {
  if (b.size() != a.order())
    throw InputError("solve_spd: right-hand side length " +
                     std::to_string(b.size()) + " does not match order " +
                     std::to_string(a.order()));
  double min_eig = min_eigenvalue(a);
  if (min_eig <= 1e-12)
    throw SingularMatrixError(
        "solve_spd: matrix is not positive definite (min eigenvalue " +
            std::to_string(min_eig) + ")",
        min_eig);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a.mat());
  Eigen::VectorXd x = ldlt.solve(b);
  x += ldlt.solve(b - a.mat() * x);
  return x;
}

}  // namespace overparam

#pragma once

#include <Eigen/Dense>

namespace lrrte {

using Index = Eigen::Index;
using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Symmetric tridiagonal matrix stored by its main and first off-diagonal.
struct SymTridiagonal {
  Vector diag;
  Vector off;  // size n-1

  SymTridiagonal() = default;
  explicit SymTridiagonal(Index n) : diag(Vector::Zero(n)), off(Vector::Zero(n > 0 ? n - 1 : 0)) {}

  Index size() const { return diag.size(); }
  DenseMatrix multiply(const DenseMatrix& x) const;
  DenseMatrix to_dense() const;
  SymTridiagonal operator+(const SymTridiagonal& other) const;
};

// Lower bidiagonal Cholesky factor T of a symmetric positive definite
// tridiagonal matrix, A = T T^T. Solves are O(n) per column.
class BidiagonalCholesky {
 public:
  BidiagonalCholesky() = default;

  // Throws std::domain_error if A is not numerically positive definite.
  explicit BidiagonalCholesky(const SymTridiagonal& a);

  Index size() const { return diag_.size(); }
  const Vector& diag() const { return diag_; }
  const Vector& sub() const { return sub_; }

  DenseMatrix solve_lower(const DenseMatrix& x) const;  // T^{-1} x
  DenseMatrix solve_upper(const DenseMatrix& x) const;  // T^{-T} x
  DenseMatrix multiply_lower(const DenseMatrix& x) const;  // T x
  DenseMatrix to_dense() const;

 private:
  Vector diag_;
  Vector sub_;
};

}  // namespace lrrte

#include "lrrte/banded.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lrrte {

DenseMatrix SymTridiagonal::multiply(const DenseMatrix& x) const {
  const Index n = size();
  if (x.rows() != n) throw std::invalid_argument("SymTridiagonal::multiply: dimension mismatch");
  DenseMatrix y = diag.asDiagonal() * x;
  if (n > 1) {
    y.topRows(n - 1) += off.asDiagonal() * x.bottomRows(n - 1);
    y.bottomRows(n - 1) += off.asDiagonal() * x.topRows(n - 1);
  }
  return y;
}

DenseMatrix SymTridiagonal::to_dense() const {
  const Index n = size();
  DenseMatrix a = DenseMatrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) a(i, i) = diag(i);
  for (Index i = 0; i + 1 < n; ++i) {
    a(i, i + 1) = off(i);
    a(i + 1, i) = off(i);
  }
  return a;
}

SymTridiagonal SymTridiagonal::operator+(const SymTridiagonal& other) const {
  if (other.size() != size()) throw std::invalid_argument("SymTridiagonal::operator+: dimension mismatch");
  SymTridiagonal s;
  s.diag = diag + other.diag;
  s.off = off + other.off;
  return s;
}

BidiagonalCholesky::BidiagonalCholesky(const SymTridiagonal& a) {
  const Index n = a.size();
  diag_.resize(n);
  sub_.resize(n > 0 ? n - 1 : 0);
  for (Index i = 0; i < n; ++i) {
    double pivot = a.diag(i);
    if (i > 0) pivot -= sub_(i - 1) * sub_(i - 1);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      throw std::domain_error("BidiagonalCholesky: matrix not positive definite at row " + std::to_string(i));
    }
    diag_(i) = std::sqrt(pivot);
    if (i + 1 < n) sub_(i) = a.off(i) / diag_(i);
  }
}

DenseMatrix BidiagonalCholesky::solve_lower(const DenseMatrix& x) const {
  const Index n = size();
  if (x.rows() != n) throw std::invalid_argument("BidiagonalCholesky::solve_lower: dimension mismatch");
  DenseMatrix y(x.rows(), x.cols());
  if (n == 0) return y;
  y.row(0) = x.row(0) / diag_(0);
  for (Index i = 1; i < n; ++i) y.row(i) = (x.row(i) - sub_(i - 1) * y.row(i - 1)) / diag_(i);
  return y;
}

DenseMatrix BidiagonalCholesky::solve_upper(const DenseMatrix& x) const {
  const Index n = size();
  if (x.rows() != n) throw std::invalid_argument("BidiagonalCholesky::solve_upper: dimension mismatch");
  DenseMatrix y(x.rows(), x.cols());
  if (n == 0) return y;
  y.row(n - 1) = x.row(n - 1) / diag_(n - 1);
  for (Index i = n - 2; i >= 0; --i) y.row(i) = (x.row(i) - sub_(i) * y.row(i + 1)) / diag_(i);
  return y;
}

DenseMatrix BidiagonalCholesky::multiply_lower(const DenseMatrix& x) const {
  const Index n = size();
  if (x.rows() != n) throw std::invalid_argument("BidiagonalCholesky::multiply_lower: dimension mismatch");
  DenseMatrix y = diag_.asDiagonal() * x;
  if (n > 1) y.bottomRows(n - 1) += sub_.asDiagonal() * x.topRows(n - 1);
  return y;
}

DenseMatrix BidiagonalCholesky::to_dense() const {
  const Index n = size();
  DenseMatrix t = DenseMatrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) t(i, i) = diag_(i);
  for (Index i = 0; i + 1 < n; ++i) t(i + 1, i) = sub_(i);
  return t;
}

}  // namespace lrrte

#include "lrrte/lowrank.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace lrrte {

namespace {

// factor = q * r with q orthonormal. When the factor has at least as many
// columns as rows the identity is already an orthonormal basis of its range.
struct RangeBasis {
  DenseMatrix q;
  DenseMatrix r;
  bool identity = false;
};

RangeBasis range_basis(const DenseMatrix& f) {
  const Index n = f.rows();
  const Index k = f.cols();
  RangeBasis b;
  if (k >= n) {
    b.identity = true;
    b.r = f;
    return b;
  }
  Eigen::HouseholderQR<DenseMatrix> qr(f);
  b.q = qr.householderQ() * DenseMatrix::Identity(n, k);
  b.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  return b;
}

DenseMatrix expand(const RangeBasis& b, const DenseMatrix& coeffs) {
  if (b.identity) return coeffs;
  return b.q * coeffs;
}

DenseMatrix core_of(const RangeBasis& lb, const Vector& w, const RangeBasis& rb) {
  return lb.r * w.asDiagonal() * rb.r.transpose();
}

void require_finite(const LowRankMatrix& w, const char* where) {
  if (!w.left().allFinite() || !w.right().allFinite() || !w.weights().allFinite()) {
    throw std::invalid_argument(std::string(where) + ": non-finite factor entries");
  }
}

// First entry above this fraction of the column's largest magnitude decides the sign.
constexpr double kSignPivot = 1e-10;

struct SmallSvd {
  Vector s;
  DenseMatrix u, v;
};

// Divide and conquer with a Jacobi retry: Eigen 3.4.0 BDCSVD
// occasionally returns NaN on finite, well-scaled input.
SmallSvd small_svd(const DenseMatrix& a) {
  Eigen::BDCSVD<DenseMatrix> bdc(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (bdc.singularValues().allFinite() && bdc.matrixU().allFinite() && bdc.matrixV().allFinite()) {
    return {bdc.singularValues(), bdc.matrixU(), bdc.matrixV()};
  }
  Eigen::JacobiSVD<DenseMatrix> jac(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (!jac.singularValues().allFinite()) throw std::runtime_error("canonicalize: SVD failed");
  return {jac.singularValues(), jac.matrixU(), jac.matrixV()};
}

}  // namespace

LowRankMatrix::LowRankMatrix(Index rows, Index cols)
    : rows_(rows), cols_(cols), left_(rows, 0), weights_(0), right_(cols, 0), canonical_(true) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("LowRankMatrix: negative dimension");
}

LowRankMatrix LowRankMatrix::from_factors(DenseMatrix left, DenseMatrix right) {
  Vector w = Vector::Ones(left.cols());
  return from_factors(std::move(left), std::move(w), std::move(right));
}

LowRankMatrix LowRankMatrix::from_factors(DenseMatrix left, Vector weights, DenseMatrix right) {
  if (left.cols() != right.cols() || left.cols() != weights.size()) {
    throw std::invalid_argument("LowRankMatrix::from_factors: factor ranks disagree");
  }
  LowRankMatrix m;
  m.rows_ = left.rows();
  m.cols_ = right.rows();
  m.left_ = std::move(left);
  m.weights_ = std::move(weights);
  m.right_ = std::move(right);
  m.canonical_ = m.weights_.size() == 0;
  return m;
}

LowRankMatrix LowRankMatrix::from_canonical(DenseMatrix left, Vector sigma, DenseMatrix right) {
  LowRankMatrix m = from_factors(std::move(left), std::move(sigma), std::move(right));
  m.canonical_ = true;
  return m;
}

LowRankMatrix LowRankMatrix::outer(const Vector& v, const Vector& w) {
  return from_factors(DenseMatrix(v), DenseMatrix(w));
}

const Vector& LowRankMatrix::singular_values() const {
  if (!canonical_) throw std::logic_error("LowRankMatrix::singular_values: matrix is not canonical");
  return weights_;
}

DenseMatrix LowRankMatrix::to_dense() const {
  if (rank() == 0) return DenseMatrix::Zero(rows_, cols_);
  return left_ * weights_.asDiagonal() * right_.transpose();
}

LowRankMatrix LowRankMatrix::scaled(double c) const {
  if (c == 0.0) return LowRankMatrix(rows_, cols_);
  if (c > 0.0 && canonical_) return from_canonical(left_, weights_ * c, right_);
  return from_factors(left_, weights_ * c, right_);
}

LowRankMatrix canonicalize(const LowRankMatrix& w) {
  require_finite(w, "canonicalize");
  if (w.rank() == 0) return LowRankMatrix(w.rows(), w.cols());

  const RangeBasis lb = range_basis(w.left());
  const RangeBasis rb = range_basis(w.right());
  const DenseMatrix core = core_of(lb, w.weights(), rb);

  const SmallSvd svd = small_svd(core);
  const Vector& s = svd.s;
  if (s.size() == 0 || !(s(0) > 0.0)) return LowRankMatrix(w.rows(), w.cols());

  Index keep = 0;
  while (keep < s.size() && s(keep) > kRankFloor * s(0)) ++keep;

  DenseMatrix u = svd.u.leftCols(keep);
  DenseMatrix v = svd.v.leftCols(keep);
  DenseMatrix left = expand(lb, u);
  DenseMatrix right = expand(rb, v);

  for (Index j = 0; j < keep; ++j) {
    const double pivot = kSignPivot * left.col(j).cwiseAbs().maxCoeff();
    for (Index i = 0; i < left.rows(); ++i) {
      if (std::abs(left(i, j)) > pivot) {
        if (left(i, j) < 0.0) {
          left.col(j) *= -1.0;
          right.col(j) *= -1.0;
        }
        break;
      }
    }
  }
  return LowRankMatrix::from_canonical(std::move(left), s.head(keep), std::move(right));
}

Index truncation_rank(const Vector& sigma, double tol) {
  if (tol < 0.0) throw std::invalid_argument("truncation_rank: negative tolerance");
  Index r = sigma.size();
  double tail = 0.0;
  const double budget = tol * tol;
  while (r > 0 && tail + sigma(r - 1) * sigma(r - 1) <= budget) {
    tail += sigma(r - 1) * sigma(r - 1);
    --r;
  }
  return r;
}

LowRankMatrix truncated_svd(const LowRankMatrix& w, double tol) {
  if (tol < 0.0) throw std::invalid_argument("truncated_svd: negative tolerance");
  const LowRankMatrix c = w.is_canonical() ? w : canonicalize(w);
  const Index r = truncation_rank(c.singular_values(), tol);
  if (r == c.rank()) return c;
  if (r == 0) return LowRankMatrix(c.rows(), c.cols());
  return LowRankMatrix::from_canonical(c.left().leftCols(r), c.singular_values().head(r), c.right().leftCols(r));
}

LowRankMatrix soft_threshold(const LowRankMatrix& w, double delta) {
  if (delta < 0.0) throw std::invalid_argument("soft_threshold: negative threshold");
  const LowRankMatrix c = w.is_canonical() ? w : canonicalize(w);
  const Vector& s = c.singular_values();
  Index keep = 0;
  while (keep < s.size() && s(keep) > delta) ++keep;
  if (keep == 0) return LowRankMatrix(c.rows(), c.cols());
  Vector shrunk = s.head(keep).array() - delta;
  return LowRankMatrix::from_canonical(c.left().leftCols(keep), std::move(shrunk), c.right().leftCols(keep));
}

LowRankMatrix concatenate(std::span<const LowRankMatrix> terms, std::span<const double> coeffs) {
  if (terms.empty()) throw std::invalid_argument("concatenate: no terms");
  if (!coeffs.empty() && coeffs.size() != terms.size()) {
    throw std::invalid_argument("concatenate: coefficient count mismatch");
  }
  const Index rows = terms.front().rows();
  const Index cols = terms.front().cols();
  Index total = 0;
  for (const auto& t : terms) {
    if (t.rows() != rows || t.cols() != cols) throw std::invalid_argument("concatenate: dimension mismatch");
    total += t.rank();
  }
  DenseMatrix left(rows, total);
  DenseMatrix right(cols, total);
  Vector w(total);
  Index at = 0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& t = terms[i];
    const Index r = t.rank();
    if (r == 0) continue;
    const double c = coeffs.empty() ? 1.0 : coeffs[i];
    left.middleCols(at, r) = t.left();
    right.middleCols(at, r) = t.right();
    w.segment(at, r) = c * t.weights();
    at += r;
  }
  if (total == 0) return LowRankMatrix(rows, cols);
  return LowRankMatrix::from_factors(std::move(left), std::move(w), std::move(right));
}

LowRankMatrix rounded_sum(std::span<const LowRankMatrix> terms, double tol) {
  if (tol < 0.0) throw std::invalid_argument("rounded_sum: negative tolerance");
  LowRankMatrix sum = canonicalize(concatenate(terms));
  if (tol == 0.0) return sum;
  return truncated_svd(sum, tol);
}

double frobenius_norm(const LowRankMatrix& w) {
  if (w.rank() == 0) return 0.0;
  if (w.is_canonical()) return w.weights().norm();
  const RangeBasis lb = range_basis(w.left());
  const RangeBasis rb = range_basis(w.right());
  return core_of(lb, w.weights(), rb).norm();
}

double difference_norm(const LowRankMatrix& a, const LowRankMatrix& b) {
  const LowRankMatrix parts[] = {a, b};
  const double coeffs[] = {1.0, -1.0};
  const LowRankMatrix diff = concatenate(parts, coeffs);
  if (diff.rank() == 0) return 0.0;
  const RangeBasis lb = range_basis(diff.left());
  const RangeBasis rb = range_basis(diff.right());
  return core_of(lb, diff.weights(), rb).norm();
}

}  // namespace lrrte

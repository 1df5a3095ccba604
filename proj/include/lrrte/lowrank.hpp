#pragma once

#include <span>
#include <vector>

#include "lrrte/banded.hpp"

namespace lrrte {

// Relative floor below which singular values count as zero when a factored
// matrix is brought into canonical form.
inline constexpr double kRankFloor = 1e-14;

// Largest rows*cols product for which a factored matrix may be expanded into a
// dense array by library code paths other than test oracles.
inline constexpr Index kDenseMaterializeLimit = 4096;

//
// Factored rows x cols matrix  W = sum_k s_k l_k r_k^T = L diag(s) R^T.
//
// In canonical form L and R have orthonormal columns and s holds the singular
// values in nonincreasing order, all strictly positive. Any other factorization
// is allowed as input and is marked non-canonical.
//
class LowRankMatrix {
 public:
  LowRankMatrix() = default;
  LowRankMatrix(Index rows, Index cols);  // zero matrix, rank 0

  // W = left * right^T
  static LowRankMatrix from_factors(DenseMatrix left, DenseMatrix right);
  // W = left * diag(weights) * right^T
  static LowRankMatrix from_factors(DenseMatrix left, Vector weights, DenseMatrix right);
  // Caller guarantees canonical form; validated only in debug builds.
  static LowRankMatrix from_canonical(DenseMatrix left, Vector sigma, DenseMatrix right);
  // Rank-one outer product v w^T (not canonicalized).
  static LowRankMatrix outer(const Vector& v, const Vector& w);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index rank() const { return weights_.size(); }
  bool is_canonical() const { return canonical_; }

  const DenseMatrix& left() const { return left_; }
  const DenseMatrix& right() const { return right_; }
  const Vector& weights() const { return weights_; }
  // Singular values; throws std::logic_error when not canonical.
  const Vector& singular_values() const;

  DenseMatrix to_dense() const;
  LowRankMatrix scaled(double c) const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  DenseMatrix left_;
  Vector weights_;
  DenseMatrix right_;
  bool canonical_ = true;
};

// Orthonormalize both factors (thin QR), SVD the small core, drop singular
// values below kRankFloor * sigma_1 and fix column signs so that the first
// nonzero entry of every left singular vector is positive.
// Throws std::invalid_argument for non-finite input.
LowRankMatrix canonicalize(const LowRankMatrix& w);

// Smallest-rank truncation with ||W_r - W||_F <= tol. Requires canonical input.
LowRankMatrix truncated_svd(const LowRankMatrix& w, double tol);

// Rank needed by truncated_svd for the given singular values and tolerance.
Index truncation_rank(const Vector& sigma, double tol);

// Singular value soft thresholding: sigma_k -> max(0, sigma_k - delta).
LowRankMatrix soft_threshold(const LowRankMatrix& w, double delta);

// Exact linear combination sum_i coeffs[i] * terms[i], not canonicalized.
// An empty coeffs span means all ones.
LowRankMatrix concatenate(std::span<const LowRankMatrix> terms, std::span<const double> coeffs = {});

// Canonical sum of the terms truncated to Frobenius accuracy tol.
LowRankMatrix rounded_sum(std::span<const LowRankMatrix> terms, double tol);

double frobenius_norm(const LowRankMatrix& w);

// ||a - b||_F without forming either matrix. Uses orthonormal bases of the
// concatenated factors so that the result keeps absolute accuracy when a ~ b.
double difference_norm(const LowRankMatrix& a, const LowRankMatrix& b);

}  // namespace lrrte

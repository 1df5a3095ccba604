#pragma once

#include <memory>
#include <vector>

#include "lrrte/banded.hpp"
#include "lrrte/lowrank.hpp"

namespace lrrte {

//
// Linear map acting on the columns of a dense block. Implementations are
// immutable; the same map object is shared by many Kronecker terms.
//
class LinearMap {
 public:
  virtual ~LinearMap() = default;
  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  virtual DenseMatrix apply(const DenseMatrix& x) const = 0;
  virtual bool is_identity() const { return false; }
  DenseMatrix to_dense() const;
};

using MapPtr = std::shared_ptr<const LinearMap>;

MapPtr identity_map(Index n);
MapPtr dense_map(DenseMatrix a);
MapPtr diagonal_map(Vector d);
// x -> c * u (v^T x)
MapPtr rank_one_map(Vector u, Vector v, double c = 1.0);
// x -> T^{-1} A T^{-T} x with T a bidiagonal Cholesky factor.
MapPtr congruence_map(std::shared_ptr<const BidiagonalCholesky> t, SymTridiagonal a);
// x -> Q diag(f) Q^T x with a shared orthogonal Q.
MapPtr eigen_function_map(std::shared_ptr<const DenseMatrix> q, Vector f);
// x -> outer(inner(x)). Identity operands are elided; diagonal pairs and
// diagonal/rank-one pairs are merged.
MapPtr compose(MapPtr outer, MapPtr inner);

// One summand coeff * (angular (x) spatial). Under the column-major
// vectorization used throughout, (A_mu (x) A_z) vec(U) = vec(A_z U A_mu^T)
// with U of shape spatial x angular.
struct KronTerm {
  double coeff = 1.0;
  MapPtr angular;
  MapPtr spatial;
};

class KronOperator {
 public:
  KronOperator() = default;
  explicit KronOperator(std::vector<KronTerm> terms);

  const std::vector<KronTerm>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  Index spatial_dim() const { return spatial_dim_; }
  Index angular_dim() const { return angular_dim_; }

 private:
  std::vector<KronTerm> terms_;
  Index spatial_dim_ = 0;
  Index angular_dim_ = 0;
};

// Application of a single term to a factored matrix, without canonicalization.
LowRankMatrix apply_term(const KronTerm& term, const LowRankMatrix& w);

// Sum of all term applications, uncanonicalized (rank = #terms * rank(w)).
LowRankMatrix kron_apply_raw(const KronOperator& op, const LowRankMatrix& w);

// Canonical op(w), truncated to Frobenius accuracy round_tol when positive.
LowRankMatrix kron_apply(const KronOperator& op, const LowRankMatrix& w, double round_tol);

// Dense Kronecker sum; test oracle only, requires size <= kDenseMaterializeLimit.
DenseMatrix materialize(const KronOperator& op);

// Terms Theta_{m0} * E_t * Theta_{m1}, ordered with m0 outermost and m1 innermost.
KronOperator compose_sandwich(const KronOperator& p_half, const KronOperator& e);

// Column-major vec/mat helpers for dense oracles.
Vector vec(const DenseMatrix& u);
DenseMatrix mat(const Vector& v, Index rows, Index cols);

}  // namespace lrrte

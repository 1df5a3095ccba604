#include "lrrte/kron.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lrrte {

namespace {

void check_rows(Index expected, const DenseMatrix& x, const char* who) {
  if (x.rows() != expected) {
    throw std::invalid_argument(std::string(who) + ": expected " + std::to_string(expected) + " rows, got " +
                                std::to_string(x.rows()));
  }
}

class IdentityMap final : public LinearMap {
 public:
  explicit IdentityMap(Index n) : n_(n) {}
  Index rows() const override { return n_; }
  Index cols() const override { return n_; }
  DenseMatrix apply(const DenseMatrix& x) const override {
    check_rows(n_, x, "IdentityMap");
    return x;
  }
  bool is_identity() const override { return true; }

 private:
  Index n_;
};

class DenseMap final : public LinearMap {
 public:
  explicit DenseMap(DenseMatrix a) : a_(std::move(a)) {}
  Index rows() const override { return a_.rows(); }
  Index cols() const override { return a_.cols(); }
  DenseMatrix apply(const DenseMatrix& x) const override {
    check_rows(a_.cols(), x, "DenseMap");
    return a_ * x;
  }

 private:
  DenseMatrix a_;
};

class DiagonalMap final : public LinearMap {
 public:
  explicit DiagonalMap(Vector d) : d_(std::move(d)) {}
  Index rows() const override { return d_.size(); }
  Index cols() const override { return d_.size(); }
  DenseMatrix apply(const DenseMatrix& x) const override {
    check_rows(d_.size(), x, "DiagonalMap");
    return d_.asDiagonal() * x;
  }
  const Vector& diagonal() const { return d_; }

 private:
  Vector d_;
};

class RankOneMap final : public LinearMap {
 public:
  RankOneMap(Vector u, Vector v, double c) : u_(std::move(u)), v_(std::move(v)), c_(c) {
    if (u_.size() != v_.size()) throw std::invalid_argument("rank_one_map: dimension mismatch");
  }
  Index rows() const override { return u_.size(); }
  Index cols() const override { return v_.size(); }
  DenseMatrix apply(const DenseMatrix& x) const override {
    check_rows(v_.size(), x, "RankOneMap");
    return u_ * (c_ * (v_.transpose() * x));
  }
  const Vector& u() const { return u_; }
  const Vector& v() const { return v_; }
  double c() const { return c_; }

 private:
  Vector u_;
  Vector v_;
  double c_;
};

class CongruenceMap final : public LinearMap {
 public:
  CongruenceMap(std::shared_ptr<const BidiagonalCholesky> t, SymTridiagonal a) : t_(std::move(t)), a_(std::move(a)) {
    if (t_->size() != a_.size()) throw std::invalid_argument("congruence_map: dimension mismatch");
  }
  Index rows() const override { return a_.size(); }
  Index cols() const override { return a_.size(); }
  DenseMatrix apply(const DenseMatrix& x) const override {
    check_rows(a_.size(), x, "CongruenceMap");
    return t_->solve_lower(a_.multiply(t_->solve_upper(x)));
  }

 private:
  std::shared_ptr<const BidiagonalCholesky> t_;
  SymTridiagonal a_;
};

class EigenFunctionMap final : public LinearMap {
 public:
  EigenFunctionMap(std::shared_ptr<const DenseMatrix> q, Vector f) : q_(std::move(q)), f_(std::move(f)) {
    if (q_->cols() != f_.size()) throw std::invalid_argument("eigen_function_map: dimension mismatch");
  }
  Index rows() const override { return q_->rows(); }
  Index cols() const override { return q_->rows(); }
  DenseMatrix apply(const DenseMatrix& x) const override {
    check_rows(q_->rows(), x, "EigenFunctionMap");
    DenseMatrix y = q_->transpose() * x;
    y = f_.asDiagonal() * y;
    return (*q_) * y;
  }

 private:
  std::shared_ptr<const DenseMatrix> q_;
  Vector f_;
};

class ComposedMap final : public LinearMap {
 public:
  ComposedMap(MapPtr outer, MapPtr inner) : outer_(std::move(outer)), inner_(std::move(inner)) {}
  Index rows() const override { return outer_->rows(); }
  Index cols() const override { return inner_->cols(); }
  DenseMatrix apply(const DenseMatrix& x) const override { return outer_->apply(inner_->apply(x)); }

 private:
  MapPtr outer_;
  MapPtr inner_;
};

}  // namespace

DenseMatrix LinearMap::to_dense() const { return apply(DenseMatrix::Identity(cols(), cols())); }

MapPtr identity_map(Index n) { return std::make_shared<IdentityMap>(n); }
MapPtr dense_map(DenseMatrix a) { return std::make_shared<DenseMap>(std::move(a)); }
MapPtr diagonal_map(Vector d) { return std::make_shared<DiagonalMap>(std::move(d)); }

MapPtr rank_one_map(Vector u, Vector v, double c) {
  return std::make_shared<RankOneMap>(std::move(u), std::move(v), c);
}

MapPtr congruence_map(std::shared_ptr<const BidiagonalCholesky> t, SymTridiagonal a) {
  return std::make_shared<CongruenceMap>(std::move(t), std::move(a));
}

MapPtr eigen_function_map(std::shared_ptr<const DenseMatrix> q, Vector f) {
  return std::make_shared<EigenFunctionMap>(std::move(q), std::move(f));
}

MapPtr compose(MapPtr outer, MapPtr inner) {
  if (outer->cols() != inner->rows()) throw std::invalid_argument("compose: dimension mismatch");
  if (outer->is_identity()) return inner;
  if (inner->is_identity()) return outer;
  const auto* d_out = dynamic_cast<const DiagonalMap*>(outer.get());
  const auto* d_in = dynamic_cast<const DiagonalMap*>(inner.get());
  if (d_out != nullptr && d_in != nullptr) {
    return diagonal_map(d_out->diagonal().cwiseProduct(d_in->diagonal()));
  }
  const auto* r_out = dynamic_cast<const RankOneMap*>(outer.get());
  const auto* r_in = dynamic_cast<const RankOneMap*>(inner.get());
  if (d_out != nullptr && r_in != nullptr) {
    return rank_one_map(d_out->diagonal().cwiseProduct(r_in->u()), r_in->v(), r_in->c());
  }
  if (r_out != nullptr && d_in != nullptr) {
    return rank_one_map(r_out->u(), d_in->diagonal().cwiseProduct(r_out->v()), r_out->c());
  }
  return std::make_shared<ComposedMap>(std::move(outer), std::move(inner));
}

KronOperator::KronOperator(std::vector<KronTerm> terms) : terms_(std::move(terms)) {
  if (terms_.empty()) throw std::invalid_argument("KronOperator: no terms");
  angular_dim_ = terms_.front().angular->cols();
  spatial_dim_ = terms_.front().spatial->cols();
  for (const auto& t : terms_) {
    if (!t.angular || !t.spatial) throw std::invalid_argument("KronOperator: null map");
    if (t.angular->rows() != angular_dim_ || t.angular->cols() != angular_dim_ || t.spatial->rows() != spatial_dim_ ||
        t.spatial->cols() != spatial_dim_) {
      throw std::invalid_argument("KronOperator: inconsistent term dimensions");
    }
    if (!std::isfinite(t.coeff)) throw std::invalid_argument("KronOperator: non-finite coefficient");
  }
}

LowRankMatrix apply_term(const KronTerm& term, const LowRankMatrix& w) {
  if (w.rows() != term.spatial->cols() || w.cols() != term.angular->cols()) {
    throw std::invalid_argument("apply_term: dimension mismatch");
  }
  if (w.rank() == 0 || term.coeff == 0.0) return LowRankMatrix(term.spatial->rows(), term.angular->rows());
  return LowRankMatrix::from_factors(term.spatial->apply(w.left()), term.coeff * w.weights(),
                                     term.angular->apply(w.right()));
}

LowRankMatrix kron_apply_raw(const KronOperator& op, const LowRankMatrix& w) {
  if (w.rows() != op.spatial_dim() || w.cols() != op.angular_dim()) {
    throw std::invalid_argument("kron_apply: dimension mismatch (operator " + std::to_string(op.spatial_dim()) +
                                "x" + std::to_string(op.angular_dim()) + ", matrix " + std::to_string(w.rows()) +
                                "x" + std::to_string(w.cols()) + ")");
  }
  if (w.rank() == 0) return LowRankMatrix(w.rows(), w.cols());
  std::vector<LowRankMatrix> parts;
  parts.reserve(op.size());
  for (const auto& t : op.terms()) parts.push_back(apply_term(t, w));
  return concatenate(parts);
}

LowRankMatrix kron_apply(const KronOperator& op, const LowRankMatrix& w, double round_tol) {
  if (round_tol < 0.0) throw std::invalid_argument("kron_apply: negative rounding tolerance");
  LowRankMatrix out = canonicalize(kron_apply_raw(op, w));
  if (round_tol > 0.0) out = truncated_svd(out, round_tol);
  return out;
}

DenseMatrix materialize(const KronOperator& op) {
  const Index n = op.spatial_dim() * op.angular_dim();
  if (n > kDenseMaterializeLimit) {
    throw std::invalid_argument("materialize: operator of size " + std::to_string(n) + " exceeds the dense limit");
  }
  DenseMatrix out = DenseMatrix::Zero(n, n);
  for (const auto& t : op.terms()) {
    const DenseMatrix a = t.angular->to_dense();
    const DenseMatrix b = t.spatial->to_dense();
    const Index nb = b.rows();
    for (Index i = 0; i < a.rows(); ++i) {
      for (Index j = 0; j < a.cols(); ++j) {
        if (a(i, j) != 0.0) out.block(i * nb, j * nb, nb, nb) += t.coeff * a(i, j) * b;
      }
    }
  }
  return out;
}

KronOperator compose_sandwich(const KronOperator& p_half, const KronOperator& e) {
  if (p_half.spatial_dim() != e.spatial_dim() || p_half.angular_dim() != e.angular_dim()) {
    throw std::invalid_argument("compose_sandwich: dimension mismatch");
  }
  std::vector<KronTerm> terms;
  terms.reserve(p_half.size() * p_half.size() * e.size());
  for (const auto& outer : p_half.terms()) {
    for (const auto& mid : e.terms()) {
      for (const auto& inner : p_half.terms()) {
        KronTerm t;
        t.coeff = outer.coeff * mid.coeff * inner.coeff;
        t.angular = compose(outer.angular, compose(mid.angular, inner.angular));
        t.spatial = compose(outer.spatial, compose(mid.spatial, inner.spatial));
        terms.push_back(std::move(t));
      }
    }
  }
  return KronOperator(std::move(terms));
}

Vector vec(const DenseMatrix& u) { return Eigen::Map<const Vector>(u.data(), u.size()); }

DenseMatrix mat(const Vector& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw std::invalid_argument("mat: size mismatch");
  return Eigen::Map<const DenseMatrix>(v.data(), rows, cols);
}

}  // namespace lrrte

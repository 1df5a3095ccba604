#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "lrrte/expsum.hpp"
#include "lrrte/kron.hpp"
#include "lrrte/lowrank.hpp"

namespace lrrte {

struct SolverParams {
  double eps_target = 1e-7;  // residual tolerance
  double eps_precond = 0.1;  // exponential-sum accuracy
  double delta0 = 0.1;
  double theta = 0.75;
  double nu = 0.5;
  double eta0 = 0.1;
  double tau1 = -1.0;  // negative: (1 - rho) / (4 (3 - rho))
  double tau2 = -1.0;  // negative: (1 - rho) / 4
  long max_iter = 0;   // 0: 50 ceil(log eps / log rho)
};

struct DerivedConstants {
  double gamma1_eps = 0.0;
  double gamma2_eps = 0.0;
  double omega = 0.0;
  double rho = 0.0;
};

// (1-eps)^2 gamma1, (1+eps)^2 gamma2, the optimal step and its contraction factor.
DerivedConstants derived_constants(double gamma1, double gamma2, double eps_sum);

struct InexactConstants {
  double tau1 = 0.0;
  double tau2 = 0.0;
  double B = 0.0;
  double C = 0.0;
};

// Resolves the default tau choices and evaluates B, C. Throws std::invalid_argument
// when tau1 is outside (0,1) or tau2 outside (0, (1-rho)/2).
InexactConstants inexact_constants(const SolverParams& params, const DerivedConstants& d);

long default_max_iter(const SolverParams& params, const DerivedConstants& d);

// Linear operator on spatial x angular low-rank matrices with an exact (up to
// the canonicalization floor) application.
class LowRankOperator {
 public:
  virtual ~LowRankOperator() = default;
  virtual Index spatial_dim() const = 0;
  virtual Index angular_dim() const = 0;
  virtual LowRankMatrix apply(const LowRankMatrix& w) const = 0;
};

class KronLowRankOperator final : public LowRankOperator {
 public:
  explicit KronLowRankOperator(KronOperator op) : op_(std::move(op)) {}
  Index spatial_dim() const override { return op_.spatial_dim(); }
  Index angular_dim() const override { return op_.angular_dim(); }
  LowRankMatrix apply(const LowRankMatrix& w) const override { return kron_apply(op_, w, 0.0); }
  const KronOperator& op() const { return op_; }

 private:
  KronOperator op_;
};

// P E P applied in three canonicalized stages.
class SandwichOperator final : public LowRankOperator {
 public:
  SandwichOperator(KronOperator p_half, KronOperator e);
  Index spatial_dim() const override { return e_.spatial_dim(); }
  Index angular_dim() const override { return e_.angular_dim(); }
  LowRankMatrix apply(const LowRankMatrix& w) const override;
  const KronOperator& p_half() const { return p_; }
  const KronOperator& e() const { return e_; }

 private:
  KronOperator p_;
  KronOperator e_;
};

struct TraceRecord {
  long k = 0;
  Index rank = 0;
  double delta = 0.0;
  double eta = 0.0;
  double res_norm = 0.0;
  int eta_halvings = 0;
  Index apply_rank = 0;  // largest rank inside the inexact residual, Alg. 2 only
};

struct SolveTrace {
  std::vector<TraceRecord> records;  // records[0] is the initial state
  long iterations = 0;               // loop passes
  long residual_evaluations = 0;
  bool converged = false;
  Index final_rank = 0;
  double final_residual = 0.0;
  Index max_inexact_rank = 0;
  Index max_naive_rank = 0;
};

struct SolveResult {
  LowRankMatrix W;
  SolveTrace trace;
};

using ProgressCallback = std::function<void(const TraceRecord&)>;

// w <- w - omega (A w - f), optionally truncating iterates to round_tol.
SolveResult richardson_plain(const LowRankOperator& A, const LowRankMatrix& F, const DerivedConstants& d,
                             double eps_target, long max_iter, double round_tol = 0.0);

// Soft-thresholded Richardson with adaptive threshold (Algorithm 1).
SolveResult st_solve(const LowRankOperator& A, const LowRankMatrix& F, const SolverParams& params,
                     const DerivedConstants& d, const ProgressCallback& progress = {});

// Fixed-threshold iteration W <- S_delta(W - omega (A W - F)) run for `iterations` steps.
LowRankMatrix st_fixed_delta(const LowRankOperator& A, const LowRankMatrix& F, double omega, double delta,
                             long iterations, const LowRankMatrix* start = nullptr);

struct ApplyStats {
  Index max_rank = 0;  // largest rank among the partial sums
  Index naive_rank = 0;
  std::size_t dropped = 0;
};

// Sum of Theta_{m0} E Theta_{m1} W over all (m0, m1) within eta/2 of the exact
// value: small products are dropped and the rest accumulated with truncation.
LowRankMatrix apply_inexact(const KronOperator& p_half, const KronOperator& e, const LowRankMatrix& w, double eta,
                            ApplyStats* stats = nullptr);

// Soft-thresholded Richardson with inexact residuals (Algorithm 2).
SolveResult st_solve_inexact(const KronOperator& p_half, const KronOperator& e, const LowRankMatrix& F,
                             const SolverParams& params, const DerivedConstants& d,
                             const ProgressCallback& progress = {});

}  // namespace lrrte

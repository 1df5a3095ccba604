#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "lrrte/benchmarks.hpp"
#include "lrrte/experiment.hpp"

namespace lrrte {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  bool skipped = false;  // too slow to run at these constants; not a failure
};

// Small dense system with everything needed by the oracles.
struct DenseSystem {
  AssembledSystem sys;
  Preconditioner P;
  DerivedConstants d;
  DenseMatrix A;  // P^{-1/2} E P^{-1/2}
  Vector f;       // vec(P^{-1/2} F_hat)
  LowRankMatrix F;
  DenseMatrix W_star;
};

DenseSystem dense_system(CaseId id, Scheme scheme, Index J, Index N, double eps_precond);

// Dense soft thresholding through a full SVD.
DenseMatrix dense_soft_threshold(const DenseMatrix& w, double delta);

// Fixed point of W <- S_delta(W - omega (A W - F)) iterated densely until the
// update stalls at round-off.
DenseMatrix dense_fixed_point(const DenseSystem& s, double delta, long max_iter = 2000000);

CheckResult check_expsum_certificates(double eps_precond, const std::vector<std::pair<Index, Index>>& sizes);
CheckResult check_spectral_equivalence(double eps_precond, const std::vector<std::pair<Index, Index>>& sizes);
CheckResult check_contraction(double eps_precond, double delta, std::uint64_t seed, int trials);
CheckResult check_fixed_point_sandwich(double eps_precond, const std::vector<double>& deltas);
CheckResult check_final_certificate(double eps_precond, double eps_target);
CheckResult check_inexact_apply(double eps_precond, std::uint64_t seed, int trials);
CheckResult check_soft_threshold(std::uint64_t seed, int trials);
CheckResult check_truncated_svd(std::uint64_t seed, int trials);

std::vector<CheckResult> run_verify(const ExperimentConfig& cfg);

// One "PASS name: detail" / "FAIL ..." / "SKIP ..." line per check; returns true when all passed.
bool print_checks(const std::vector<CheckResult>& checks, std::ostream& out);

}  // namespace lrrte

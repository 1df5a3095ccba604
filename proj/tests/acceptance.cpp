#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lrrte/benchmarks.hpp"
#include "lrrte/experiment.hpp"
#include "lrrte/verify.hpp"

using namespace lrrte;

namespace {

struct Outcome {
  bool passed = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail << "[fail] ";
    }
    detail << what << "; ";
  }
};

bool within(double got, double ref, double rel) { return std::abs(got - ref) <= rel * std::abs(ref); }

std::string f(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

std::string opt(const std::optional<double>& x) { return x ? f(*x) : std::string("-"); }

std::vector<ConvergenceRow> study(CaseId id, Scheme scheme, std::vector<std::pair<Index, Index>> sizes,
                                  SolverVariant variant = SolverVariant::st,
                                  ToleranceRule rule = ToleranceRule::fixed) {
  StudyConfig cfg;
  cfg.case_id = id;
  cfg.scheme = scheme;
  cfg.sizes = std::move(sizes);
  cfg.variant = variant;
  cfg.tolerance_rule = rule;
  cfg.params.eps_target = manufactured_case(id).default_eps_target;
  return run_convergence_study(cfg);
}

void row_errors(Outcome& o, const ConvergenceRow& r) {
  if (!r.error.empty()) o.require(false, "row (" + std::to_string(r.J) + "," + std::to_string(r.N) + ") failed: " + r.error);
}

Outcome criterion1() {
  Outcome o;
  const auto rows = study(CaseId::TC1, Scheme::SN, {{128, 128}, {256, 256}});
  const double L2[] = {3.12e-3, 1.56e-3}, W2G[] = {4.45e-3, 2.23e-3};
  const long Nit[] = {232, 223};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ConvergenceRow& r = rows[i];
    row_errors(o, r);
    const std::string tag = "J=" + std::to_string(r.J) + " ";
    o.require(r.converged, tag + "converged");
    o.require(r.err_L2 && within(*r.err_L2, L2[i], 0.02), tag + "L2 " + opt(r.err_L2) + " vs " + f(L2[i]));
    o.require(r.err_W2G && within(*r.err_W2G, W2G[i], 0.02), tag + "W2G " + opt(r.err_W2G) + " vs " + f(W2G[i]));
    o.require(std::abs(static_cast<long>(r.rank_W) - 16) <= 3, tag + "rank_W " + std::to_string(r.rank_W) + " vs 16");
    o.require(within(static_cast<double>(r.N_it), static_cast<double>(Nit[i]), 0.2),
              tag + "N_it " + std::to_string(r.N_it) + " vs " + std::to_string(Nit[i]));
  }
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto rows = study(CaseId::TC1, Scheme::PN, {{128, 27}, {256, 41}, {512, 65}});
  const double L2[] = {2.72e-3, 1.47e-3, 7.41e-4};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ConvergenceRow& r = rows[i];
    row_errors(o, r);
    const std::string tag = "J=" + std::to_string(r.J) + " ";
    o.require(r.err_L2 && within(*r.err_L2, L2[i], 0.05), tag + "L2 " + opt(r.err_L2) + " vs " + f(L2[i]));
    if (i > 0) {
      o.require(r.rate_L2 && *r.rate_L2 >= 0.85 && *r.rate_L2 <= 1.05, tag + "rate " + opt(r.rate_L2));
    }
  }
  return o;
}

Outcome criterion3() {
  Outcome o;
  const double J = 1e6, N = 32769.0;
  const ExpSumApproximation a = expsum_params(0.1, 12.0 / (J * J) + 1.0 / (3.0 * N * N), 2.0);
  o.require(a.rank() == 17 && a.i1 == 3 && a.i2 == 13,
            "extreme case r_p " + std::to_string(a.rank()) + " (i1 " + std::to_string(a.i1) + ", i2 " + std::to_string(a.i2) + ")");
  const ManufacturedCase c1 = manufactured_case(CaseId::TC1), c3 = manufactured_case(CaseId::TC3);
  double worst = 0.0;
  int built = 0;
  for (auto [c, scheme, Jn, Nn] :
       {std::tuple{&c1, Scheme::SN, 128, 128}, std::tuple{&c1, Scheme::SN, 256, 256}, std::tuple{&c1, Scheme::SN, 512, 512},
        std::tuple{&c1, Scheme::PN, 128, 27}, std::tuple{&c1, Scheme::PN, 256, 41}, std::tuple{&c1, Scheme::PN, 512, 65},
        std::tuple{&c3, Scheme::SN, 128, 128}, std::tuple{&c3, Scheme::PN, 128, 27}}) {
    const AssembledSystem sys = assemble(make_spec(*c, scheme, Jn, Nn));
    const Preconditioner P = build_preconditioner(sys, 0.1);
    worst = std::max(worst, expsum_max_relative_error(P.expsum, sys.bounds.lambda, sys.bounds.Lambda));
    ++built;
  }
  o.require(worst <= 0.1, "max relative error " + f(worst) + " over " + std::to_string(built) + " preconditioners");
  return o;
}

Outcome from_check(const CheckResult& c) {
  Outcome o;
  o.require(c.passed, c.name + ": " + c.detail);
  return o;
}

Outcome criterion4() { return from_check(check_spectral_equivalence(0.1, {{4, 2}, {8, 4}, {16, 8}})); }

Outcome criterion5() {
  Outcome o;
  const CheckResult s = check_fixed_point_sandwich(0.1, {1e-2, 1e-3});
  o.require(s.passed, s.name + ": " + s.detail);
  const CheckResult c = check_contraction(0.1, 1e-2, 5, 20);
  o.require(c.passed, c.name + ": " + c.detail);
  return o;
}

Outcome criterion6() { return from_check(check_inexact_apply(0.1, 2024, 50)); }

Outcome criterion7() {
  Outcome o;
  const auto rows = study(CaseId::TC1, Scheme::SN, {{128, 128}}, SolverVariant::st_inexact);
  const ConvergenceRow& r = rows.front();
  row_errors(o, r);
  o.require(r.converged, "converged after " + std::to_string(r.N_it) + " iterations, rank_W " + std::to_string(r.rank_W));
  o.require(r.r_inexact <= 150, "r_inexact " + std::to_string(r.r_inexact));
  o.require(r.r_naive > 7000, "r_naive " + std::to_string(r.r_naive));
  o.require(r.err_L2 && within(*r.err_L2, 3.12e-3, 0.02), "L2 " + opt(r.err_L2));
  o.require(r.err_W2G && within(*r.err_W2G, 4.45e-3, 0.02), "W2G " + opt(r.err_W2G));
  return o;
}

Outcome criterion8() {
  Outcome o;
  const auto rows = study(CaseId::TC1, Scheme::SN, {{128, 128}, {256, 256}, {512, 512}}, SolverVariant::st,
                          ToleranceRule::scaled);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ConvergenceRow& r = rows[i];
    row_errors(o, r);
    const std::string tag = "J=" + std::to_string(r.J) + " ";
    o.require(r.converged && r.N_it < 200, tag + "N_it " + std::to_string(r.N_it));
    o.require(r.rank_W <= 6, tag + "rank_W " + std::to_string(r.rank_W));
    if (i > 0) {
      o.require(r.N_it >= rows[i - 1].N_it, tag + "N_it nondecreasing");
      o.require(r.rate_W2G && *r.rate_W2G >= 0.95 && *r.rate_W2G <= 1.05, tag + "W2G rate " + opt(r.rate_W2G));
      o.require(r.rate_L2 && *r.rate_L2 >= 0.95 && *r.rate_L2 <= 1.05, tag + "L2 rate " + opt(r.rate_L2));
    }
  }
  return o;
}

// Average slope of log ||R_k|| over every 50-iteration window.
double worst_window_slope(const SolveTrace& t) {
  double worst = -INFINITY;
  const auto& rec = t.records;
  for (std::size_t k = 0; k + 50 < rec.size(); ++k) {
    if (!(rec[k].res_norm > 0.0) || !(rec[k + 50].res_norm > 0.0)) continue;
    worst = std::max(worst, (std::log(rec[k + 50].res_norm) - std::log(rec[k].res_norm)) / 50.0);
  }
  return worst;
}

Outcome criterion9() {
  Outcome o;
  const auto rows = study(CaseId::TC3, Scheme::SN, {{128, 128}});
  const ConvergenceRow& r = rows.front();
  row_errors(o, r);
  o.require(r.converged, "converged after " + std::to_string(r.N_it) + " iterations");
  const double slope = worst_window_slope(r.trace);
  o.require(slope <= std::log(r.derived.rho) + 0.05, "worst 50-window log-residual slope " + f(slope));
  o.require(std::abs(static_cast<long>(r.rank_W) - 15) <= 4, "rank_W " + std::to_string(r.rank_W) + " vs 15");
  o.require(std::abs(static_cast<long>(r.rank_U) - 33) <= 4, "rank_U " + std::to_string(r.rank_U) + " vs 33");
  return o;
}

Outcome criterion10() {
  Outcome o;
  const CheckResult s = check_soft_threshold(99, 500);
  o.require(s.passed, s.name + ": " + s.detail);
  const CheckResult t = check_truncated_svd(100, 500);
  o.require(t.passed, t.name + ": " + t.detail);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                                          criterion6, criterion7, criterion8, criterion9, criterion10};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::cerr << "unknown criterion " << argv[i] << "\n";
      return 2;
    }
    selected.insert(k);
  }
  if (selected.empty())
    for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) selected.insert(k);

  bool all = true;
  for (int k : selected) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(k - 1)]();
    } catch (const std::exception& ex) {
      o.passed = false;
      o.detail << "exception: " << ex.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "criterion " << k << ": " << (o.passed ? "PASS" : "FAIL") << " (" << f(secs) << " s) " << o.detail.str()
              << std::endl;
    all = all && o.passed;
  }
  return all ? 0 : 1;
}

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lrrte/discretization.hpp"
#include "lrrte/expsum.hpp"
#include "lrrte/richardson.hpp"

namespace lrrte {

enum class CaseId { TC1, TC2_ALG, TC2_EXP, TC3 };

std::string to_string(CaseId id);
CaseId case_from_string(const std::string& s);

// One separable summand a(z) b(mu) of an exact solution, with a'(z).
struct SolutionTerm {
  ScalarFn z;
  ScalarFn dz;
  ScalarFn mu;
};

struct ManufacturedCase {
  CaseId id = CaseId::TC1;
  double Z = 1.0;
  CoefficientFunction sigma_t = CoefficientFunction::constant(1.0);
  CoefficientFunction sigma_s = CoefficientFunction::constant(0.0);
  SourceData source;
  std::vector<SolutionTerm> u_terms;  // empty when no exact solution is known
  int series_cutoff = 0;
  double default_eps_target = 1e-7;

  bool has_exact() const { return !u_terms.empty(); }
  double u(double z, double mu) const;
  double u_dz(double z, double mu) const;
};

inline constexpr int kSeriesCutoff = 200;

ManufacturedCase manufactured_case(CaseId id);

DiscretizationSpec make_spec(const ManufacturedCase& c, Scheme scheme, Index J, Index N);

struct ErrorNorms {
  double L2 = 0.0;
  double W2G = 0.0;
};

// ||u - u_h|| in L2 and the graph norm, U in nodal x angular coefficients.
// Throws std::invalid_argument when the case has no exact solution.
ErrorNorms error_norms(const ManufacturedCase& c, const LowRankMatrix& U, const DiscretizationSpec& spec);

// U = T_z^{-T} (P^{-1/2} W), canonicalized.
LowRankMatrix back_transform(const LowRankMatrix& W, const Preconditioner& P, const BidiagonalCholesky& T_z);

// Number of singular values above rel * sigma_1.
Index numerical_rank(const LowRankMatrix& w, double rel = 1e-12);

enum class SolverVariant { plain, st, st_inexact };
enum class ToleranceRule { fixed, scaled };

std::string to_string(SolverVariant v);
SolverVariant variant_from_string(const std::string& s);
std::string to_string(ToleranceRule r);
ToleranceRule tolerance_rule_from_string(const std::string& s);

struct StudyConfig {
  CaseId case_id = CaseId::TC1;
  Scheme scheme = Scheme::SN;
  std::vector<std::pair<Index, Index>> sizes;  // (J, N)
  SolverVariant variant = SolverVariant::st;
  SolverParams params;
  ToleranceRule tolerance_rule = ToleranceRule::fixed;
  double scaled_tolerance = 0.1;  // eps = scaled_tolerance / J
  int jobs = 1;
};

struct ConvergenceRow {
  Index J = 0;
  Index N = 0;
  long N_it = 0;
  long residual_evaluations = 0;
  std::optional<double> err_L2, rate_L2, err_W2G, rate_W2G;
  Index rank_W = 0;
  Index rank_U = 0;
  Index r_inexact = 0;
  Index r_naive = 0;
  bool converged = false;
  int r_p = 0;
  int i1 = 0, i2 = 0;
  double lambda = 0.0, Lambda = 0.0;
  double gamma1 = 0.0, gamma2 = 0.0;
  DerivedConstants derived;
  double eps_target = 0.0;
  double F_norm = 0.0;
  bool delta0_admissible = true;  // delta0 >= omega ||F||
  double load_relative_change = 0.0;
  bool load_converged = true;
  double seconds = 0.0;
  std::string error;  // nonempty when the row failed
  SolveTrace trace;
};

// Single (J, N) row: assemble, precondition, solve, back-transform, measure.
ConvergenceRow run_study_row(const ManufacturedCase& c, const StudyConfig& cfg, Index J, Index N,
                             const ProgressCallback& progress = {});

// All rows in order, with log2 rates between consecutive rows. Failed rows keep
// their error text and the study continues.
std::vector<ConvergenceRow> run_convergence_study(const StudyConfig& cfg);

// log2(prev / next); empty if either is missing or nonpositive.
std::optional<double> convergence_rate(std::optional<double> prev, std::optional<double> next);

}  // namespace lrrte

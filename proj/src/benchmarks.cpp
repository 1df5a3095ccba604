#include "lrrte/benchmarks.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "lrrte/quadrature.hpp"

namespace lrrte {

namespace {

constexpr double kPi = std::numbers::pi;

// TC1 and TC2 share these optical parameters.
CoefficientFunction smooth_sigma_s() {
  return CoefficientFunction::analytic([](double z) { return 1.0 + 0.5 * std::sin(kPi * z); },
                                       [](double z) { return 0.5 * kPi * std::cos(kPi * z); });
}

ManufacturedCase tc1() {
  ManufacturedCase c;
  c.id = CaseId::TC1;
  c.sigma_s = smooth_sigma_s();
  c.sigma_t = CoefficientFunction::constant(3.0) + c.sigma_s;
  const CoefficientFunction st = c.sigma_t;
  const CoefficientFunction ss = c.sigma_s;

  auto E = [](double z) { return std::exp(z * z - z); };
  auto dE = [E](double z) { return (2.0 * z - 1.0) * E(z); };
  auto d2E = [E](double z) { return (2.0 + (2.0 * z - 1.0) * (2.0 * z - 1.0)) * E(z); };
  auto b = [](double mu) { return mu * std::cosh(mu); };
  const double c1 = std::sinh(1.0) - std::cosh(1.0) + 1.0;  // int_0^1 mu cosh(mu)

  c.u_terms.push_back({E, dE, b});
  c.source.q.push_back({[=](double z) {
                          const double t = st(z);
                          return -(d2E(z) / t - st.derivative(z) * dE(z) / (t * t));
                        },
                        [](double mu) { return mu * mu * mu * std::cosh(mu); }});
  c.source.q.push_back({[=](double z) { return st(z) * E(z); }, b});
  c.source.q.push_back({[=](double z) { return -c1 * ss(z) * E(z); }, [](double) { return 1.0; }});
  const double t0 = st(0.0);
  const double t1 = st(1.0);
  c.source.g_left = [=](double mu) { return mu * std::cosh(mu) * (1.0 + mu / t0); };
  c.source.g_right = [=](double mu) { return mu * std::cosh(mu) * (1.0 + mu / t1); };
  return c;
}

ManufacturedCase tc2(CaseId id) {
  ManufacturedCase c;
  c.id = id;
  c.sigma_s = smooth_sigma_s();
  c.sigma_t = CoefficientFunction::constant(3.0) + c.sigma_s;
  const CoefficientFunction st = c.sigma_t;
  c.series_cutoff = kSeriesCutoff;

  std::vector<double> sig;
  for (int k = 1; k <= c.series_cutoff; ++k) {
    const double s = id == CaseId::TC2_ALG ? std::pow(static_cast<double>(k), -3.0) : std::exp(-double(k) * k);
    if (s == 0.0) break;
    sig.push_back(s);
  }
  for (std::size_t i = 0; i < sig.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    const double s2 = 2.0 * sig[i];
    const double kp = k * kPi;
    auto cosk = [kp](double mu) { return std::cos(kp * mu); };
    c.u_terms.push_back({[=](double z) { return s2 * std::sin(kp * z); },
                         [=](double z) { return s2 * kp * std::cos(kp * z); }, cosk});
    // -d/dz(mu^2/sigma_t du/dz) + sigma_t u; the scattering term vanishes.
    c.source.q.push_back({[=](double z) {
                            const double t = st(z);
                            return s2 * (kp * kp * std::sin(kp * z) / t + kp * st.derivative(z) * std::cos(kp * z) / (t * t));
                          },
                          [kp](double mu) { return mu * mu * std::cos(kp * mu); }});
    c.source.q.push_back({[=](double z) { return s2 * st(z) * std::sin(kp * z); }, cosk});
  }
  const double t0 = st(0.0);
  const double t1 = st(1.0);
  c.source.g_left = [=](double mu) {
    double acc = 0.0;
    for (std::size_t i = 0; i < sig.size(); ++i) {
      const double kp = static_cast<double>(i + 1) * kPi;
      acc += 2.0 * sig[i] * kp * std::cos(kp * mu);
    }
    return -mu / t0 * acc;
  };
  c.source.g_right = [=](double mu) {
    double acc = 0.0;
    for (std::size_t i = 0; i < sig.size(); ++i) {
      const double kp = static_cast<double>(i + 1) * kPi;
      const double sign = (i + 1) % 2 == 0 ? 1.0 : -1.0;
      acc += 2.0 * sig[i] * kp * sign * std::cos(kp * mu);
    }
    return mu / t1 * acc;
  };
  return c;
}

ManufacturedCase tc3() {
  ManufacturedCase c;
  c.id = CaseId::TC3;
  const std::vector<double> bps{0.75, 0.875};
  c.sigma_s = CoefficientFunction::piecewise_constant(bps, {36.52, 32.27, 5.20});
  const CoefficientFunction sa = CoefficientFunction::piecewise_constant(bps, {0.52, 8.31, 0.60});
  c.sigma_t = sa + c.sigma_s;
  const double alpha = 2.4;
  const double beta = 2500.0;
  c.source.g_left = [=](double mu) { return alpha * std::exp(-(1.0 - mu) * (1.0 - mu) / beta); };
  c.default_eps_target = 1e-4;
  return c;
}

double sum_terms(const std::vector<SolutionTerm>& terms, double z, double mu, bool dz) {
  double acc = 0.0;
  for (const auto& t : terms) acc += (dz ? t.dz(z) : t.z(z)) * t.mu(mu);
  return acc;
}

}  // namespace

std::string to_string(CaseId id) {
  switch (id) {
    case CaseId::TC1: return "TC1";
    case CaseId::TC2_ALG: return "TC2_ALG";
    case CaseId::TC2_EXP: return "TC2_EXP";
    case CaseId::TC3: return "TC3";
  }
  return "?";
}

CaseId case_from_string(const std::string& s) {
  for (CaseId id : {CaseId::TC1, CaseId::TC2_ALG, CaseId::TC2_EXP, CaseId::TC3}) {
    if (to_string(id) == s) return id;
  }
  throw std::invalid_argument("unknown case '" + s + "' (expected TC1, TC2_ALG, TC2_EXP or TC3)");
}

double ManufacturedCase::u(double z, double mu) const { return sum_terms(u_terms, z, mu, false); }
double ManufacturedCase::u_dz(double z, double mu) const { return sum_terms(u_terms, z, mu, true); }

ManufacturedCase manufactured_case(CaseId id) {
  switch (id) {
    case CaseId::TC1: return tc1();
    case CaseId::TC2_ALG:
    case CaseId::TC2_EXP: return tc2(id);
    case CaseId::TC3: return tc3();
  }
  throw std::invalid_argument("manufactured_case: unknown id");
}

DiscretizationSpec make_spec(const ManufacturedCase& c, Scheme scheme, Index J, Index N) {
  DiscretizationSpec s;
  s.scheme = scheme;
  s.J = J;
  s.N = N;
  s.Z = c.Z;
  s.sigma_t = c.sigma_t;
  s.sigma_s = c.sigma_s;
  s.validate();
  return s;
}

ErrorNorms error_norms(const ManufacturedCase& c, const LowRankMatrix& U, const DiscretizationSpec& spec) {
  if (!c.has_exact()) throw std::invalid_argument("error_norms: " + to_string(c.id) + " has no exact solution");
  if (U.rows() != spec.spatial_size() || U.cols() != spec.angular_size()) {
    throw std::invalid_argument("error_norms: coefficient matrix has the wrong shape");
  }
  const Index J = spec.J;
  const double h = spec.Z / static_cast<double>(J);

  // Spatial rule, element by element.
  std::vector<double> zq, wz;
  std::vector<Index> elem;
  for (Index e = 0; e < J; ++e) {
    const double a = h * static_cast<double>(e);
    const double b = e + 1 == J ? spec.Z : h * static_cast<double>(e + 1);
    const QuadratureRule r = composite_gauss(std::vector<double>{a, b}, 8);
    for (std::size_t q = 0; q < r.size(); ++q) {
      zq.push_back(r.nodes[q]);
      wz.push_back(r.weights[q]);
      elem.push_back(e);
    }
  }
  const QuadratureRule mr = composite_gauss(angular_quadrature_partition(spec), 8);
  const DenseMatrix H = angular_basis_values(spec, mr.nodes);

  const Index nz = static_cast<Index>(zq.size());
  const Index nm = static_cast<Index>(mr.size());
  const Index nt = static_cast<Index>(c.u_terms.size());
  const Index r = U.rank();

  // Factored error e(z, mu) = X(z) Y(mu)^T on the tensor grid, weighted by sqrt(w).
  DenseMatrix X(nz, nt + r), Xd(nz, nt + r), Y(nm, nt + r), Ymu(nm, nt + r);
  const DenseMatrix& L = U.left();
  for (Index p = 0; p < nz; ++p) {
    const double sw = std::sqrt(wz[p]);
    const Index e = elem[p];
    const double t = (zq[p] - h * static_cast<double>(e)) / h;
    for (Index k = 0; k < nt; ++k) {
      X(p, k) = sw * c.u_terms[k].z(zq[p]);
      Xd(p, k) = sw * c.u_terms[k].dz(zq[p]);
    }
    for (Index k = 0; k < r; ++k) {
      X(p, nt + k) = -sw * U.weights()(k) * ((1.0 - t) * L(e, k) + t * L(e + 1, k));
      Xd(p, nt + k) = -sw * U.weights()(k) * (L(e + 1, k) - L(e, k)) / h;
    }
  }
  const DenseMatrix HR = H * U.right();
  for (Index p = 0; p < nm; ++p) {
    const double sw = std::sqrt(mr.weights[p]);
    const double mu = mr.nodes[p];
    for (Index k = 0; k < nt; ++k) Y(p, k) = sw * c.u_terms[k].mu(mu);
    for (Index k = 0; k < r; ++k) Y(p, nt + k) = sw * HR(p, k);
    Ymu.row(p) = mu * Y.row(p);
  }
  const double l2 = frobenius_norm(canonicalize(LowRankMatrix::from_factors(X, Y)));
  const double d = frobenius_norm(canonicalize(LowRankMatrix::from_factors(Xd, Ymu)));
  return {l2, std::sqrt(l2 * l2 + d * d)};
}

LowRankMatrix back_transform(const LowRankMatrix& W, const Preconditioner& P, const BidiagonalCholesky& T_z) {
  const LowRankMatrix PW = precond_apply(P, W, 0.0);
  if (PW.rank() == 0) return PW;
  return canonicalize(LowRankMatrix::from_factors(T_z.solve_upper(PW.left()), PW.weights(), PW.right()));
}

Index numerical_rank(const LowRankMatrix& w, double rel) {
  const LowRankMatrix c = w.is_canonical() ? w : canonicalize(w);
  if (c.rank() == 0) return 0;
  const Vector& s = c.singular_values();
  Index n = 0;
  for (Index k = 0; k < s.size(); ++k) {
    if (s(k) > rel * s(0)) ++n;
  }
  return n;
}

std::string to_string(SolverVariant v) {
  switch (v) {
    case SolverVariant::plain: return "plain";
    case SolverVariant::st: return "st";
    case SolverVariant::st_inexact: return "st_inexact";
  }
  return "?";
}

SolverVariant variant_from_string(const std::string& s) {
  if (s == "plain") return SolverVariant::plain;
  if (s == "st") return SolverVariant::st;
  if (s == "st_inexact") return SolverVariant::st_inexact;
  throw std::invalid_argument("unknown solver '" + s + "' (expected plain, st or st_inexact)");
}

std::string to_string(ToleranceRule r) { return r == ToleranceRule::fixed ? "fixed" : "scaled"; }

ToleranceRule tolerance_rule_from_string(const std::string& s) {
  if (s == "fixed") return ToleranceRule::fixed;
  if (s == "scaled") return ToleranceRule::scaled;
  throw std::invalid_argument("unknown tolerance rule '" + s + "' (expected fixed or scaled)");
}

ConvergenceRow run_study_row(const ManufacturedCase& c, const StudyConfig& cfg, Index J, Index N,
                             const ProgressCallback& progress) {
  const auto t0 = std::chrono::steady_clock::now();
  ConvergenceRow row;
  row.J = J;
  row.N = N;
  const DiscretizationSpec spec = make_spec(c, cfg.scheme, J, N);
  const AssembledSystem sys = assemble(spec);
  const Preconditioner P = build_preconditioner(sys, cfg.params.eps_precond);
  row.r_p = P.expsum.rank();
  row.i1 = P.expsum.i1;
  row.i2 = P.expsum.i2;
  row.lambda = sys.bounds.lambda;
  row.Lambda = sys.bounds.Lambda;
  row.gamma1 = sys.constants.gamma1;
  row.gamma2 = sys.constants.gamma2;
  row.derived = derived_constants(sys.constants.gamma1, sys.constants.gamma2, cfg.params.eps_precond);

  SolverParams params = cfg.params;
  if (cfg.tolerance_rule == ToleranceRule::scaled) params.eps_target = cfg.scaled_tolerance / static_cast<double>(J);
  row.eps_target = params.eps_target;

  const LoadResult load = assemble_load(c.source, sys);
  row.load_relative_change = load.max_relative_change;
  row.load_converged = load.quadrature_converged;
  const LowRankMatrix F = precond_apply(P, load.F_hat, 0.0);
  row.F_norm = frobenius_norm(F);
  row.delta0_admissible = params.delta0 >= row.derived.omega * row.F_norm;

  const KronOperator& E = sys.transformed.E_hat;
  SolveResult res;
  switch (cfg.variant) {
    case SolverVariant::plain:
      res = richardson_plain(SandwichOperator(P.terms, E), F, row.derived, params.eps_target,
                             default_max_iter(params, row.derived));
      break;
    case SolverVariant::st:
      res = st_solve(SandwichOperator(P.terms, E), F, params, row.derived, progress);
      break;
    case SolverVariant::st_inexact:
      res = st_solve_inexact(P.terms, E, F, params, row.derived, progress);
      break;
  }
  row.trace = res.trace;
  row.N_it = res.trace.iterations;
  row.residual_evaluations = res.trace.residual_evaluations;
  row.converged = res.trace.converged;
  row.rank_W = res.W.rank();
  row.r_inexact = res.trace.max_inexact_rank;
  row.r_naive = res.trace.max_naive_rank;
  const LowRankMatrix U = back_transform(res.W, P, *sys.spatial.T_z);
  row.rank_U = numerical_rank(U);
  if (c.has_exact()) {
    const ErrorNorms err = error_norms(c, U, spec);
    row.err_L2 = err.L2;
    row.err_W2G = err.W2G;
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

std::optional<double> convergence_rate(std::optional<double> prev, std::optional<double> next) {
  if (!prev || !next || !(*prev > 0.0) || !(*next > 0.0)) return std::nullopt;
  return std::log2(*prev / *next);
}

std::vector<ConvergenceRow> run_convergence_study(const StudyConfig& cfg) {
  if (cfg.sizes.empty()) throw std::invalid_argument("run_convergence_study: empty size ladder");
  const ManufacturedCase c = manufactured_case(cfg.case_id);
  std::vector<ConvergenceRow> rows(cfg.sizes.size());
  auto run_one = [&](std::size_t i) {
    const auto [J, N] = cfg.sizes[i];
    try {
      rows[i] = run_study_row(c, cfg, J, N);
    } catch (const std::exception& ex) {
      rows[i] = ConvergenceRow{};
      rows[i].J = J;
      rows[i].N = N;
      rows[i].error = ex.what();
    }
  };
  const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(rows.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < rows.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) run_one(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    rows[i].rate_L2 = convergence_rate(rows[i - 1].err_L2, rows[i].err_L2);
    rows[i].rate_W2G = convergence_rate(rows[i - 1].err_W2G, rows[i].err_W2G);
  }
  return rows;
}

}  // namespace lrrte

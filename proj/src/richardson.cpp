#include "lrrte/richardson.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace lrrte {

DerivedConstants derived_constants(double gamma1, double gamma2, double eps_sum) {
  if (!(gamma1 > 0.0) || !(gamma2 >= gamma1)) throw std::invalid_argument("derived_constants: need 0 < gamma1 <= gamma2");
  if (!(eps_sum >= 0.0 && eps_sum < 1.0)) throw std::invalid_argument("derived_constants: eps must lie in [0, 1)");
  DerivedConstants d;
  d.gamma1_eps = (1.0 - eps_sum) * (1.0 - eps_sum) * gamma1;
  d.gamma2_eps = (1.0 + eps_sum) * (1.0 + eps_sum) * gamma2;
  d.omega = 2.0 / (d.gamma1_eps + d.gamma2_eps);
  d.rho = (d.gamma2_eps - d.gamma1_eps) / (d.gamma2_eps + d.gamma1_eps);
  return d;
}

InexactConstants inexact_constants(const SolverParams& params, const DerivedConstants& d) {
  const double rho = d.rho;
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("inexact_constants: rho must lie in (0, 1)");
  if (!(params.nu > 0.0 && params.nu < 1.0)) throw std::invalid_argument("inexact_constants: nu must lie in (0, 1)");
  InexactConstants c;
  c.tau1 = params.tau1 < 0.0 ? (1.0 - rho) / (4.0 * (3.0 - rho)) : params.tau1;
  c.tau2 = params.tau2 < 0.0 ? (1.0 - rho) / 4.0 : params.tau2;
  if (!(c.tau1 > 0.0 && c.tau1 < 1.0)) throw std::invalid_argument("tau1 must lie in (0, 1)");
  if (!(c.tau2 > 0.0 && c.tau2 < 0.5 * (1.0 - rho))) {
    throw std::invalid_argument("tau2 must lie in (0, (1-rho)/2) = (0, " + std::to_string(0.5 * (1.0 - rho)) + ")");
  }
  const double t1 = c.tau1, t2 = c.tau2, nu = params.nu, g2 = d.gamma2_eps, w = d.omega;
  c.B = (1.0 - rho) * (1.0 - t1) * nu / ((1.0 + t2) * (rho + (1.0 + rho) * t2 / (1.0 - t2)) * g2);
  const double c1 = (1.0 - t1) * t2 * c.B / ((1.0 + t1 + g2 * c.B) * w);
  const double c2 =
      rho * nu * t2 * (1.0 - t1) * (1.0 - t1) / ((rho * (1.0 + t1) * (1.0 + t2) + nu * (1.0 - t1) * (1.0 - rho)) * w);
  c.C = std::min(c1, c2);
  return c;
}

long default_max_iter(const SolverParams& params, const DerivedConstants& d) {
  if (params.max_iter > 0) return params.max_iter;
  if (!(d.rho > 0.0)) return 50;
  const double n = std::ceil(std::log(params.eps_target) / std::log(d.rho));
  return std::max(50L, 50L * static_cast<long>(n));
}

SandwichOperator::SandwichOperator(KronOperator p_half, KronOperator e) : p_(std::move(p_half)), e_(std::move(e)) {
  if (p_.spatial_dim() != e_.spatial_dim() || p_.angular_dim() != e_.angular_dim()) {
    throw std::invalid_argument("SandwichOperator: dimension mismatch");
  }
}

LowRankMatrix SandwichOperator::apply(const LowRankMatrix& w) const {
  return kron_apply(p_, kron_apply(e_, kron_apply(p_, w, 0.0), 0.0), 0.0);
}

namespace {

void check_rhs(Index rows, Index cols, const LowRankMatrix& F) {
  if (F.rows() != rows || F.cols() != cols) throw std::invalid_argument("solver: right-hand side dimension mismatch");
}

LowRankMatrix combine(const LowRankMatrix& a, double ca, const LowRankMatrix& b, double cb) {
  const std::array<LowRankMatrix, 2> t{a, b};
  const std::array<double, 2> c{ca, cb};
  return canonicalize(concatenate(t, c));
}

LowRankMatrix exact_residual(const LowRankOperator& A, const LowRankMatrix& W, const LowRankMatrix& F) {
  if (W.rank() == 0) return F.scaled(-1.0);
  return combine(A.apply(W), 1.0, F, -1.0);
}

TraceRecord make_record(long k, const LowRankMatrix& W, double delta, double eta, double res) {
  TraceRecord r;
  r.k = k;
  r.rank = W.rank();
  r.delta = delta;
  r.eta = eta;
  r.res_norm = res;
  return r;
}

}  // namespace

SolveResult richardson_plain(const LowRankOperator& A, const LowRankMatrix& F, const DerivedConstants& d,
                             double eps_target, long max_iter, double round_tol) {
  check_rhs(A.spatial_dim(), A.angular_dim(), F);
  SolveResult out;
  out.W = LowRankMatrix(F.rows(), F.cols());
  LowRankMatrix R = canonicalize(F).scaled(-1.0);
  double res = frobenius_norm(R);
  out.trace.records.push_back(make_record(0, out.W, 0.0, 0.0, res));
  out.trace.residual_evaluations = 1;
  long k = 0;
  while (res > d.gamma1_eps * eps_target) {
    if (k >= max_iter) break;
    LowRankMatrix next = combine(out.W, 1.0, R, -d.omega);
    if (round_tol > 0.0) next = truncated_svd(next, round_tol);
    out.W = std::move(next);
    R = exact_residual(A, out.W, F);
    res = frobenius_norm(R);
    ++k;
    ++out.trace.residual_evaluations;
    out.trace.records.push_back(make_record(k, out.W, 0.0, 0.0, res));
  }
  out.trace.iterations = k;
  out.trace.converged = res <= d.gamma1_eps * eps_target;
  out.trace.final_rank = out.W.rank();
  out.trace.final_residual = res;
  return out;
}

SolveResult st_solve(const LowRankOperator& A, const LowRankMatrix& F, const SolverParams& params,
                     const DerivedConstants& d, const ProgressCallback& progress) {
  check_rhs(A.spatial_dim(), A.angular_dim(), F);
  if (!(params.theta > 0.0 && params.theta < 1.0)) throw std::invalid_argument("theta must lie in (0, 1)");
  if (!(params.nu > 0.0 && params.nu < 1.0)) throw std::invalid_argument("nu must lie in (0, 1)");
  if (!(params.delta0 >= 0.0)) throw std::invalid_argument("delta0 must be nonnegative");
  const long max_iter = default_max_iter(params, d);
  const double shrink = (1.0 - d.rho) * params.nu / (d.gamma2_eps * d.rho);
  const double stop = d.gamma1_eps * params.eps_target;

  SolveResult out;
  out.W = LowRankMatrix(F.rows(), F.cols());
  LowRankMatrix R = canonicalize(F).scaled(-1.0);
  double res = frobenius_norm(R);
  double delta = params.delta0;
  out.trace.records.push_back(make_record(0, out.W, delta, 0.0, res));
  if (progress) progress(out.trace.records.back());
  out.trace.residual_evaluations = 1;
  long k = 0;
  while (res > stop) {
    if (k >= max_iter) break;
    LowRankMatrix next = soft_threshold(combine(out.W, 1.0, R, -d.omega), delta);
    LowRankMatrix R_next = exact_residual(A, next, F);
    const double res_next = frobenius_norm(R_next);
    ++out.trace.residual_evaluations;
    const double step = difference_norm(next, out.W);
    if (step <= shrink * res_next) delta *= params.theta;
    out.W = std::move(next);
    R = std::move(R_next);
    res = res_next;
    ++k;
    out.trace.records.push_back(make_record(k, out.W, delta, 0.0, res));
    if (progress) progress(out.trace.records.back());
  }
  out.trace.iterations = k;
  out.trace.converged = res <= stop;
  out.trace.final_rank = out.W.rank();
  out.trace.final_residual = res;
  return out;
}

LowRankMatrix st_fixed_delta(const LowRankOperator& A, const LowRankMatrix& F, double omega, double delta,
                             long iterations, const LowRankMatrix* start) {
  check_rhs(A.spatial_dim(), A.angular_dim(), F);
  LowRankMatrix W = start ? canonicalize(*start) : LowRankMatrix(F.rows(), F.cols());
  for (long k = 0; k < iterations; ++k) {
    const LowRankMatrix R = exact_residual(A, W, F);
    W = soft_threshold(combine(W, 1.0, R, -omega), delta);
  }
  return W;
}

LowRankMatrix apply_inexact(const KronOperator& p_half, const KronOperator& e, const LowRankMatrix& w, double eta,
                            ApplyStats* stats) {
  if (!(eta > 0.0)) throw std::invalid_argument("apply_inexact: eta must be positive");
  if (w.rows() != e.spatial_dim() || w.cols() != e.angular_dim()) {
    throw std::invalid_argument("apply_inexact: dimension mismatch");
  }
  const std::size_t rp = p_half.size();
  const std::size_t Q = rp * rp;
  if (stats) *stats = ApplyStats{0, static_cast<Index>(Q * e.size()) * w.rank(), 0};
  if (w.rank() == 0) return LowRankMatrix(w.rows(), w.cols());

  // products[q] with q = rp * m1 + m0
  std::vector<LowRankMatrix> products(Q);
  std::vector<double> norms(Q);
  for (std::size_t m1 = 0; m1 < rp; ++m1) {
    const LowRankMatrix inner = canonicalize(kron_apply_raw(e, apply_term(p_half.terms()[m1], w)));
    for (std::size_t m0 = 0; m0 < rp; ++m0) {
      const std::size_t q = rp * m1 + m0;
      products[q] = canonicalize(apply_term(p_half.terms()[m0], inner));
      norms[q] = frobenius_norm(products[q]);
    }
  }

  std::vector<std::size_t> order(Q);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return norms[a] < norms[b]; });

  // Half of the eta/2 budget goes to dropping, half to the truncations.
  const double budget = 0.5 * eta;
  std::size_t q0 = 0;
  double dropped = 0.0;
  while (q0 < Q && dropped + norms[order[q0]] <= 0.5 * budget) {
    dropped += norms[order[q0]];
    ++q0;
  }
  if (stats) stats->dropped = q0;

  double denom = 0.0;
  for (std::size_t s = q0; s < Q; ++s) denom += static_cast<double>(Q - s) * norms[order[s]];
  LowRankMatrix acc(w.rows(), w.cols());
  if (!(denom > 0.0)) return acc;

  double partial = 0.0;
  for (std::size_t s = q0; s < Q; ++s) {
    partial += norms[order[s]];
    const double zeta = budget * partial / (2.0 * denom);
    acc = truncated_svd(combine(acc, 1.0, products[order[s]], 1.0), zeta);
    if (stats) stats->max_rank = std::max(stats->max_rank, acc.rank());
  }
  return acc;
}

SolveResult st_solve_inexact(const KronOperator& p_half, const KronOperator& e, const LowRankMatrix& F,
                             const SolverParams& params, const DerivedConstants& d, const ProgressCallback& progress) {
  check_rhs(e.spatial_dim(), e.angular_dim(), F);
  if (!(params.theta > 0.0 && params.theta < 1.0)) throw std::invalid_argument("theta must lie in (0, 1)");
  if (!(params.eta0 > 0.0 && params.eta0 < 1.0)) throw std::invalid_argument("eta0 must lie in (0, 1)");
  const InexactConstants ic = inexact_constants(params, d);
  const long max_iter = default_max_iter(params, d);
  const double stop = d.gamma1_eps * params.eps_target;

  SolveResult out;
  SolveTrace& tr = out.trace;
  Index iter_apply_rank = 0;
  auto residual = [&](const LowRankMatrix& W, double eta) {
    ApplyStats st;
    const LowRankMatrix Aw = apply_inexact(p_half, e, W, eta, &st);
    tr.max_inexact_rank = std::max(tr.max_inexact_rank, st.max_rank);
    tr.max_naive_rank = std::max(tr.max_naive_rank, st.naive_rank);
    iter_apply_rank = std::max(iter_apply_rank, st.max_rank);
    ++tr.residual_evaluations;
    return truncated_svd(combine(Aw, 1.0, F, -1.0), 0.5 * eta);
  };

  LowRankMatrix W(F.rows(), F.cols());
  LowRankMatrix R = canonicalize(F).scaled(-1.0);
  double res = frobenius_norm(R);
  double eta = params.eta0;
  double delta = params.delta0;
  tr.records.push_back(make_record(0, W, delta, eta, res));
  if (progress) progress(tr.records.back());
  tr.residual_evaluations = 1;
  long k = 0;
  bool done = false;
  while (res + eta > stop) {
    if (k >= max_iter) break;
    iter_apply_rank = 0;
    int halvings = 0;
    LowRankMatrix next = soft_threshold(combine(W, 1.0, R, -d.omega), delta);
    double step = difference_norm(next, W);
    while (eta > ic.tau2 / d.omega * step && eta > ic.C * res) {
      eta *= 0.5;
      ++halvings;
      R = residual(W, eta);
      res = frobenius_norm(R);
      next = soft_threshold(combine(W, 1.0, R, -d.omega), delta);
      step = difference_norm(next, W);
    }
    double eta_next = 2.0 * eta;
    LowRankMatrix R_next;
    double res_next = 0.0;
    do {
      eta_next *= 0.5;
      R_next = residual(next, eta_next);
      res_next = frobenius_norm(R_next);
      if (res_next + eta_next <= stop) {
        done = true;
        break;
      }
    } while (eta_next > ic.tau1 * res_next);
    if (!done && step <= ic.B * res_next) {
      delta *= params.theta;
      eta_next = ic.tau1 * res_next;
    }
    W = std::move(next);
    R = std::move(R_next);
    res = res_next;
    eta = eta_next;
    ++k;
    TraceRecord rec = make_record(k, W, delta, eta, res);
    rec.eta_halvings = halvings;
    rec.apply_rank = iter_apply_rank;
    tr.records.push_back(rec);
    if (progress) progress(rec);
    if (done) break;
  }
  out.W = std::move(W);
  tr.iterations = k;
  tr.converged = res + eta <= stop;
  tr.final_rank = out.W.rank();
  tr.final_residual = res;
  return out;
}

}  // namespace lrrte

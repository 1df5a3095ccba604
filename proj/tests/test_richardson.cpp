#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "lrrte/richardson.hpp"
#include "lrrte/verify.hpp"

using namespace lrrte;

namespace {

const DenseSystem& small_system() {
  static const DenseSystem s = dense_system(CaseId::TC1, Scheme::SN, 8, 4, 0.1);
  return s;
}

}  // namespace

TEST_CASE("derived constants") {
  const DerivedConstants d = derived_constants(1.0, 3.0, 0.0);
  CHECK(d.omega == doctest::Approx(0.5));
  CHECK(d.rho == doctest::Approx(0.5));
  const DerivedConstants e = derived_constants(1.0, 3.0, 0.1);
  CHECK(e.gamma1_eps == doctest::Approx(0.81));
  CHECK(e.gamma2_eps == doctest::Approx(3.63));
  CHECK_THROWS(derived_constants(2.0, 1.0, 0.1));
  CHECK_THROWS(derived_constants(1.0, 2.0, 1.0));
}

TEST_CASE("contraction factor of the first test case") {
  const DerivedConstants d = small_system().d;
  CHECK(d.rho == doctest::Approx(0.9683).epsilon(1e-4));
}

TEST_CASE("inexact constants") {
  const DerivedConstants d = small_system().d;
  SolverParams p;
  const InexactConstants c = inexact_constants(p, d);
  const double rho = d.rho;
  CHECK(c.tau1 == doctest::Approx((1 - rho) / (4 * (3 - rho))));
  CHECK(c.tau2 == doctest::Approx((1 - rho) / 4));
  // independent evaluation of the two formulas
  const double t1 = c.tau1, t2 = c.tau2, nu = 0.5, g2 = d.gamma2_eps, w = d.omega;
  const double B = (1 - rho) * (1 - t1) * nu / ((1 + t2) * (rho + (1 + rho) * t2 / (1 - t2)) * g2);
  const double Ca = (1 - t1) * t2 * B / ((1 + t1 + g2 * B) * w);
  const double Cb = rho * nu * t2 * std::pow(1 - t1, 2) / ((rho * (1 + t1) * (1 + t2) + nu * (1 - t1) * (1 - rho)) * w);
  CHECK(c.B == doctest::Approx(B).epsilon(1e-14));
  CHECK(c.C == doctest::Approx(std::min(Ca, Cb)).epsilon(1e-14));
  CHECK(c.B > 0.0);
  CHECK(c.C > 0.0);

  SUBCASE("vanishing tau recovers the exact shrink coefficient") {
    SolverParams q;
    q.tau1 = 1e-12;
    q.tau2 = 1e-12;
    CHECK(inexact_constants(q, d).B == doctest::Approx((1 - rho) * 0.5 / (rho * d.gamma2_eps)).epsilon(1e-9));
  }
  SUBCASE("tau2 at the admissible limit is rejected") {
    SolverParams q;
    q.tau2 = 0.5 * (1 - rho);
    CHECK_THROWS_AS(inexact_constants(q, d), std::invalid_argument);
  }
}

TEST_CASE("default iteration cap") {
  const DerivedConstants d = derived_constants(1.0, 3.0, 0.0);
  SolverParams p;
  p.eps_target = 1e-7;
  CHECK(default_max_iter(p, d) == 50 * static_cast<long>(std::ceil(std::log(1e-7) / std::log(0.5))));
  p.max_iter = 17;
  CHECK(default_max_iter(p, d) == 17);
}

TEST_CASE("plain Richardson reaches the dense solution") {
  const DenseSystem& s = small_system();
  const SandwichOperator A(s.P.terms, s.sys.transformed.E_hat);
  const SolveResult r = richardson_plain(A, s.F, s.d, 1e-10, 100000);
  CHECK(r.trace.converged);
  CHECK((r.W.to_dense() - s.W_star).norm() <= 1e-10 / s.d.gamma1_eps);
}

TEST_CASE("soft-thresholded Richardson") {
  const DenseSystem& s = small_system();
  const SandwichOperator A(s.P.terms, s.sys.transformed.E_hat);
  SolverParams p;
  p.eps_target = 1e-6;
  const SolveResult r = st_solve(A, s.F, p, s.d);
  REQUIRE(r.trace.converged);
  CHECK((r.W.to_dense() - s.W_star).norm() <= 1e-6);
  CHECK(r.trace.final_residual <= s.d.gamma1_eps * 1e-6);
  CHECK(r.trace.records.front().k == 0);
  CHECK(r.trace.records.front().res_norm == doctest::Approx(frobenius_norm(s.F)));
  for (std::size_t i = 1; i < r.trace.records.size(); ++i) {
    CHECK(r.trace.records[i].delta <= r.trace.records[i - 1].delta);
  }
  CHECK(r.trace.iterations == static_cast<long>(r.trace.records.size()) - 1);
}

TEST_CASE("zero right-hand side returns zero") {
  const DenseSystem& s = small_system();
  const SandwichOperator A(s.P.terms, s.sys.transformed.E_hat);
  const LowRankMatrix zero(s.F.rows(), s.F.cols());
  const SolveResult r = st_solve(A, zero, SolverParams{}, s.d);
  CHECK(r.W.rank() == 0);
  CHECK(r.trace.converged);
}

TEST_CASE("fixed-delta iteration") {
  const DenseSystem& s = small_system();
  const SandwichOperator A(s.P.terms, s.sys.transformed.E_hat);
  for (double delta : {1e-2, 1e-3}) {
    const DenseMatrix oracle = dense_fixed_point(s, delta);
    const LowRankMatrix w = st_fixed_delta(A, s.F, s.d.omega, delta, 3000);
    CHECK((w.to_dense() - oracle).norm() < 1e-9);
  }
  CHECK(check_contraction(0.1, 1e-2, 3, 10).passed);
  CHECK(check_fixed_point_sandwich(0.1, {1e-2, 1e-3}).passed);
}

TEST_CASE("inexact application") {
  const DenseSystem& s = small_system();
  const KronOperator& E = s.sys.transformed.E_hat;
  CHECK(apply_inexact(s.P.terms, E, LowRankMatrix(s.F.rows(), s.F.cols()), 1e-3).rank() == 0);
  CHECK_THROWS_AS(apply_inexact(s.P.terms, E, s.F, 0.0), std::invalid_argument);
  ApplyStats stats;
  const LowRankMatrix w = canonicalize(s.F);
  const LowRankMatrix got = apply_inexact(s.P.terms, E, w, 1e-3, &stats);
  const DenseMatrix exact = mat(s.A * vec(w.to_dense()), w.rows(), w.cols());
  CHECK((got.to_dense() - exact).norm() <= 0.5e-3);
  CHECK(stats.naive_rank == static_cast<Index>(s.P.terms.size() * s.P.terms.size() * E.size()) * w.rank());
  CHECK(check_inexact_apply(0.1, 9, 20).passed);
}

TEST_CASE("inexact solver meets the tolerance") {
  const DenseSystem& s = small_system();
  SolverParams p;
  p.eps_target = 1e-6;
  const SolveResult r = st_solve_inexact(s.P.terms, s.sys.transformed.E_hat, s.F, p, s.d);
  REQUIRE(r.trace.converged);
  CHECK((r.W.to_dense() - s.W_star).norm() <= 1e-6);
  for (std::size_t i = 1; i < r.trace.records.size(); ++i) {
    CHECK(r.trace.records[i].delta <= r.trace.records[i - 1].delta);
    CHECK(r.trace.records[i].eta > 0.0);
  }
}

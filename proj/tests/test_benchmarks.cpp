#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lrrte/benchmarks.hpp"
#include "lrrte/quadrature.hpp"
#include "lrrte/verify.hpp"

using namespace lrrte;

namespace {

double source_value(const ManufacturedCase& c, double z, double mu) {
  double s = 0.0;
  for (const auto& t : c.source.q) s += t.z(z) * t.mu(mu);
  return s;
}

double mu_average(const ManufacturedCase& c, double z) {
  const std::vector<double> part = uniform_partition(0.0, 1.0, 400);
  const QuadratureRule q = composite_gauss(part, 8);
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) s += q.weights[i] * c.u(z, q.nodes[i]);
  return s;
}

// -d/dz((mu^2/sigma_t) du/dz) + sigma_t u - sigma_s <u> - q
double strong_residual(const ManufacturedCase& c, double z, double mu) {
  // Richardson-extrapolated central differences; the 200-mode cases need fourth order.
  const double hstep = 2e-5;
  auto flux = [&](double x) { return mu * mu / c.sigma_t(x) * c.u_dz(x, mu); };
  auto central = [&](double hh) { return (flux(z + hh) - flux(z - hh)) / (2 * hh); };
  const double div = (4.0 * central(hstep / 2) - central(hstep)) / 3.0;
  return -div + c.sigma_t(z) * c.u(z, mu) - c.sigma_s(z) * mu_average(c, z) - source_value(c, z, mu);
}

}  // namespace

TEST_CASE("first test case values") {
  const ManufacturedCase c = manufactured_case(CaseId::TC1);
  CHECK(c.u(0.0, 1.0) == doctest::Approx(std::cosh(1.0)).epsilon(1e-15));
  for (double z : {0.1, 0.5, 0.9}) {
    const double ref = std::exp(-z * (1 - z)) * (std::sinh(1.0) - std::cosh(1.0) + 1.0);
    CHECK(mu_average(c, z) == doctest::Approx(ref).epsilon(1e-13));
  }
}

TEST_CASE("manufactured sources satisfy the strong form") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.02, 0.98);
  for (CaseId id : {CaseId::TC1, CaseId::TC2_ALG, CaseId::TC2_EXP}) {
    const ManufacturedCase c = manufactured_case(id);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) worst = std::max(worst, std::abs(strong_residual(c, unit(rng) * c.Z, unit(rng))));
    CHECK_MESSAGE(worst < 1e-8, to_string(id) << " residual " << worst);
    // Robin data
    double worst_g = 0.0;
    for (double mu : {0.1, 0.4, 0.77, 1.0}) {
      worst_g = std::max(worst_g, std::abs(c.source.g_left(mu) - (c.u(0.0, mu) - mu / c.sigma_t(0.0) * c.u_dz(0.0, mu))));
      worst_g = std::max(worst_g, std::abs(c.source.g_right(mu) - (c.u(c.Z, mu) + mu / c.sigma_t(c.Z) * c.u_dz(c.Z, mu))));
    }
    CHECK(worst_g < 1e-12);
  }
}

TEST_CASE("cosine modes have zero angular mean") {
  for (int k = 1; k <= 5; ++k) {
    const QuadratureRule q = gauss_legendre(40, 0.0, 1.0);
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += q.weights[i] * std::cos(k * std::numbers::pi * q.nodes[i]);
    CHECK(std::abs(s) < 1e-14);
  }
}

TEST_CASE("layered case") {
  const ManufacturedCase c = manufactured_case(CaseId::TC3);
  CHECK_FALSE(c.has_exact());
  CHECK(c.source.g_left(1.0) == doctest::Approx(2.4));
  CHECK(c.default_eps_target == 1e-4);
  const DiscretizationSpec spec = make_spec(c, Scheme::SN, 4, 4);
  CHECK_THROWS_AS(error_norms(c, LowRankMatrix(5, 4), spec), std::invalid_argument);
}

TEST_CASE("error norms on trivial inputs") {
  ManufacturedCase one;
  one.Z = 1.0;
  one.u_terms.push_back({[](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 1.0; }});
  const DiscretizationSpec spec = make_spec(one, Scheme::SN, 8, 4);
  const ErrorNorms e0 = error_norms(one, LowRankMatrix(9, 4), spec);
  CHECK(e0.L2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e0.W2G == doctest::Approx(1.0).epsilon(1e-12));

  // u = z lies in the discrete space: nodal values z_j, angular coefficient sqrt(h)
  ManufacturedCase lin = one;
  lin.u_terms = {{[](double z) { return z; }, [](double) { return 1.0; }, [](double) { return 1.0; }}};
  Vector nodes(9);
  for (Index j = 0; j < 9; ++j) nodes(j) = j / 8.0;
  const LowRankMatrix U = LowRankMatrix::outer(nodes, Vector::Constant(4, 0.5));
  const ErrorNorms e1 = error_norms(lin, U, spec);
  CHECK(e1.L2 < 1e-10);
  CHECK(e1.W2G < 1e-10);
}

TEST_CASE("back transform agrees with the dense triple product") {
  const DenseSystem s = dense_system(CaseId::TC1, Scheme::PN, 6, 5, 0.1);
  const LowRankMatrix W = canonicalize(s.F);
  const DenseMatrix p = materialize(s.P.terms);
  const DenseMatrix pw = mat(p * vec(W.to_dense()), W.rows(), W.cols());
  const DenseMatrix ref = s.sys.spatial.T_z->to_dense().transpose().inverse() * pw;
  const LowRankMatrix U = back_transform(W, s.P, *s.sys.spatial.T_z);
  CHECK((U.to_dense() - ref).norm() < 1e-12 * ref.norm());
  CHECK(U.rank() <= s.P.expsum.rank() * W.rank());
}

TEST_CASE("rates") {
  CHECK(*convergence_rate(2e-3, 1e-3) == doctest::Approx(1.0));
  CHECK_FALSE(convergence_rate(std::nullopt, 1e-3));
  CHECK_FALSE(convergence_rate(0.0, 1e-3));
}

TEST_CASE("small convergence study") {
  StudyConfig cfg;
  cfg.sizes = {{8, 8}, {16, 16}};
  cfg.params.eps_target = 1e-5;
  const auto rows = run_convergence_study(cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].error.empty());
  CHECK(rows[1].converged);
  CHECK_FALSE(rows[0].rate_L2);
  REQUIRE(rows[1].rate_W2G);
  CHECK(*rows[1].rate_W2G > 0.8);
  CHECK(rows[1].rank_W >= 1);
  StudyConfig empty;
  CHECK_THROWS(run_convergence_study(empty));
}

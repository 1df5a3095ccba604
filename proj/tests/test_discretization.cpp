#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lrrte/benchmarks.hpp"
#include "lrrte/discretization.hpp"
#include "lrrte/kron.hpp"
#include "lrrte/quadrature.hpp"

using namespace lrrte;

namespace {

DiscretizationSpec unit_spec(Scheme scheme, Index J, Index N) {
  DiscretizationSpec s;
  s.scheme = scheme;
  s.J = J;
  s.N = N;
  s.Z = 1.0;
  s.sigma_t = CoefficientFunction::constant(1.0);
  s.sigma_s = CoefficientFunction::constant(0.0);
  return s;
}

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

TEST_CASE("hat-function mass and stiffness on two elements") {
  const SpatialMatrices m = assemble_spatial(unit_spec(Scheme::SN, 2, 2));
  DenseMatrix mass(3, 3), stiff(3, 3);
  mass << 1.0 / 6, 1.0 / 12, 0, 1.0 / 12, 1.0 / 3, 1.0 / 12, 0, 1.0 / 12, 1.0 / 6;
  stiff << 2, -2, 0, -2, 4, -2, 0, -2, 2;
  CHECK((m.M_z.to_dense() - mass).norm() < 1e-15);
  CHECK((m.D.to_dense() - stiff).norm() < 1e-14);
  CHECK(m.B.to_dense()(0, 0) == 1.0);
  CHECK(m.B.to_dense()(2, 2) == 1.0);
  CHECK(m.B.to_dense().sum() == 2.0);
  const DenseMatrix T = m.T_z->to_dense();
  CHECK((T * T.transpose() - (mass + stiff)).norm() < 1e-13);
}

TEST_CASE("weighted spatial matrices against an independent quadrature") {
  DiscretizationSpec s = unit_spec(Scheme::SN, 5, 2);
  s.sigma_t = CoefficientFunction::analytic([](double z) { return 2.0 + z * z; }, [](double z) { return 2.0 * z; });
  const SpatialMatrices m = assemble_spatial(s);
  const Index n = 6;
  const double h = 0.2;
  DenseMatrix mass = DenseMatrix::Zero(n, n), stiff = DenseMatrix::Zero(n, n);
  for (Index e = 0; e < 5; ++e) {
    const QuadratureRule q = gauss_legendre(10, e * h, (e + 1) * h);
    for (std::size_t p = 0; p < q.size(); ++p) {
      const double z = q.nodes[p], w = q.weights[p];
      const double phi[2] = {((e + 1) * h - z) / h, (z - e * h) / h};
      const double dphi[2] = {-1.0 / h, 1.0 / h};
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          mass(e + a, e + b) += w * (2.0 + z * z) * phi[a] * phi[b];
          stiff(e + a, e + b) += w / (2.0 + z * z) * dphi[a] * dphi[b];
        }
    }
  }
  CHECK((m.M_z_sigma_t.to_dense() - mass).norm() < 1e-13);
  CHECK((m.D_inv_sigma_t.to_dense() - stiff).norm() < 1e-12);
}

TEST_CASE("SN angular matrices match cell integrals of the normalized indicators") {
  const AngularMatrices a = assemble_angular(unit_spec(Scheme::SN, 2, 5));
  const double h = 0.2;
  for (Index n = 0; n < 5; ++n) {
    const QuadratureRule q = gauss_legendre(3, n * h, (n + 1) * h);
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t p = 0; p < q.size(); ++p) {
      m1 += q.weights[p] * q.nodes[p] / h;
      m2 += q.weights[p] * q.nodes[p] * q.nodes[p] / h;
    }
    CHECK(a.M_mu_mu(n, n) == doctest::Approx(m1).epsilon(1e-14));
    CHECK(a.M_mu_mu2(n, n) == doctest::Approx(m2).epsilon(1e-14));
    for (Index k = 0; k < 5; ++k) CHECK(a.S_scatter(n, k) == doctest::Approx(h));
  }
  CHECK(a.M_mu.isIdentity(1e-15));
}

TEST_CASE("PN angular basis is orthonormal with rank-one scattering") {
  const AngularMatrices a = assemble_angular(unit_spec(Scheme::PN, 2, 9));
  REQUIRE(a.M_mu.rows() == 5);
  CHECK(a.M_mu.isIdentity(1e-13));
  DenseMatrix e0 = DenseMatrix::Zero(5, 5);
  e0(0, 0) = 1.0;
  CHECK((a.S_scatter - e0).norm() < 1e-13);
  // <mu H_0, H_1> = int_0^1 mu sqrt(5) P_2(mu) dmu = sqrt(5)/8
  CHECK(a.M_mu_mu(0, 1) == doctest::Approx(std::sqrt(5.0) / 8.0).epsilon(1e-13));
  CHECK(a.M_mu_mu2(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("transformed operator equals the dense change of basis") {
  const ManufacturedCase c = manufactured_case(CaseId::TC1);
  for (Scheme scheme : {Scheme::SN, Scheme::PN}) {
    const DiscretizationSpec spec = make_spec(c, scheme, 6, 5);
    const SpatialMatrices s = assemble_spatial(spec);
    const AngularMatrices a = assemble_angular(spec);
    const TransformedSystem t = transform_system(s, a);
    const DenseMatrix Ti = s.T_z->to_dense().inverse();
    auto cong = [&](const SymTridiagonal& x) { return DenseMatrix(Ti * x.to_dense() * Ti.transpose()); };
    const Index na = a.M_mu.rows();
    const DenseMatrix ref = kron(a.M_mu_mu2, cong(s.D_inv_sigma_t)) + kron(DenseMatrix::Identity(na, na), cong(s.M_z_sigma_t)) -
                            kron(a.S_scatter, cong(s.M_z_sigma_s)) + kron(a.M_mu_mu, cong(s.B));
    CHECK((materialize(t.E_hat) - ref).norm() < 1e-12 * ref.norm());
    CHECK((t.J_hat_z - cong(s.M_z)).norm() < 1e-13);
  }
}

TEST_CASE("spectral bounds stay below two") {
  const ManufacturedCase c = manufactured_case(CaseId::TC1);
  for (auto [scheme, J, N] : {std::tuple{Scheme::SN, Index{128}, Index{128}}, std::tuple{Scheme::PN, Index{128}, Index{27}}}) {
    const AssembledSystem sys = assemble(make_spec(c, scheme, J, N));
    CHECK(sys.bounds.Lambda <= 2.0);
    CHECK(sys.bounds.lambda > 0.0);
    CHECK(sys.bounds.lambda <= sys.bounds.Lambda);
  }
}

TEST_CASE("coercivity constants for the first test case") {
  const CoercivityConstants k = coercivity_constants(make_spec(manufactured_case(CaseId::TC1), Scheme::SN, 16, 16));
  const double ctr2 = 4.0 / (1.0 - std::exp(-2.0));
  CHECK(k.c0 == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(k.gamma1 == doctest::Approx(1.0 / 4.5).epsilon(1e-9));
  CHECK(k.gamma2 == doctest::Approx(2.0 * ctr2).epsilon(1e-12));
}

TEST_CASE("coercivity rejects absorption-free media") {
  DiscretizationSpec s = unit_spec(Scheme::SN, 4, 2);
  s.sigma_s = CoefficientFunction::constant(1.0);
  CHECK_THROWS_AS(coercivity_constants(s), std::domain_error);
}

TEST_CASE("piecewise coefficients are right-continuous and add") {
  const CoefficientFunction p = CoefficientFunction::piecewise_constant({0.5}, {1.0, 3.0});
  CHECK(p(0.25) == 1.0);
  CHECK(p(0.5) == 3.0);
  const CoefficientFunction q = p + CoefficientFunction::constant(2.0);
  CHECK(q(0.75) == 5.0);
  CHECK(q.infimum(1.0) == 3.0);
  CHECK(q.supremum(1.0) == 5.0);
}

TEST_CASE("constant load in the transformed basis") {
  // q = 1: b_j = int phi_j dz, angular weights int H_n dmu = sqrt(h)
  DiscretizationSpec spec = unit_spec(Scheme::SN, 4, 4);
  const AssembledSystem sys = assemble(spec);
  SourceData src;
  src.q.push_back({[](double) { return 1.0; }, [](double) { return 1.0; }});
  const LoadResult load = assemble_load(src, sys);
  Vector b(5);
  b << 0.125, 0.25, 0.25, 0.25, 0.125;
  const Vector fz = sys.spatial.T_z->solve_lower(b);
  const DenseMatrix ref = fz * Vector::Constant(4, 0.5).transpose();
  CHECK((load.F_hat.to_dense() - ref).norm() < 1e-14);
  CHECK(load.quadrature_converged);
}

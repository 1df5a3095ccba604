#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lrrte/banded.hpp"
#include "lrrte/quadrature.hpp"

using namespace lrrte;

namespace {
SymTridiagonal laplacian_like(Index n) {
  SymTridiagonal a(n);
  for (Index i = 0; i < n; ++i) a.diag(i) = 4.0 + 0.1 * static_cast<double>(i);
  for (Index i = 0; i + 1 < n; ++i) a.off(i) = -1.0;
  return a;
}
}  // namespace

TEST_CASE("bidiagonal Cholesky reproduces the matrix and its solves") {
  const SymTridiagonal a = laplacian_like(7);
  const BidiagonalCholesky T(a);
  const DenseMatrix t = T.to_dense();
  CHECK((t * t.transpose() - a.to_dense()).norm() < 1e-13);
  const DenseMatrix x = DenseMatrix::Random(7, 3);
  CHECK((T.solve_lower(x) - t.triangularView<Eigen::Lower>().solve(x)).norm() < 1e-13);
  CHECK((T.solve_upper(x) - t.transpose().triangularView<Eigen::Upper>().solve(x)).norm() < 1e-13);
  CHECK((T.multiply_lower(x) - t * x).norm() < 1e-13);
  CHECK((a.multiply(x) - a.to_dense() * x).norm() < 1e-13);
}

TEST_CASE("Cholesky rejects an indefinite matrix") {
  SymTridiagonal a(2);
  a.diag << 1.0, 1.0;
  a.off << 2.0;
  CHECK_THROWS(BidiagonalCholesky(a));
}

TEST_CASE("Gauss-Legendre exactness") {
  for (int n = 1; n <= 12; ++n) {
    const QuadratureRule q = gauss_legendre(n, 0.0, 2.0);
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) s += q.weights[i] * std::pow(q.nodes[i], p);
      CHECK(s == doctest::Approx(std::pow(2.0, p + 1) / (p + 1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("Legendre values and partitions") {
  CHECK(legendre(2, 0.5) == doctest::Approx(-0.125));
  CHECK(legendre(3, 1.0) == doctest::Approx(1.0));
  const std::vector<double> cuts{0.3};
  const std::vector<double> p = uniform_partition(0.0, 1.0, 4, cuts);
  CHECK(p.front() == 0.0);
  CHECK(p.back() == 1.0);
  CHECK(std::find(p.begin(), p.end(), 0.3) != p.end());
  const QuadratureRule c = composite_gauss(p, 3);
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += c.weights[i] * c.nodes[i] * c.nodes[i];
  CHECK(s == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

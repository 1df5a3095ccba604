#pragma once

#include <span>
#include <vector>

namespace lrrte {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  void append(const QuadratureRule& other);
};

// n-point Gauss-Legendre rule on [a, b]; exact for polynomials of degree 2n-1.
QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

// Composite Gauss-Legendre rule over the partition given by sorted points,
// with `points` nodes per subinterval. Empty subintervals are skipped.
QuadratureRule composite_gauss(std::span<const double> partition, int points);

// Uniform partition of [a, b] into `cells` subintervals, with extra cut
// points (e.g. coefficient discontinuities) merged in.
std::vector<double> uniform_partition(double a, double b, int cells, std::span<const double> cuts = {});

// Legendre polynomial P_n(x) on [-1, 1] by the three-term recurrence.
double legendre(int n, double x);

}  // namespace lrrte

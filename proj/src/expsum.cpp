#include "lrrte/expsum.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lrrte {

namespace {

// Sum_i exp(-e^{ih+s} + (ih+s)/2) scaled by h/sqrt(pi); equals Psi(t) sqrt(t) for s = ln t.
double scaled_sum(double h, int i1, int i2, double s) {
  double acc = 0.0;
  for (int i = -i1; i <= i2; ++i) {
    const double x = i * h + s;
    if (x > 7.0) break;  // exp(-e^7) underflows
    acc += std::exp(-std::exp(x) + 0.5 * x);
  }
  return h / std::sqrt(std::numbers::pi) * acc;
}

double grid_error(double h, int i1, int i2, double lo, double hi, int points) {
  const double a = std::log(lo);
  const double b = std::log(hi);
  double worst = std::abs(scaled_sum(h, i1, i2, a) - 1.0);
  worst = std::max(worst, std::abs(scaled_sum(h, i1, i2, b) - 1.0));
  if (b > a) {
    for (int k = 0; k < points; ++k) {
      const double s = a + (b - a) * k / (points - 1);
      worst = std::max(worst, std::abs(scaled_sum(h, i1, i2, s) - 1.0));
    }
  }
  return worst;
}

bool is_diagonal(const DenseMatrix& a) {
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      if (i != j && a(i, j) != 0.0) return false;
    }
  }
  return true;
}

}  // namespace

double ExpSumApproximation::alpha(int i) const { return std::exp(beta * i * h); }
double ExpSumApproximation::rho(int i) const { return std::exp(i * h); }
double ExpSumApproximation::prefactor() const { return h / std::tgamma(beta); }

double expsum_step(double eps, double beta) {
  return 2.0 * std::numbers::pi / (std::log(3.0) + beta * std::abs(std::log(std::cos(1.0))) + std::abs(std::log(eps)));
}

ExpSumApproximation expsum_params(double eps, double lambda, double Lambda) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("expsum_params: eps must lie in (0, 1)");
  if (!(lambda > 0.0) || !(Lambda >= lambda) || !std::isfinite(Lambda)) {
    throw std::invalid_argument("expsum_params: need 0 < lambda <= Lambda");
  }
  ExpSumApproximation a;
  a.eps = eps;
  a.h = expsum_step(eps);
  a.lambda = lambda;
  a.Lambda = Lambda;
  const double target = kExpSumSafetyMargin * eps;
  const int n = kExpSumCertificationPoints;

  int i1 = 0;
  while (grid_error(a.h, i1, kExpSumMaxTerms - 1 - i1, lambda, Lambda, n) > target) {
    if (++i1 >= kExpSumMaxTerms) {
      throw std::runtime_error("expsum_params: interval [" + std::to_string(lambda) + ", " + std::to_string(Lambda) +
                               "] cannot be certified with " + std::to_string(kExpSumMaxTerms) + " terms");
    }
  }
  int i2 = 0;
  while (grid_error(a.h, i1, i2, lambda, Lambda, n) > target) {
    if (i1 + ++i2 >= kExpSumMaxTerms) {
      throw std::runtime_error("expsum_params: interval cannot be certified within the term limit");
    }
  }
  a.i1 = i1;
  a.i2 = i2;
  a.max_relative_error = grid_error(a.h, i1, i2, lambda, Lambda, n);
  return a;
}

double expsum_eval(const ExpSumApproximation& approx, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("expsum_eval: t must be positive");
  double acc = 0.0;
  for (int i = -approx.i1; i <= approx.i2; ++i) acc += approx.alpha(i) * std::exp(-approx.rho(i) * t);
  return approx.prefactor() * acc;
}

double expsum_max_relative_error(const ExpSumApproximation& approx, double lo, double hi, int points) {
  double worst = 0.0;
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int k = 0; k < points; ++k) {
    const double s = points == 1 ? a : a + (b - a) * k / (points - 1);
    const double t = std::exp(s);
    worst = std::max(worst, std::abs(expsum_eval(approx, t) * std::sqrt(t) - 1.0));
  }
  return worst;
}

Preconditioner build_preconditioner(const ExpSumApproximation& approx, const Eigenpairs& mu, const Eigenpairs& z,
                                    bool mu_diagonal) {
  if (!mu.vectors || !z.vectors) throw std::invalid_argument("build_preconditioner: missing eigenvectors");
  std::vector<KronTerm> terms;
  terms.reserve(static_cast<std::size_t>(approx.rank()));
  for (int m = 0; m < approx.rank(); ++m) {
    const int i = approx.index(m);
    const double r = approx.rho(i);
    KronTerm t;
    t.coeff = approx.prefactor() * approx.alpha(i);
    const Vector fmu = (-r * mu.values.array()).exp().matrix();
    const Vector fz = (-r * z.values.array()).exp().matrix();
    if (mu_diagonal) {
      t.angular = diagonal_map(fmu);
    } else {
      t.angular = dense_map((*mu.vectors) * fmu.asDiagonal() * mu.vectors->transpose());
    }
    if (z.values.size() > kDenseExponentialLimit) {
      t.spatial = eigen_function_map(z.vectors, fz);
    } else {
      t.spatial = dense_map((*z.vectors) * fz.asDiagonal() * z.vectors->transpose());
    }
    terms.push_back(std::move(t));
  }
  Preconditioner p;
  p.expsum = approx;
  p.terms = KronOperator(std::move(terms));
  return p;
}

Preconditioner build_preconditioner(const ExpSumApproximation& approx, const DenseMatrix& J_hat_mu,
                                    const DenseMatrix& J_hat_z) {
  if (is_diagonal(J_hat_mu)) {
    // keep the natural ordering so the angular exponentials stay diagonal
    Eigenpairs mu{std::make_shared<const DenseMatrix>(DenseMatrix::Identity(J_hat_mu.rows(), J_hat_mu.cols())),
                  J_hat_mu.diagonal()};
    return build_preconditioner(approx, mu, symmetric_eigen(J_hat_z), true);
  }
  return build_preconditioner(approx, symmetric_eigen(J_hat_mu), symmetric_eigen(J_hat_z), false);
}

Preconditioner build_preconditioner(const AssembledSystem& system, double eps) {
  const ExpSumApproximation approx = expsum_params(eps, system.bounds.lambda, system.bounds.Lambda);
  const auto& tr = system.transformed;
  if (system.angular.diagonal) {
    Eigenpairs mu{std::make_shared<const DenseMatrix>(DenseMatrix::Identity(tr.J_hat_mu.rows(), tr.J_hat_mu.cols())),
                  tr.J_hat_mu.diagonal()};
    return build_preconditioner(approx, mu, tr.eig_z, true);
  }
  return build_preconditioner(approx, tr.eig_mu, tr.eig_z, false);
}

LowRankMatrix precond_apply(const Preconditioner& p, const LowRankMatrix& w, double round_tol) {
  return kron_apply(p.terms, w, round_tol);
}

}  // namespace lrrte

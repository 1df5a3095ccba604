#pragma once

#include "lrrte/discretization.hpp"
#include "lrrte/kron.hpp"
#include "lrrte/lowrank.hpp"

namespace lrrte {

// Trapezoidal exponential sum Psi(t) = h/sqrt(pi) sum_{i=-i1}^{i2} e^{ih/2} exp(-e^{ih} t)
// approximating t^{-1/2} with relative accuracy eps on [lambda, Lambda].
struct ExpSumApproximation {
  double beta = 0.5;
  double eps = 0.1;
  double h = 0.0;
  int i1 = 0;
  int i2 = 0;
  double lambda = 1.0;
  double Lambda = 1.0;
  double max_relative_error = 0.0;  // on the certification grid

  int rank() const { return i1 + i2 + 1; }
  // i-th index in enumeration order m = 0..rank()-1, i = m - i1.
  int index(int m) const { return m - i1; }
  double alpha(int i) const;  // e^{beta i h}
  double rho(int i) const;    // e^{i h}
  double prefactor() const;   // h / Gamma(beta)
};

inline constexpr int kExpSumCertificationPoints = 10000;
inline constexpr double kExpSumSafetyMargin = 0.95;
inline constexpr int kExpSumMaxTerms = 512;

// Largest admissible step 2 pi / (ln 3 + beta |ln cos 1| + |ln eps|).
double expsum_step(double eps, double beta = 0.5);

// Certified parameters: first the smallest i1 with a long upper tail, then the
// smallest i2. Throws std::invalid_argument for bad input and std::runtime_error
// if no rank up to kExpSumMaxTerms certifies.
ExpSumApproximation expsum_params(double eps, double lambda, double Lambda);

double expsum_eval(const ExpSumApproximation& approx, double t);

// Max of |Psi(t) sqrt(t) - 1| over `points` log-spaced t in [lo, hi].
double expsum_max_relative_error(const ExpSumApproximation& approx, double lo, double hi,
                                 int points = kExpSumCertificationPoints);

struct Preconditioner {
  ExpSumApproximation expsum;
  KronOperator terms;  // Theta_m, m = 0..r_p-1
};

// Spatial blocks above this size are stored as (Q, exp(-rho diag)) pairs.
inline constexpr Index kDenseExponentialLimit = 512;

Preconditioner build_preconditioner(const ExpSumApproximation& approx, const Eigenpairs& mu, const Eigenpairs& z,
                                    bool mu_diagonal = false);
Preconditioner build_preconditioner(const ExpSumApproximation& approx, const DenseMatrix& J_hat_mu,
                                    const DenseMatrix& J_hat_z);
// Certifies on the assembled spectral bounds and builds the preconditioner.
Preconditioner build_preconditioner(const AssembledSystem& system, double eps);

LowRankMatrix precond_apply(const Preconditioner& p, const LowRankMatrix& w, double round_tol);

}  // namespace lrrte

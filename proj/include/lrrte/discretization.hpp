#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lrrte/banded.hpp"
#include "lrrte/kron.hpp"
#include "lrrte/lowrank.hpp"

namespace lrrte {

using ScalarFn = std::function<double(double)>;

//
// Optical coefficient on [0, Z]. Piecewise-constant coefficients are
// right-continuous with the given interior breakpoints.
//
class CoefficientFunction {
 public:
  enum class Kind { constant, analytic, piecewise_constant };

  static CoefficientFunction constant(double value);
  static CoefficientFunction analytic(ScalarFn f, ScalarFn derivative = {});
  static CoefficientFunction piecewise_constant(std::vector<double> breakpoints, std::vector<double> values);

  double operator()(double z) const;
  // d/dz away from breakpoints; zero for constant and piecewise-constant kinds.
  double derivative(double z) const;

  Kind kind() const { return kind_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }

  // Sampled extrema over [0, Z], including one-sided limits at breakpoints.
  double infimum(double z_max) const;
  double supremum(double z_max) const;

  friend CoefficientFunction operator+(const CoefficientFunction& a, const CoefficientFunction& b);

 private:
  Kind kind_ = Kind::constant;
  std::vector<double> breakpoints_;
  std::vector<double> values_;  // constant: {v}; piecewise: one per piece
  ScalarFn fn_;
  ScalarFn derivative_;
};

enum class Scheme { PN, SN };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct DiscretizationSpec {
  Scheme scheme = Scheme::SN;
  Index J = 1;  // spatial elements
  Index N = 1;  // PN: odd truncation order; SN: angular cells
  double Z = 1.0;
  CoefficientFunction sigma_t = CoefficientFunction::constant(1.0);
  CoefficientFunction sigma_s = CoefficientFunction::constant(0.0);

  Index spatial_size() const { return J + 1; }
  Index angular_size() const { return scheme == Scheme::PN ? (N + 1) / 2 : N; }
  // Throws std::invalid_argument when the spec is malformed.
  void validate() const;
};

struct SpatialMatrices {
  SymTridiagonal D_inv_sigma_t;  // D(1/sigma_t)
  SymTridiagonal M_z_sigma_t;    // M_z(sigma_t)
  SymTridiagonal M_z_sigma_s;    // M_z(sigma_s)
  SymTridiagonal M_z;
  SymTridiagonal D;
  SymTridiagonal B;
  std::shared_ptr<const BidiagonalCholesky> T_z;  // T_z T_z^T = D + M_z
};

struct AngularMatrices {
  DenseMatrix M_mu_mu2;  // M_mu(mu^2)
  DenseMatrix M_mu_mu;   // M_mu(mu)
  DenseMatrix M_mu;
  DenseMatrix S_scatter;
  bool diagonal = false;  // SN: all but S_scatter are diagonal
};

// Symmetric eigendecomposition A = Q diag(values) Q^T, values ascending.
struct Eigenpairs {
  std::shared_ptr<const DenseMatrix> vectors;
  Vector values;
};

// Throws std::domain_error on failure or non-finite input.
Eigenpairs symmetric_eigen(const DenseMatrix& a);

struct TransformedSystem {
  KronOperator E_hat;
  DenseMatrix J_hat_mu;  // M_mu(mu^2)
  DenseMatrix J_hat_z;   // T_z^{-1} M_z T_z^{-T}
  Eigenpairs eig_mu;
  Eigenpairs eig_z;
};

struct SpectralBounds {
  double lambda = 0.0;
  double Lambda = 0.0;
  double mu_min = 0.0, mu_max = 0.0;  // extreme eigenvalues of J_hat_mu
  double z_min = 0.0, z_max = 0.0;    // extreme eigenvalues of J_hat_z
};

// Sampled extrema of f over [0, z_max] on 20001 points plus both one-sided
// values at every breakpoint.
std::pair<double, double> sampled_extrema(const ScalarFn& f, const std::vector<double>& breakpoints, double z_max);

struct CoercivityConstants {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double C_tr = 0.0;
  double c0 = 0.0;
  double sigma_t_sup = 0.0;
  double inv_sigma_t_sup = 0.0;
};

struct AssembledSystem {
  DiscretizationSpec spec;
  SpatialMatrices spatial;
  AngularMatrices angular;
  TransformedSystem transformed;
  SpectralBounds bounds;
  CoercivityConstants constants;
};

// Galerkin matrices of the nodal hat basis on the equi-spaced partition.
// Throws std::domain_error when sigma_t is not bounded away from zero.
SpatialMatrices assemble_spatial(const DiscretizationSpec& spec);

// Angular Galerkin matrices; PN uses sqrt(4n+1) L_{2n} on (0,1), SN uses
// normalized indicators of equal cells.
AngularMatrices assemble_angular(const DiscretizationSpec& spec);

// Four-term Kronecker form of the system matrix after the Cholesky change of
// basis in space, plus the two Kronecker-sum blocks of the transformed Riesz map.
TransformedSystem transform_system(const SpatialMatrices& spatial, const AngularMatrices& angular);

// Extreme eigenvalues of the Kronecker sum J_hat_mu (+) J_hat_z.
// Throws std::domain_error if a block is not positive definite.
SpectralBounds spectral_bounds(const DenseMatrix& J_hat_mu, const DenseMatrix& J_hat_z);

// Throws std::domain_error when inf(sigma_t - sigma_s) <= 0.
CoercivityConstants coercivity_constants(const DiscretizationSpec& spec);

AssembledSystem assemble(const DiscretizationSpec& spec);

//
// Separable data sum_t a_t(z) b_t(mu).
//
struct SeparableTerm {
  ScalarFn z;
  ScalarFn mu;
};

struct SourceData {
  std::vector<SeparableTerm> q;  // interior source
  ScalarFn g_left;               // g(0, mu); empty means zero
  ScalarFn g_right;              // g(Z, mu); empty means zero
};

struct LoadResult {
  LowRankMatrix F_hat;  // T_z^{-1} b, spatial x angular
  LowRankMatrix b;      // untransformed load
  double max_relative_change = 0.0;
  bool quadrature_converged = true;
};

inline constexpr double kLoadQuadratureTolerance = 1e-10;

// Load vector of q and the mu-weighted inflow terms, integrated by composite
// Gauss rules and checked against a refined rule.
LoadResult assemble_load(const SourceData& source, const AssembledSystem& system);

// Angular cell partition used for load and error quadrature.
std::vector<double> angular_quadrature_partition(const DiscretizationSpec& spec, int min_cells = 256);

// Values of the angular basis functions at the given points (rows = points).
DenseMatrix angular_basis_values(const DiscretizationSpec& spec, const std::vector<double>& mu);

}  // namespace lrrte

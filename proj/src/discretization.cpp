#include "lrrte/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "lrrte/quadrature.hpp"

namespace lrrte {

namespace {

constexpr int kSpatialPoints = 8;
constexpr int kAngularPoints = 8;
constexpr int kRefinedPoints = 12;

bool finite(double x) { return std::isfinite(x); }

// Representative point of piece i for a right-continuous piecewise function.
double piece_point(const std::vector<double>& bps, std::size_t i) {
  if (bps.empty()) return 0.0;
  if (i == 0) return bps.front() - 1.0;
  return bps[i - 1];
}

std::vector<double> merge_breakpoints(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out = a;
  out.insert(out.end(), b.begin(), b.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Gauss nodes on [a, b], split at the cut points that fall inside.
QuadratureRule element_rule(double a, double b, const std::vector<double>& cuts, int points) {
  std::vector<double> part{a};
  for (double c : cuts) {
    if (c > a && c < b) part.push_back(c);
  }
  part.push_back(b);
  return composite_gauss(part, points);
}

}  // namespace

CoefficientFunction CoefficientFunction::constant(double value) {
  if (!finite(value)) throw std::invalid_argument("CoefficientFunction: non-finite constant");
  CoefficientFunction c;
  c.kind_ = Kind::constant;
  c.values_ = {value};
  return c;
}

CoefficientFunction CoefficientFunction::analytic(ScalarFn f, ScalarFn derivative) {
  if (!f) throw std::invalid_argument("CoefficientFunction: empty evaluator");
  CoefficientFunction c;
  c.kind_ = Kind::analytic;
  c.fn_ = std::move(f);
  c.derivative_ = std::move(derivative);
  return c;
}

CoefficientFunction CoefficientFunction::piecewise_constant(std::vector<double> breakpoints,
                                                            std::vector<double> values) {
  if (values.size() != breakpoints.size() + 1) {
    throw std::invalid_argument("CoefficientFunction: need one value per piece");
  }
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > breakpoints[i - 1])) {
      throw std::invalid_argument("CoefficientFunction: breakpoints must be strictly increasing");
    }
  }
  for (double v : values) {
    if (!finite(v)) throw std::invalid_argument("CoefficientFunction: non-finite value");
  }
  CoefficientFunction c;
  c.kind_ = Kind::piecewise_constant;
  c.breakpoints_ = std::move(breakpoints);
  c.values_ = std::move(values);
  return c;
}

double CoefficientFunction::operator()(double z) const {
  switch (kind_) {
    case Kind::constant:
      return values_.front();
    case Kind::piecewise_constant: {
      const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), z);
      return values_[static_cast<std::size_t>(it - breakpoints_.begin())];
    }
    case Kind::analytic:
      return fn_(z);
  }
  return 0.0;
}

double CoefficientFunction::derivative(double z) const {
  if (kind_ != Kind::analytic) return 0.0;
  if (!derivative_) throw std::logic_error("CoefficientFunction: derivative not available");
  return derivative_(z);
}

double CoefficientFunction::infimum(double z_max) const {
  return sampled_extrema([this](double z) { return (*this)(z); }, breakpoints_, z_max).first;
}

double CoefficientFunction::supremum(double z_max) const {
  return sampled_extrema([this](double z) { return (*this)(z); }, breakpoints_, z_max).second;
}

CoefficientFunction operator+(const CoefficientFunction& a, const CoefficientFunction& b) {
  using Kind = CoefficientFunction::Kind;
  if (a.kind_ == Kind::constant && b.kind_ == Kind::constant) {
    return CoefficientFunction::constant(a.values_.front() + b.values_.front());
  }
  const std::vector<double> bps = merge_breakpoints(a.breakpoints_, b.breakpoints_);
  if (a.kind_ != Kind::analytic && b.kind_ != Kind::analytic) {
    std::vector<double> vals(bps.size() + 1);
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double z = piece_point(bps, i);
      vals[i] = a(z) + b(z);
    }
    return CoefficientFunction::piecewise_constant(bps, vals);
  }
  ScalarFn d;
  const bool da = a.kind_ != Kind::analytic || static_cast<bool>(a.derivative_);
  const bool db = b.kind_ != Kind::analytic || static_cast<bool>(b.derivative_);
  if (da && db) d = [a, b](double z) { return a.derivative(z) + b.derivative(z); };
  CoefficientFunction out = CoefficientFunction::analytic([a, b](double z) { return a(z) + b(z); }, d);
  out.breakpoints_ = bps;
  return out;
}

std::pair<double, double> sampled_extrema(const ScalarFn& f, const std::vector<double>& breakpoints, double z_max) {
  constexpr int samples = 20001;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  auto take = [&](double z) {
    const double v = f(z);
    if (!finite(v)) throw std::domain_error("coefficient is not finite at z = " + std::to_string(z));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  };
  for (int i = 0; i < samples; ++i) take(z_max * i / (samples - 1));
  for (double c : breakpoints) {
    if (c > 0.0 && c < z_max) {
      take(c);
      take(std::nextafter(c, 0.0));
    }
  }
  return {lo, hi};
}

std::string to_string(Scheme s) { return s == Scheme::PN ? "PN" : "SN"; }

Scheme scheme_from_string(const std::string& s) {
  if (s == "PN") return Scheme::PN;
  if (s == "SN") return Scheme::SN;
  throw std::invalid_argument("unknown scheme '" + s + "' (expected PN or SN)");
}

void DiscretizationSpec::validate() const {
  if (J < 1) throw std::invalid_argument("J must be at least 1");
  if (N < 1) throw std::invalid_argument("N must be at least 1");
  if (scheme == Scheme::PN && N % 2 == 0) throw std::invalid_argument("PN requires an odd N");
  if (!(Z > 0.0) || !finite(Z)) throw std::invalid_argument("Z must be positive");
}

SpatialMatrices assemble_spatial(const DiscretizationSpec& spec) {
  spec.validate();
  const double st_inf = spec.sigma_t.infimum(spec.Z);
  if (!(st_inf > 0.0)) throw std::domain_error("sigma_t is not bounded away from zero");

  const Index J = spec.J;
  const std::vector<double> cuts = merge_breakpoints(spec.sigma_t.breakpoints(), spec.sigma_s.breakpoints());

  SpatialMatrices m;
  m.D_inv_sigma_t = SymTridiagonal(J + 1);
  m.M_z_sigma_t = SymTridiagonal(J + 1);
  m.M_z_sigma_s = SymTridiagonal(J + 1);
  m.M_z = SymTridiagonal(J + 1);
  m.D = SymTridiagonal(J + 1);
  m.B = SymTridiagonal(J + 1);

  for (Index e = 0; e < J; ++e) {
    const double a = spec.Z * static_cast<double>(e) / static_cast<double>(J);
    const double b = e + 1 == J ? spec.Z : spec.Z * static_cast<double>(e + 1) / static_cast<double>(J);
    const QuadratureRule rule = element_rule(a, b, cuts, kSpatialPoints);
    double inv_st = 0.0;
    double st[3] = {0.0, 0.0, 0.0};  // (00, 01, 11) hat products
    double ss[3] = {0.0, 0.0, 0.0};
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double z = rule.nodes[q];
      const double w = rule.weights[q];
      const double t = spec.sigma_t(z);
      const double s = spec.sigma_s(z);
      const double p1 = (z - a) / (b - a);
      const double p0 = 1.0 - p1;
      inv_st += w / t;
      st[0] += w * t * p0 * p0;
      st[1] += w * t * p0 * p1;
      st[2] += w * t * p1 * p1;
      ss[0] += w * s * p0 * p0;
      ss[1] += w * s * p0 * p1;
      ss[2] += w * s * p1 * p1;
    }
    const double he = b - a;
    const double k = inv_st / (he * he);
    m.D_inv_sigma_t.diag(e) += k;
    m.D_inv_sigma_t.diag(e + 1) += k;
    m.D_inv_sigma_t.off(e) -= k;
    m.M_z_sigma_t.diag(e) += st[0];
    m.M_z_sigma_t.diag(e + 1) += st[2];
    m.M_z_sigma_t.off(e) += st[1];
    m.M_z_sigma_s.diag(e) += ss[0];
    m.M_z_sigma_s.diag(e + 1) += ss[2];
    m.M_z_sigma_s.off(e) += ss[1];
    m.M_z.diag(e) += he / 3.0;
    m.M_z.diag(e + 1) += he / 3.0;
    m.M_z.off(e) += he / 6.0;
    m.D.diag(e) += 1.0 / he;
    m.D.diag(e + 1) += 1.0 / he;
    m.D.off(e) -= 1.0 / he;
  }
  m.B.diag(0) += 1.0;
  m.B.diag(J) += 1.0;
  m.T_z = std::make_shared<const BidiagonalCholesky>(m.D + m.M_z);
  return m;
}

AngularMatrices assemble_angular(const DiscretizationSpec& spec) {
  spec.validate();
  const Index n_ang = spec.angular_size();
  AngularMatrices m;
  if (spec.scheme == Scheme::SN) {
    const double h = 1.0 / static_cast<double>(n_ang);
    Vector mu2(n_ang), mu1(n_ang);
    for (Index n = 0; n < n_ang; ++n) {
      const double mn = h * static_cast<double>(n);
      mu2(n) = (3.0 * mn * mn + 3.0 * mn * h + h * h) / 3.0;
      mu1(n) = mn + 0.5 * h;
    }
    m.M_mu_mu2 = mu2.asDiagonal();
    m.M_mu_mu = mu1.asDiagonal();
    m.M_mu = DenseMatrix::Identity(n_ang, n_ang);
    m.S_scatter = DenseMatrix::Constant(n_ang, n_ang, h);
    m.diagonal = true;
    return m;
  }

  const QuadratureRule rule = gauss_legendre(static_cast<int>(spec.N) + 2, 0.0, 1.0);
  std::vector<double> nodes = rule.nodes;
  const DenseMatrix H = angular_basis_values(spec, nodes);  // points x modes
  const Vector w = Eigen::Map<const Vector>(rule.weights.data(), static_cast<Index>(rule.weights.size()));
  const Vector mu = Eigen::Map<const Vector>(nodes.data(), static_cast<Index>(nodes.size()));
  m.M_mu = H.transpose() * w.asDiagonal() * H;
  m.M_mu_mu = H.transpose() * w.cwiseProduct(mu).asDiagonal() * H;
  m.M_mu_mu2 = H.transpose() * w.cwiseProduct(mu).cwiseProduct(mu).asDiagonal() * H;
  const Vector avg = H.transpose() * w;
  m.S_scatter = avg * avg.transpose();
  m.diagonal = false;
  return m;
}

Eigenpairs symmetric_eigen(const DenseMatrix& a) {
  if (!a.allFinite()) throw std::domain_error("symmetric_eigen: non-finite input");
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(a);
  if (es.info() != Eigen::Success) throw std::domain_error("symmetric_eigen: eigendecomposition failed");
  Eigenpairs out;
  out.vectors = std::make_shared<const DenseMatrix>(es.eigenvectors());
  out.values = es.eigenvalues();
  return out;
}

TransformedSystem transform_system(const SpatialMatrices& spatial, const AngularMatrices& angular) {
  if (!spatial.T_z) throw std::invalid_argument("transform_system: missing Cholesky factor");
  const auto& T = spatial.T_z;
  const Index n_ang = angular.M_mu.rows();
  if (!angular.M_mu.isApprox(DenseMatrix::Identity(n_ang, n_ang), 1e-10)) {
    throw std::invalid_argument("transform_system: angular basis is not orthonormal");
  }
  auto angular_map = [&](const DenseMatrix& a) -> MapPtr {
    if (angular.diagonal) return diagonal_map(a.diagonal());
    return dense_map(a);
  };
  MapPtr scatter;
  if (angular.diagonal) {
    // SN: S = h 1 1^T
    scatter = rank_one_map(Vector::Ones(n_ang), Vector::Ones(n_ang), angular.S_scatter(0, 0));
  } else {
    scatter = dense_map(angular.S_scatter);
  }

  std::vector<KronTerm> terms;
  terms.push_back({1.0, angular_map(angular.M_mu_mu2), congruence_map(T, spatial.D_inv_sigma_t)});
  terms.push_back({1.0, identity_map(n_ang), congruence_map(T, spatial.M_z_sigma_t)});
  terms.push_back({-1.0, scatter, congruence_map(T, spatial.M_z_sigma_s)});
  terms.push_back({1.0, angular_map(angular.M_mu_mu), congruence_map(T, spatial.B)});

  TransformedSystem out{KronOperator(std::move(terms)), angular.M_mu_mu2, {}, {}, {}};
  const Index nz = T->size();
  out.J_hat_z = T->solve_lower(spatial.M_z.multiply(T->solve_upper(DenseMatrix::Identity(nz, nz))));
  out.J_hat_z = 0.5 * (out.J_hat_z + out.J_hat_z.transpose()).eval();
  out.eig_mu = symmetric_eigen(out.J_hat_mu);
  out.eig_z = symmetric_eigen(out.J_hat_z);
  return out;
}

namespace {

SpectralBounds bounds_from(const Vector& ev_mu, const Vector& ev_z) {
  SpectralBounds b;
  b.mu_min = ev_mu.minCoeff();
  b.mu_max = ev_mu.maxCoeff();
  b.z_min = ev_z.minCoeff();
  b.z_max = ev_z.maxCoeff();
  if (!(b.mu_min > 0.0) || !(b.z_min > 0.0)) {
    throw std::domain_error("spectral_bounds: block is not positive definite");
  }
  b.lambda = b.mu_min + b.z_min;
  b.Lambda = b.mu_max + b.z_max;
  return b;
}

}  // namespace

SpectralBounds spectral_bounds(const DenseMatrix& J_hat_mu, const DenseMatrix& J_hat_z) {
  return bounds_from(symmetric_eigen(J_hat_mu).values, symmetric_eigen(J_hat_z).values);
}

CoercivityConstants coercivity_constants(const DiscretizationSpec& spec) {
  spec.validate();
  const std::vector<double> cuts = merge_breakpoints(spec.sigma_t.breakpoints(), spec.sigma_s.breakpoints());
  const auto [st_lo, st_hi] = sampled_extrema([&](double z) { return spec.sigma_t(z); }, cuts, spec.Z);
  if (!(st_lo > 0.0)) throw std::domain_error("sigma_t is not bounded away from zero");
  const auto gap = sampled_extrema([&](double z) { return spec.sigma_t(z) - spec.sigma_s(z); }, cuts, spec.Z);
  const double ss_lo = sampled_extrema([&](double z) { return spec.sigma_s(z); }, cuts, spec.Z).first;
  if (ss_lo < 0.0) throw std::domain_error("sigma_s must be nonnegative");
  CoercivityConstants c;
  c.c0 = gap.first;
  if (!(c.c0 > 0.0)) throw std::domain_error("inf(sigma_t - sigma_s) must be positive, got " + std::to_string(c.c0));
  c.sigma_t_sup = st_hi;
  c.inv_sigma_t_sup = 1.0 / st_lo;
  c.C_tr = 2.0 / std::sqrt(1.0 - std::exp(-2.0 * spec.Z));
  c.gamma1 = std::min(1.0 / c.sigma_t_sup, 0.5 * c.c0);
  // upper bound is a sum of three terms, each at most the max
  c.gamma2 = 2.0 * std::max({c.inv_sigma_t_sup, c.sigma_t_sup, c.C_tr * c.C_tr});
  return c;
}

AssembledSystem assemble(const DiscretizationSpec& spec) {
  AssembledSystem s;
  s.spec = spec;
  s.constants = coercivity_constants(spec);
  s.spatial = assemble_spatial(spec);
  s.angular = assemble_angular(spec);
  s.transformed = transform_system(s.spatial, s.angular);
  s.bounds = bounds_from(s.transformed.eig_mu.values, s.transformed.eig_z.values);
  return s;
}

std::vector<double> angular_quadrature_partition(const DiscretizationSpec& spec, int min_cells) {
  if (spec.scheme == Scheme::SN) {
    const int n = static_cast<int>(spec.N);
    const int sub = std::max(1, (min_cells + n - 1) / n);
    return uniform_partition(0.0, 1.0, n * sub);
  }
  return uniform_partition(0.0, 1.0, std::max(min_cells, 1));
}

DenseMatrix angular_basis_values(const DiscretizationSpec& spec, const std::vector<double>& mu) {
  const Index n_ang = spec.angular_size();
  const Index np = static_cast<Index>(mu.size());
  DenseMatrix H = DenseMatrix::Zero(np, n_ang);
  if (spec.scheme == Scheme::SN) {
    const double h = 1.0 / static_cast<double>(n_ang);
    const double v = 1.0 / std::sqrt(h);
    for (Index p = 0; p < np; ++p) {
      Index c = static_cast<Index>(std::floor(mu[p] / h));
      c = std::clamp<Index>(c, 0, n_ang - 1);
      H(p, c) = v;
    }
    return H;
  }
  for (Index p = 0; p < np; ++p) {
    // Even Legendre polynomials via the recurrence, keeping every other degree.
    const double x = mu[p];
    double p0 = 1.0;
    double p1 = x;
    H(p, 0) = 1.0;
    for (int k = 2; k <= 2 * static_cast<int>(n_ang - 1); ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
      if (k % 2 == 0) H(p, k / 2) = std::sqrt(2.0 * k + 1.0) * p2;
    }
  }
  return H;
}

namespace {

struct LoadFactors {
  DenseMatrix Bz;  // spatial x terms
  DenseMatrix Amu;  // angular x terms
};

LoadFactors load_factors(const SourceData& source, const AssembledSystem& sys, int z_points, int mu_points) {
  const DiscretizationSpec& spec = sys.spec;
  const Index nz = spec.spatial_size();
  const Index n_ang = spec.angular_size();
  const Index nt = static_cast<Index>(source.q.size()) + 2;

  // Angular rule with basis values.
  const std::vector<double> mu_part = angular_quadrature_partition(spec);
  const QuadratureRule mu_rule = composite_gauss(mu_part, mu_points);
  const DenseMatrix H = angular_basis_values(spec, mu_rule.nodes);
  const Index nm = static_cast<Index>(mu_rule.size());

  LoadFactors f{DenseMatrix::Zero(nz, nt), DenseMatrix::Zero(n_ang, nt)};

  std::vector<double> cuts =
      merge_breakpoints(spec.sigma_t.breakpoints(), spec.sigma_s.breakpoints());
  std::vector<QuadratureRule> elem(static_cast<std::size_t>(spec.J));
  for (Index e = 0; e < spec.J; ++e) {
    const double a = spec.Z * static_cast<double>(e) / static_cast<double>(spec.J);
    const double b = e + 1 == spec.J ? spec.Z : spec.Z * static_cast<double>(e + 1) / static_cast<double>(spec.J);
    elem[static_cast<std::size_t>(e)] = element_rule(a, b, cuts, z_points);
  }

  for (std::size_t t = 0; t < source.q.size(); ++t) {
    const auto& term = source.q[t];
    const Index col = static_cast<Index>(t);
    for (Index e = 0; e < spec.J; ++e) {
      const QuadratureRule& r = elem[static_cast<std::size_t>(e)];
      const double a = spec.Z * static_cast<double>(e) / static_cast<double>(spec.J);
      const double he = spec.Z / static_cast<double>(spec.J);
      double s0 = 0.0, s1 = 0.0;
      for (std::size_t q = 0; q < r.size(); ++q) {
        const double v = r.weights[q] * term.z(r.nodes[q]);
        const double p1 = (r.nodes[q] - a) / he;
        s0 += v * (1.0 - p1);
        s1 += v * p1;
      }
      f.Bz(e, col) += s0;
      f.Bz(e + 1, col) += s1;
    }
    Vector vals(nm);
    for (Index p = 0; p < nm; ++p) vals(p) = mu_rule.weights[p] * term.mu(mu_rule.nodes[p]);
    f.Amu.col(col) = H.transpose() * vals;
  }

  auto boundary = [&](const ScalarFn& g, Index row, Index col) {
    if (!g) return;
    Vector vals(nm);
    for (Index p = 0; p < nm; ++p) {
      const double m = mu_rule.nodes[p];
      vals(p) = mu_rule.weights[p] * m * g(m);
    }
    f.Bz(row, col) = 1.0;
    f.Amu.col(col) = H.transpose() * vals;
  };
  boundary(source.g_left, 0, nt - 2);
  boundary(source.g_right, spec.J, nt - 1);
  return f;
}

}  // namespace

LoadResult assemble_load(const SourceData& source, const AssembledSystem& system) {
  const LoadFactors base = load_factors(source, system, kSpatialPoints, kAngularPoints);
  const LoadFactors fine = load_factors(source, system, kRefinedPoints, kRefinedPoints);
  if (!base.Bz.allFinite() || !base.Amu.allFinite()) throw std::domain_error("assemble_load: non-finite load");

  LoadResult out;
  out.b = canonicalize(LowRankMatrix::from_factors(base.Bz, base.Amu));
  const LowRankMatrix b_fine = canonicalize(LowRankMatrix::from_factors(fine.Bz, fine.Amu));
  const double ref = frobenius_norm(b_fine);
  const double diff = difference_norm(out.b, b_fine);
  out.max_relative_change = ref > 0.0 ? diff / ref : diff;
  out.quadrature_converged = out.max_relative_change <= kLoadQuadratureTolerance;
  out.F_hat = canonicalize(LowRankMatrix::from_factors(system.spatial.T_z->solve_lower(base.Bz), base.Amu));
  return out;
}

}  // namespace lrrte

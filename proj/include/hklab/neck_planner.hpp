#pragma once
// Gluing bookkeeping: slope recurrences in exact rationals, degree sequences,
// topology, pole layout and T-constraints, the region classifier and the
// region weights.
//
// Coordinates. The neck is one periodic Green's function on T^2 x R holding
// every cluster, V = G + k z + beta with k = pi (b- - b+)/A. Its fiber
// average is piecewise linear with slope 2 pi d_j / A between clusters. The
// two Tian-Yau ends carry the linear model potentials (2 pi b/A) z_-+ and are
// attached at z = -T- and z = T+, where z_- = z + 2T- and z_+ = 2T+ - z.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/rational.hpp>

#include "hklab/error.hpp"
#include "hklab/flat_geometry.hpp"
#include "hklab/gibbons_hawking.hpp"
#include "hklab/potentials.hpp"

namespace hklab {

using Rational = boost::rational<long long>;

struct GluingConfig {
  int b_minus = 1, b_plus = 1;
  std::vector<int> weights{2};
  double beta = 100.0;
  TorusLattice lattice = TorusLattice::unit_square();
  double zeta0_minus = 1.0, zeta0_plus = 1.0;  // model cutoff heights
  double D0_minus = 1.0, D0_plus = 1.0;        // bounded-part radii
  double tol = 1e-12;
};

struct WeightParams {
  double delta = 0.01, nu = 0.25, mu = 0.25;
  int k = 0;
  double alpha = 0.5;
};

inline void validate(const WeightParams& w) {
  require(w.delta > 0, "delta must be positive");
  require(w.mu + w.nu > 0 && w.mu + w.nu < 1, "mu + nu must lie in (0, 1)");
  require(w.k >= 0, "derivative order must be nonnegative");
  require(w.alpha >= 0 && w.alpha < 1, "alpha must lie in [0, 1)");
}

inline void validate_ends(int b_minus, int b_plus, const std::vector<int>& w) {
  require(b_minus >= 1 && b_minus <= 9 && b_plus >= 1 && b_plus <= 9, "b- and b+ must lie in [1, 9]");
  require(!w.empty(), "at least one weight required");
  for (int x : w) require(x >= 1, "weights must be positive");
  long long sum = std::accumulate(w.begin(), w.end(), 0LL);
  if (sum != b_minus + b_plus) throw Error(ErrorKind::InfeasibleWeights, "weights must sum to b- + b+");
  require(static_cast<int>(w.size()) <= b_minus + b_plus, "at most b- + b+ clusters");
}

inline void validate(const GluingConfig& c) {
  validate_ends(c.b_minus, c.b_plus, c.weights);
  require(c.beta > 0 && std::isfinite(c.beta), "beta must be positive");
  require(c.zeta0_minus > 0 && c.zeta0_plus > 0, "cutoff heights must be positive");
  require(c.D0_minus > 0 && c.D0_plus > 0, "bounded-part radii must be positive");
}

// ---- slopes and degrees -------------------------------------------------------

// Slopes in units of pi/A: cluster j alone has k_j^-+ = +-w_j and gets the
// linear correction ell_j; the chain is continuous in slope.
struct SlopePlan {
  std::vector<Rational> ell;
  std::vector<Rational> left, right;  // k_j^- + ell_j and k_j^+ + ell_j
  std::vector<int> degrees;           // d_0 .. d_m
};

inline SlopePlan slope_recurrence(int b_minus, int b_plus, const std::vector<int>& w) {
  validate_ends(b_minus, b_plus, w);
  SlopePlan s;
  const std::size_t m = w.size();
  s.ell.resize(m);
  s.ell[0] = Rational(2 * b_minus - w[0]);
  for (std::size_t j = 0; j + 1 < m; ++j) s.ell[j + 1] = s.ell[j] - w[j] - w[j + 1];
  for (std::size_t j = 0; j < m; ++j) {
    s.left.push_back(Rational(w[j]) + s.ell[j]);
    s.right.push_back(Rational(-w[j]) + s.ell[j]);
  }
  for (std::size_t j = 0; j + 1 < m; ++j)
    if (s.right[j] != s.left[j + 1]) throw Error(ErrorKind::InfeasibleWeights, "slope chain broken");
  if (s.left.front() != Rational(2 * b_minus) || s.right.back() != Rational(-2 * b_plus))
    throw Error(ErrorKind::InfeasibleWeights, "end slopes do not match the Tian-Yau ends");
  s.degrees.push_back(b_minus);
  for (int x : w) s.degrees.push_back(s.degrees.back() - x);
  if (s.degrees.back() != -b_plus) throw Error(ErrorKind::InfeasibleWeights, "degree sequence does not close");
  return s;
}

inline std::vector<int> degree_sequence(const GluingConfig& c) {
  return slope_recurrence(c.b_minus, c.b_plus, c.weights).degrees;
}

// ---- topology --------------------------------------------------------------------

struct Topology {
  int chi = 0, b1 = 0, b2_plus = 0, b2_minus = 0, signature = 0;
  int chi_end_minus = 0, chi_end_plus = 0, chi_neck = 0;
  int b1_nil_minus = 0, b1_nil_plus = 0;
};

// Euler characteristic by additivity over the two ends and the neck (one per
// monopole); the rest follows from b1 = 0 and b2+ = 3.
inline Topology topology_invariants(int b_minus, int b_plus) {
  require(b_minus >= 1 && b_minus <= 9 && b_plus >= 1 && b_plus <= 9, "b- and b+ must lie in [1, 9]");
  Topology t;
  t.chi_end_minus = 12 - b_minus;
  t.chi_end_plus = 12 - b_plus;
  t.chi_neck = b_minus + b_plus;
  t.chi = t.chi_end_minus + t.chi_neck + t.chi_end_plus;
  t.b1 = 0;
  t.b2_plus = 3;
  t.b2_minus = t.chi - 2 + 2 * t.b1 - t.b2_plus;
  t.signature = t.b2_plus - t.b2_minus;
  t.b1_nil_minus = 2;
  t.b1_nil_plus = 2;
  return t;
}

// ---- neck plan ---------------------------------------------------------------------

struct Cluster {
  double z = 0.0;
  int w = 0;
  int first = 0;     // index of its first pole in NeckPlan::poles
  double T0 = 0.0;   // largest intra-cluster distance
};

struct NeckPlan {
  GluingConfig cfg;
  double A = 1.0;
  SlopePlan slopes;
  double k = 0.0;  // linear term of the neck potential
  std::vector<Cluster> clusters;
  std::vector<CylinderPoint> poles;
  double beta_minus = 0.0, beta_plus = 0.0;
  double T_minus = 0.0, T_plus = 0.0;
  std::vector<double> singular_points;
  double iota0 = 0.0, iota0_prime = 0.0, T0 = 0.0;
  Topology topo;
  SpecPtr neck;

  // Exact fiber average of the neck potential.
  double vbar(double z) const {
    double v = cfg.beta + k * z;
    for (const auto& p : poles) v -= kPi / A * std::abs(z - p.z);
    return v;
  }
  double length() const {
    return 2 * (T_plus + T_minus) - cfg.zeta0_minus - cfg.zeta0_plus;
  }
  // Model potential along the whole chain as a function of z~ = z + 2T-.
  double chain_potential(double zt) const {
    if (zt < T_minus) return kTwoPi * cfg.b_minus / A * zt;
    if (zt > 2 * T_minus + T_plus) return kTwoPi * cfg.b_plus / A * (2 * T_minus + 2 * T_plus - zt);
    return vbar(zt - 2 * T_minus);
  }
  double total_diameter() const;
};

inline double NeckPlan::total_diameter() const {
  using boost::math::quadrature::gauss;
  std::vector<double> br{cfg.zeta0_minus, T_minus};
  for (const auto& c : clusters) br.push_back(c.z + 2 * T_minus);
  br.push_back(2 * T_minus + T_plus);
  br.push_back(2 * T_minus + 2 * T_plus - cfg.zeta0_plus);
  std::sort(br.begin(), br.end());
  double D = 0.0;
  for (std::size_t i = 0; i + 1 < br.size(); ++i)
    D += gauss<double, 30>::integrate(
        [&](double zt) { return std::sqrt(std::max(0.0, chain_potential(zt))); }, br[i], br[i + 1]);
  return D;
}

namespace neck_detail {

inline double pairwise_min(const TorusLattice& L, const std::vector<CylinderPoint>& p) {
  double d = 2 * injectivity_radius(L);  // distance to the pole's own images
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) d = std::min(d, cyl_distance(L, p[i], p[j]));
  return d;
}

}  // namespace neck_detail

// Clusters sit at equally spaced anchors S = A beta / (8 pi (b- + b+)) apart,
// centred on z = 0; the w poles of a cluster occupy the first w cells of an
// n x n grid (n = ceil(sqrt w)) in the anchor slice.
inline NeckPlan plan_neck(const GluingConfig& cfg) {
  validate(cfg);
  NeckPlan p;
  p.cfg = cfg;
  p.A = cfg.lattice.area();
  p.slopes = slope_recurrence(cfg.b_minus, cfg.b_plus, cfg.weights);
  p.topo = topology_invariants(cfg.b_minus, cfg.b_plus);
  p.k = kPi * (cfg.b_minus - cfg.b_plus) / p.A;

  const int m = static_cast<int>(cfg.weights.size());
  const double S = p.A * cfg.beta / (8 * kPi * (cfg.b_minus + cfg.b_plus));
  for (int c = 0; c < m; ++c) {
    Cluster cl;
    cl.z = m == 1 ? 0.0 : (c - 0.5 * (m - 1)) * S;
    cl.w = cfg.weights[c];
    cl.first = static_cast<int>(p.poles.size());
    int n = static_cast<int>(std::ceil(std::sqrt(double(cl.w)) - 1e-12));
    for (int i = 0; i < cl.w; ++i) {
      Vec2 q = cfg.lattice.from_frac((i % n + 0.5) / n, (i / n + 0.5) / n);
      p.poles.push_back(reduce(cfg.lattice, {q.x, q.y, cl.z}));
    }
    p.clusters.push_back(cl);
  }
  p.iota0 = neck_detail::pairwise_min(cfg.lattice, p.poles);
  p.iota0_prime = p.iota0;
  for (auto& cl : p.clusters) {
    cl.T0 = cl.w == 1 ? p.iota0 : 0.0;
    for (int i = 0; i < cl.w; ++i)
      for (int j = i + 1; j < cl.w; ++j)
        cl.T0 = std::max(cl.T0, cyl_distance(cfg.lattice, p.poles[cl.first + i], p.poles[cl.first + j]));
    p.T0 = std::max(p.T0, cl.T0);
  }

  double sz = 0.0;
  for (const auto& q : p.poles) sz += q.z;
  p.beta_minus = -kPi / p.A * sz;
  p.beta_plus = kPi / p.A * sz;
  p.T_minus = p.A * (cfg.beta + p.beta_minus) / (4 * kPi * cfg.b_minus);
  p.T_plus = p.A * (cfg.beta + p.beta_plus) / (4 * kPi * cfg.b_plus);
  if (!(p.T_minus > 0) || !(p.T_plus > 0)) throw Error(ErrorKind::NonpositiveT, "T- or T+ is not positive");
  if (!(p.clusters.front().z > -p.T_minus) || !(p.clusters.back().z < p.T_plus))
    throw Error(ErrorKind::NonpositiveT, "clusters do not fit between the gluing heights");
  if (!(p.vbar(-p.T_minus) > 0) || !(p.vbar(p.T_plus) > 0))
    throw Error(ErrorKind::NonpositiveT, "averaged potential not positive at the neck ends");
  for (const auto& cl : p.clusters)
    if (!(p.vbar(cl.z) > 0)) throw Error(ErrorKind::NonpositiveT, "averaged potential not positive at a cluster");

  p.neck = std::make_shared<const PotentialSpec>(
      make_cylinder_green(cfg.lattice, p.poles, p.k, cfg.beta, cfg.tol, p.iota0));
  // The oscillating part is largest on the cluster slices; V must stay positive there.
  for (const auto& cl : p.clusters)
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) {
        Vec2 q = cfg.lattice.from_frac((i + 0.25) / 8, (j + 0.25) / 8);
        Point3 x{q.x, q.y, cl.z};
        bool near = false;
        for (const auto& pole : p.poles) near = near || cyl_distance(cfg.lattice, x, pole) < 1e-6;
        if (!near && !(eval_potential(*p.neck, x) > 0))
          throw Error(ErrorKind::NonpositiveT, "beta too small: V is not positive on the neck");
      }

  const double den = p.length();
  for (const auto& cl : p.clusters)
    p.singular_points.push_back((cl.z - cfg.zeta0_minus + 2 * p.T_minus) / den);
  return p;
}

// ---- fiber diameters -------------------------------------------------------------------

struct FiberDiameters {
  double V = 0.0;
  double nil_diameter = 0.0, circle_diameter = 0.0, total = 0.0;
  double nil_ratio = 0.0, circle_ratio = 0.0;
};

// Point t of [0, 1] on the unit-diameter interval; the nil slice is the torus
// scaled by sqrt(V) and the circle has length 2 pi / sqrt(V).
inline FiberDiameters fiber_diameters(const NeckPlan& p, double t) {
  require(t > 0 && t < 1, "t must lie in (0, 1)");
  for (double s : p.singular_points) require(std::abs(t - s) >= 0.05, "t too close to a singular point");
  FiberDiameters f;
  double zt = p.cfg.zeta0_minus + t * p.length();
  f.V = p.chain_potential(zt);
  require(f.V > 0, "model potential not positive at t");
  f.nil_diameter = std::sqrt(f.V) * torus_covering_radius(p.cfg.lattice);
  f.circle_diameter = kPi / std::sqrt(f.V);
  f.total = p.total_diameter();
  f.nil_ratio = f.nil_diameter / f.total;
  f.circle_ratio = f.circle_diameter / f.total;
  return f;
}

struct DiameterExponents {
  double nil = 0.0, circle = 0.0;
};

inline DiameterExponents fiber_diameter_exponents(GluingConfig cfg, double t, const std::vector<double>& betas) {
  require(betas.size() >= 2, "need at least two beta values");
  std::vector<double> lb, ln, lc;
  for (double b : betas) {
    cfg.beta = b;
    auto f = fiber_diameters(plan_neck(cfg), t);
    lb.push_back(std::log(b));
    ln.push_back(std::log(f.nil_ratio));
    lc.push_back(std::log(f.circle_ratio));
  }
  return {least_squares(lb, ln).slope, least_squares(lb, lc).slope};
}

// ---- regions -------------------------------------------------------------------------------

enum class Region { I, II, III, IVm, IVp, Vm, Vp, VIm, VIp, Gap };

inline const char* region_name(Region r) {
  switch (r) {
    case Region::I: return "I";
    case Region::II: return "II";
    case Region::III: return "III";
    case Region::IVm: return "IV-";
    case Region::IVp: return "IV+";
    case Region::Vm: return "V-";
    case Region::Vp: return "V+";
    case Region::VIm: return "VI-";
    case Region::VIp: return "VI+";
    case Region::Gap: return "Gap";
  }
  return "?";
}

enum class Piece { Neck, EndMinus, EndPlus };

// A point of the glued space: neck coordinates, or Tian-Yau end coordinates
// with p.z = z_- or z_+.
struct TaggedPoint {
  Piece piece = Piece::Neck;
  CylinderPoint p;
};

// Gluing-invariant description used by both the classifier and the weights.
struct Locus {
  Piece piece = Piece::Neck;
  double z = 0.0;      // neck height, when on the neck
  double zend = 0.0;   // z_- or z_+, when on an end
  double dmin = INFINITY;
  int nearest_pole = -1;
  int cluster = -1;    // nearest cluster by height
};

struct RegionInfo {
  Region region = Region::Gap;
  Region lo = Region::Gap, hi = Region::Gap;  // neighbours of a gap point
  double s = 0.0;                             // position across the gap, 0 at lo
  Locus at;
};

// Gibbons-Hawking length of the straight segment from pole m (nearest image)
// to x. With t = u^2 and r = t |x - q| the integrand 2 sqrt(r V) sqrt(|x - q|)
// stays bounded; r V -> 1/2 at the pole.
inline double gh_distance(const NeckPlan& p, int m, const CylinderPoint& x) {
  using boost::math::quadrature::gauss;
  const auto& q = p.poles[m];
  Vec2 d = min_image(p.cfg.lattice, x.x - q.x, x.y - q.y);
  double dz = x.z - q.z;
  double len = std::sqrt(d.x * d.x + d.y * d.y + dz * dz);
  if (len == 0.0) return 0.0;
  const double r_min = 1e3 * p.neck->pole_eps;
  try {
    double I = gauss<double, 24>::integrate(
        [&](double u) {
          double t = u * u, r = t * len;
          if (r < r_min) return 2.0 * std::sqrt(0.5);
          double V = eval_potential(*p.neck, {q.x + t * d.x, q.y + t * d.y, q.z + t * dz});
          return 2.0 * std::sqrt(std::max(0.0, r * V));
        },
        0.0, 1.0);
    return I * std::sqrt(len);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::PoleSingularity) return INFINITY;  // segment through another pole
    throw;
  }
}

inline Locus locate(const NeckPlan& p, TaggedPoint tp) {
  if (tp.piece == Piece::EndMinus && tp.p.z > p.T_minus) tp = {Piece::Neck, {tp.p.x, tp.p.y, tp.p.z - 2 * p.T_minus}};
  if (tp.piece == Piece::EndPlus && tp.p.z > p.T_plus) tp = {Piece::Neck, {tp.p.x, tp.p.y, 2 * p.T_plus - tp.p.z}};
  if (tp.piece == Piece::Neck && tp.p.z < -p.T_minus) tp = {Piece::EndMinus, {tp.p.x, tp.p.y, tp.p.z + 2 * p.T_minus}};
  if (tp.piece == Piece::Neck && tp.p.z > p.T_plus) tp = {Piece::EndPlus, {tp.p.x, tp.p.y, 2 * p.T_plus - tp.p.z}};
  Locus l;
  l.piece = tp.piece;
  if (tp.piece != Piece::Neck) {
    l.zend = tp.p.z;
    return l;
  }
  l.z = tp.p.z;
  for (int m = 0; m < static_cast<int>(p.poles.size()); ++m) {
    double d = gh_distance(p, m, tp.p);
    if (d < l.dmin) {
      l.dmin = d;
      l.nearest_pole = m;
    }
  }
  double best = INFINITY;
  for (int c = 0; c < static_cast<int>(p.clusters.size()); ++c)
    if (std::abs(l.z - p.clusters[c].z) < best) {
      best = std::abs(l.z - p.clusters[c].z);
      l.cluster = c;
    }
  return l;
}

inline RegionInfo classify_locus(const NeckPlan& p, const Locus& l) {
  RegionInfo r;
  r.at = l;
  auto gap = [&](Region lo, Region hi, double s) {
    r.region = Region::Gap;
    r.lo = lo;
    r.hi = hi;
    r.s = std::clamp(s, 0.0, 1.0);
    return r;
  };
  const auto& c = p.cfg;
  if (l.piece != Piece::Neck) {
    bool minus = l.piece == Piece::EndMinus;
    double zeta = minus ? c.zeta0_minus : c.zeta0_plus, D0 = minus ? c.D0_minus : c.D0_plus;
    Region V = minus ? Region::Vm : Region::Vp, VI = minus ? Region::VIm : Region::VIp;
    if (l.zend <= D0) return r.region = VI, r;
    if (l.zend >= 2 * zeta) return r.region = V, r;
    return gap(VI, V, (l.zend - D0) / (2 * zeta - D0));
  }
  const double sb = std::sqrt(c.beta);
  const double a1 = 1.0 / sb, a2 = p.iota0_prime * sb / 4, a3 = p.iota0_prime * sb / 2;
  if (l.dmin <= a1) return r.region = Region::I, r;
  if (l.dmin < 2 * a1) return gap(Region::I, Region::II, (l.dmin - a1) / a1);
  if (l.dmin <= a2) return r.region = Region::II, r;

  const Cluster& cl = p.clusters[l.cluster];
  const double core = cl.w * cl.T0;
  const double dz = l.z - cl.z;
  if (std::abs(dz) <= core) {
    if (l.dmin >= a3) return r.region = Region::III, r;
    return gap(Region::II, Region::III, (l.dmin - a2) / (a3 - a2));
  }
  if (l.dmin < a3) return gap(Region::II, Region::III, (l.dmin - a2) / (a3 - a2));

  // Side label: slope sign of the averaged potential at this height.
  const int nc = static_cast<int>(p.clusters.size());
  int below = 0;
  for (int i = 0; i < nc; ++i) below += p.clusters[i].z < l.z;
  Region side = p.slopes.degrees[below] >= 0 ? Region::IVm : Region::IVp;
  if (below == 0) side = Region::IVm;
  if (below == nc) side = Region::IVp;
  if (std::abs(dz) < 2 * core) return gap(Region::III, side, (std::abs(dz) - core) / core);
  if (below == 0 && l.z < -p.T_minus / 2)
    return gap(Region::IVm, Region::Vm, (-p.T_minus / 2 - l.z) / (p.T_minus / 2));
  if (below == nc && l.z > p.T_plus / 2)
    return gap(Region::IVp, Region::Vp, (l.z - p.T_plus / 2) / (p.T_plus / 2));
  r.region = side;
  return r;
}

inline RegionInfo classify_region(const NeckPlan& p, const TaggedPoint& tp) { return classify_locus(p, locate(p, tp)); }

// ---- weights ---------------------------------------------------------------------------------

// Formula of region `g` evaluated at locus l (which need not lie in g).
inline double region_weight(const NeckPlan& p, const WeightParams& w, Region g, const Locus& l) {
  const auto& c = p.cfg;
  const double A = p.A, beta = c.beta;
  const double q = w.nu + w.k + w.alpha;
  const double Tm = p.T_minus, Tp = p.T_plus;
  const double zc = l.cluster >= 0 ? p.clusters[l.cluster].z : 0.0;
  // End coordinates of a neck locus and neck height of an end locus.
  double z = l.z, zm = l.zend, zp = l.zend;
  if (l.piece == Piece::Neck) {
    zm = z + 2 * Tm;
    zp = 2 * Tp - z;
  } else if (l.piece == Piece::EndMinus) {
    z = zm - 2 * Tm;
  } else {
    z = 2 * Tp - zp;
  }
  const int nc = static_cast<int>(p.clusters.size());
  auto L2 = [&](bool minus) {
    bool outer = minus ? z <= p.clusters.front().z : z >= p.clusters.back().z;
    if (!outer) return p.vbar(z);
    return minus ? kTwoPi * c.b_minus / A * z + beta : -kTwoPi * c.b_plus / A * z + beta;
  };
  (void)nc;
  switch (g) {
    case Region::I: return std::exp(w.delta * (zc + 2 * Tm)) * std::pow(beta, -0.5 * (2 * w.mu + q));
    case Region::II:
      return std::exp(w.delta * (zc + 2 * Tm)) * std::pow(beta, -0.5 * w.mu) * std::pow(l.dmin, w.mu + q);
    case Region::III: return std::exp(w.delta * (zc + 2 * Tm)) * std::pow(beta, 0.5 * q);
    case Region::IVm: return std::exp(w.delta * (z + 2 * Tm)) * std::pow(std::max(L2(true), 1e-300), 0.5 * q);
    case Region::IVp: return std::exp(w.delta * (z + 2 * Tm)) * std::pow(std::max(L2(false), 1e-300), 0.5 * q);
    case Region::Vm:
      return std::exp(w.delta * zm) * std::pow(std::max(kTwoPi * c.b_minus / A * zm, 1e-300), 0.5 * q);
    case Region::Vp:
      return std::exp(w.delta * (-zp + 2 * Tm + 2 * Tp)) *
             std::pow(std::max(kTwoPi * c.b_plus / A * zp, 1e-300), 0.5 * q);
    case Region::VIm:
      return std::exp(w.delta * c.zeta0_minus) * std::pow(kTwoPi * c.b_minus / A * c.zeta0_minus, 0.5 * q);
    case Region::VIp:
      return std::exp(w.delta * (-c.zeta0_plus + 2 * Tm + 2 * Tp)) *
             std::pow(kTwoPi * c.b_plus / A * c.zeta0_plus, 0.5 * q);
    case Region::Gap: break;
  }
  throw Error(ErrorKind::Validation, "no weight formula for a gap label");
}

inline double weight_at(const NeckPlan& p, const WeightParams& w, const RegionInfo& r) {
  validate(w);
  if (r.region != Region::Gap) return region_weight(p, w, r.region, r.at);
  double a = std::log(region_weight(p, w, r.lo, r.at)), b = std::log(region_weight(p, w, r.hi, r.at));
  return std::exp((1 - r.s) * a + r.s * b);
}

inline double weight_value(const NeckPlan& p, const WeightParams& w, const TaggedPoint& tp) {
  return weight_at(p, w, classify_region(p, tp));
}

// ---- interface checks ------------------------------------------------------------------------

struct InterfaceRatio {
  std::string name;
  double ratio = 0.0;  // weight of the inner region over the outer one
};

// Point straight above pole m at Gibbons-Hawking distance d (bisection in height).
inline CylinderPoint point_at_gh_distance(const NeckPlan& p, int m, double d) {
  const auto& q = p.poles[m];
  double lo = 0.0, hi = 0.25;
  while (gh_distance(p, m, {q.x, q.y, q.z + hi}) < d) {
    hi *= 2;
    require(hi < 1e6, "distance not reachable above the pole");
  }
  for (int it = 0; it < 100; ++it) {
    double mid = 0.5 * (lo + hi);
    (gh_distance(p, m, {q.x, q.y, q.z + mid}) < d ? lo : hi) = mid;
  }
  return {q.x, q.y, q.z + 0.5 * (lo + hi)};
}

inline std::vector<InterfaceRatio> interface_ratios(const NeckPlan& p, const WeightParams& w) {
  validate(w);
  std::vector<InterfaceRatio> out;
  const double sb = std::sqrt(p.cfg.beta);
  auto ratio = [&](const char* name, Region a, Region b, const Locus& l) {
    out.push_back({name, region_weight(p, w, a, l) / region_weight(p, w, b, l)});
  };
  auto neck_locus = [&](CylinderPoint x) { return locate(p, {Piece::Neck, x}); };
  ratio("I|II", Region::I, Region::II, neck_locus(point_at_gh_distance(p, 0, 1.5 / sb)));
  ratio("II|III", Region::II, Region::III, neck_locus(point_at_gh_distance(p, 0, p.iota0_prime * sb / 4)));
  const Cluster& f = p.clusters.front();
  const Cluster& b = p.clusters.back();
  const auto& q0 = p.poles[f.first];
  const auto& q1 = p.poles[b.first];
  ratio("III|IV-", Region::III, Region::IVm, neck_locus({q0.x, q0.y, f.z - 1.5 * f.w * f.T0}));
  ratio("III|IV+", Region::III, Region::IVp, neck_locus({q1.x, q1.y, b.z + 1.5 * b.w * b.T0}));
  Locus gm;
  gm.piece = Piece::Neck;
  gm.z = -p.T_minus;
  gm.cluster = 0;
  ratio("IV-|V-", Region::IVm, Region::Vm, gm);
  Locus gp = gm;
  gp.z = p.T_plus;
  gp.cluster = static_cast<int>(p.clusters.size()) - 1;
  ratio("IV+|V+", Region::IVp, Region::Vp, gp);
  Locus em;
  em.piece = Piece::EndMinus;
  em.zend = 2 * p.cfg.zeta0_minus;
  ratio("V-|VI-", Region::Vm, Region::VIm, em);
  Locus ep;
  ep.piece = Piece::EndPlus;
  ep.zend = 2 * p.cfg.zeta0_plus;
  ratio("V+|VI+", Region::Vp, Region::VIp, ep);
  return out;
}

// ---- glue experiment -------------------------------------------------------------------------

struct GlueRow {
  double beta = 0, T = 0, residual = 0, q_deviation = 0;
};

struct GlueCheck {
  std::vector<GlueRow> rows;
  double residual_log_slope = 0.0;  // d log(residual) / d beta
  double q_log_slope = 0.0;
  bool residual_decreasing = false, q_decreasing = false;
};

// Glues the linear model of the minus end onto the neck across z in
// [-T-, -T- + 1] for each beta.
inline GlueCheck glue_check(GluingConfig cfg, const std::vector<double>& betas, int nz = 21, int grid = 8) {
  require(betas.size() >= 2, "need at least two beta values");
  GlueCheck g;
  std::vector<double> lb, lr, lq;
  for (double b : betas) {
    cfg.beta = b;
    NeckPlan p = plan_neck(cfg);
    auto model = std::make_shared<const PotentialSpec>(
        make_model_linear(kTwoPi * cfg.b_minus / p.A, b + p.beta_minus));
    PotentialSpec glued = glue_potentials(p.neck, model, -p.T_minus);
    GlueRow row{b, p.T_minus, glue_residual(glued, nz, grid), glued_q_deviation(glued, nz, grid)};
    g.rows.push_back(row);
    lb.push_back(b);
    lr.push_back(std::log(row.residual));
    lq.push_back(std::log(row.q_deviation));
  }
  g.residual_log_slope = least_squares(lb, lr).slope;
  g.q_log_slope = least_squares(lb, lq).slope;
  g.residual_decreasing = g.q_decreasing = true;
  for (std::size_t i = 1; i < g.rows.size(); ++i) {
    g.residual_decreasing = g.residual_decreasing && g.rows[i].residual < g.rows[i - 1].residual;
    g.q_decreasing = g.q_decreasing && g.rows[i].q_deviation < g.rows[i - 1].q_deviation;
  }
  return g;
}

}  // namespace hklab

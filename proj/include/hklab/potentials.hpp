#pragma once
// Harmonic potentials on T^2 x R and R^3, evaluated as Taylor jets.
//
// The periodic Green's function is normalized by its exponential mode sum
//   V = sum_m [ -(pi/A)|z - z_m| + sum_{g != 0} pi/(A|g|) e^{-|g||z - z_m|} cos(g.(rho - rho_m)) ]
//       + slope*z + offset,
// which has no additive constant. Close to a pole's z-level the same
// function is summed with Ewald splitting instead.

#include <algorithm>
#include <cmath>
#include <memory>
#include <variant>
#include <vector>

#include "hklab/error.hpp"
#include "hklab/flat_geometry.hpp"
#include "hklab/jet.hpp"

namespace hklab {

using Point3 = CylinderPoint;

enum class Engine { Auto, Ewald, Modes };

// Degree-5 smooth step: 0 below 0, 1 above 1, C^2 at both ends.
struct SmoothStep {
  static double value(double t) {
    if (t <= 0) return 0.0;
    if (t >= 1) return 1.0;
    return t * t * t * (10 - 15 * t + 6 * t * t);
  }
  static double d1(double t) {
    if (t <= 0 || t >= 1) return 0.0;
    return 30 * t * t * (1 - t) * (1 - t);
  }
  static double d2(double t) {
    if (t <= 0 || t >= 1) return 0.0;
    return 60 * t * (1 - t) * (1 - 2 * t);
  }
  template <int N>
  static Jet<N> jet(const Jet<N>& t) {
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
  }
};

struct DualVector {
  double gx, gy, norm;
};

struct CylinderGreen {
  TorusLattice lattice;
  std::vector<CylinderPoint> poles;
  double slope = 0.0;   // linear term coefficient
  double offset = 0.0;  // additive constant

  // Construction-time tables.
  double eta = 2.0;          // Ewald screening
  double r_switch = 0.15;    // |z - z_m| below this uses Ewald
  double min_mode_dz = 0.075;
  std::vector<Vec2> images;         // lattice translations for the real-space sum
  std::vector<DualVector> recip;    // half-plane dual vectors for the Ewald reciprocal sum
  std::vector<DualVector> modes;    // half-plane dual vectors for the mode sum, by |g|
};

struct ModelLinear {
  double c = 1.0;
  double offset = 0.0;
};

struct EuclideanMonopole {
  double sigma = 0.0;
  std::vector<Point3> poles;
};

class PotentialSpec;
using SpecPtr = std::shared_ptr<const PotentialSpec>;

struct Glued {
  SpecPtr neck, model;
  double T = 0.0;  // cutoff rises on [T, T+1]: model below, neck above
};

class PotentialSpec {
 public:
  using Variant = std::variant<CylinderGreen, ModelLinear, EuclideanMonopole, Glued>;
  Variant v;
  double tol = 1e-12;
  double pole_eps = 1e-9;

  const CylinderGreen* green() const { return std::get_if<CylinderGreen>(&v); }
  const ModelLinear* linear() const { return std::get_if<ModelLinear>(&v); }
  const EuclideanMonopole* monopole() const { return std::get_if<EuclideanMonopole>(&v); }
  const Glued* glued() const { return std::get_if<Glued>(&v); }
  bool harmonic() const { return !glued(); }
};

namespace pot_detail {

// (1/2) * int_G^inf g^n e^{-g d} dg, the shell-density bound on the mode tail.
inline double mode_tail(double G, double d, int n) {
  double s = 0.0, fact_ratio = 1.0;  // n!/k!
  for (int k = n; k >= 0; --k) {
    s += fact_ratio * std::pow(G, k) / std::pow(d, n - k + 1);
    fact_ratio *= k;
  }
  return 0.5 * std::exp(-G * d) * s;
}

inline double mode_cutoff(double d, int n, double tol) {
  double G = 1.0;
  while (mode_tail(G, d, n) > tol) G *= 1.25;
  return G;
}

inline std::vector<DualVector> half_plane_by_norm(const TorusLattice& L, double gmax) {
  auto modes = dual_half_plane(L, gmax * gmax);
  std::vector<DualVector> out;
  out.reserve(modes.size());
  for (const auto& t : modes) out.push_back({t.gx, t.gy, std::hypot(t.gx, t.gy)});
  std::sort(out.begin(), out.end(), [](const DualVector& a, const DualVector& b) { return a.norm < b.norm; });
  return out;
}

}  // namespace pot_detail

// ---- construction ---------------------------------------------------------

inline PotentialSpec make_cylinder_green(const TorusLattice& L, std::vector<CylinderPoint> poles,
                                         double slope = 0.0, double offset = 0.0, double tol = 1e-12,
                                         double iota0 = 1.0) {
  require(!poles.empty(), "at least one pole required");
  require(tol > 0, "tolerance must be positive");
  for (auto& p : poles) p = reduce(L, p);
  for (std::size_t i = 0; i < poles.size(); ++i)
    for (std::size_t j = i + 1; j < poles.size(); ++j)
      require(cyl_distance(L, poles[i], poles[j]) >= 1e-3 * iota0, "poles closer than 1e-3*iota0");
  CylinderGreen g;
  g.lattice = L;
  g.poles = std::move(poles);
  g.slope = slope;
  g.offset = offset;
  g.eta = 2.0 / L.epsilon;
  double inj = injectivity_radius(L);
  g.r_switch = 0.3 * inj;
  g.min_mode_dz = 0.5 * g.r_switch;
  const double screen = 7.5;  // erfc(7.5) ~ 3e-26
  double rcut = screen / g.eta + torus_covering_radius(L);
  int R = static_cast<int>(std::ceil(rcut / (2 * inj))) + 2;
  for (int i = -R; i <= R; ++i)
    for (int j = -R; j <= R; ++j) {
      Vec2 s = L.from_frac(i, j);
      if (std::hypot(s.x, s.y) <= rcut) g.images.push_back(s);
    }
  g.recip = pot_detail::half_plane_by_norm(L, 2 * screen * g.eta);
  g.modes = pot_detail::half_plane_by_norm(L, pot_detail::mode_cutoff(g.min_mode_dz, 4, 1e-2 * tol));
  PotentialSpec s;
  s.v = std::move(g);
  s.tol = tol;
  return s;
}

inline PotentialSpec make_model_linear(double c, double offset = 0.0) {
  PotentialSpec s;
  s.v = ModelLinear{c, offset};
  return s;
}

inline PotentialSpec make_euclidean_monopole(double sigma, std::vector<Point3> poles) {
  for (std::size_t i = 0; i < poles.size(); ++i)
    for (std::size_t j = i + 1; j < poles.size(); ++j) {
      double d = std::hypot(poles[i].x - poles[j].x, poles[i].y - poles[j].y, poles[i].z - poles[j].z);
      require(d >= 1e-3, "poles closer than 1e-3*iota0");
    }
  PotentialSpec s;
  s.v = EuclideanMonopole{sigma, std::move(poles)};
  return s;
}

// ---- periodic Green's function kernels --------------------------------------

// Mode-sum contribution of one pole at planar offset d and height offset dz.
template <int N>
void add_pole_modes(const CylinderGreen& g, double dx, double dy, double dz, double tol, Jet<N>& out) {
  const double A = g.lattice.area();
  const double ad = std::abs(dz), s = dz >= 0 ? 1.0 : -1.0;
  if (ad < g.min_mode_dz) throw Error(ErrorKind::NonConvergent, "mode sum too close to a pole level");
  const auto& t = Jet<N>::tab();
  out.c[0] += -(kPi / A) * ad;
  if constexpr (N >= 1) out.coef(0, 0, 1) += -(kPi / A) * s;
  double G = pot_detail::mode_cutoff(ad, N, 1e-2 * tol);
  std::array<double, N + 1> zp{}, xp{}, yp{};
  for (const auto& m : g.modes) {
    if (m.norm > G) break;
    double E = 2.0 * kPi / (A * m.norm) * std::exp(-m.norm * ad);
    double ph = m.gx * dx + m.gy * dy;
    double cv = std::cos(ph), sv = std::sin(ph);
    if constexpr (N == 0) {
      out.c[0] += E * cv;
    } else {
      const double cyc[4] = {cv, -sv, -cv, sv};
      zp[0] = xp[0] = yp[0] = 1.0;
      for (int k = 1; k <= N; ++k) {
        zp[k] = zp[k - 1] * (-m.norm * s) / k;
        xp[k] = xp[k - 1] * m.gx / k;
        yp[k] = yp[k - 1] * m.gy / k;
      }
      for (int k = 0; k < Jet<N>::K; ++k) {
        const auto& e = t.exps[k];
        out.c[k] += E * zp[e[2]] * xp[e[0]] * yp[e[1]] * cyc[(e[0] + e[1]) % 4];
      }
    }
  }
}

// Ewald-split contribution of one pole. With drop_self, the nearest-image
// singular part 1/(2r) is removed analytically.
template <int N>
void add_pole_ewald(const CylinderGreen& g, double dx, double dy, double dz, bool drop_self, Jet<N>& out) {
  const double A = g.lattice.area(), eta = g.eta;
  Jet<N> X = Jet<N>::variable(dx, 0), Y = Jet<N>::variable(dy, 1), Z = Jet<N>::variable(dz, 2);
  const double rmax = 7.5 / eta;
  for (const auto& R : g.images) {
    double ex = dx - R.x, ey = dy - R.y;
    double r0 = std::sqrt(ex * ex + ey * ey + dz * dz);
    if (r0 > rmax + 1e-12) continue;
    bool self = drop_self && R.x == 0.0 && R.y == 0.0;
    Jet<N> r2 = (X - R.x) * (X - R.x) + (Y - R.y) * (Y - R.y) + Z * Z;
    Jet<N> r = sqrt(r2);
    if (self)
      out -= 0.5 * erf(eta * r) / r;
    else
      out += 0.5 * erfc(eta * r) / r;
  }
  // Reciprocal sum, g = 0 term first.
  Jet<N> ez2 = exp(-(eta * eta) * Z * Z);
  out -= (kPi / A) * (Z * erf(eta * Z) + ez2 * (1.0 / (eta * std::sqrt(kPi))));
  for (const auto& m : g.recip) {
    double k = m.norm;
    Jet<N> fz = exp(k * Z) * erfc(k / (2 * eta) + eta * Z) + exp(-k * Z) * erfc(k / (2 * eta) - eta * Z);
    Jet<N> ph = m.gx * X + m.gy * Y;
    out += (2.0 * 2.0 * kPi / (A * 4.0 * k)) * (fz * cos(ph));
  }
}

template <int N>
Jet<N> eval_green(const CylinderGreen& g, const Point3& p, double tol, double pole_eps, Engine eng,
                  int drop_pole = -1) {
  Jet<N> out(0.0);
  for (std::size_t i = 0; i < g.poles.size(); ++i) {
    const auto& q = g.poles[i];
    Vec2 d = min_image(g.lattice, p.x - q.x, p.y - q.y);
    double dz = p.z - q.z;
    double r = std::sqrt(d.x * d.x + d.y * d.y + dz * dz);
    if (r < pole_eps) throw Error(ErrorKind::PoleSingularity, "evaluation point at a pole");
    bool drop = static_cast<int>(i) == drop_pole;
    bool use_modes = eng == Engine::Modes || (eng == Engine::Auto && std::abs(dz) >= g.r_switch);
    if (drop) use_modes = false;
    if (use_modes)
      add_pole_modes<N>(g, d.x, d.y, dz, tol, out);
    else
      add_pole_ewald<N>(g, d.x, d.y, dz, drop, out);
  }
  out += g.offset;
  out += g.slope * Jet<N>::variable(p.z, 2);
  return out;
}

// ---- generic evaluation -----------------------------------------------------

template <int N>
Jet<N> eval_jet(const PotentialSpec& s, const Point3& p, Engine eng = Engine::Auto) {
  if (const auto* g = s.green()) return eval_green<N>(*g, p, s.tol, s.pole_eps, eng);
  if (const auto* m = s.linear()) return m->c * Jet<N>::variable(p.z, 2) + m->offset;
  if (const auto* e = s.monopole()) {
    Jet<N> out(e->sigma);
    Jet<N> X = Jet<N>::variable(p.x, 0), Y = Jet<N>::variable(p.y, 1), Z = Jet<N>::variable(p.z, 2);
    for (const auto& q : e->poles) {
      double r = std::hypot(p.x - q.x, p.y - q.y, p.z - q.z);
      if (r < s.pole_eps) throw Error(ErrorKind::PoleSingularity, "evaluation point at a pole");
      Jet<N> r2 = (X - q.x) * (X - q.x) + (Y - q.y) * (Y - q.y) + (Z - q.z) * (Z - q.z);
      out += 0.5 * pow(r2, -0.5);
    }
    return out;
  }
  const Glued& gl = *s.glued();
  double t = p.z - gl.T;
  if (t <= 0) return eval_jet<N>(*gl.model, p, eng);
  if (t >= 1) return eval_jet<N>(*gl.neck, p, eng);
  Jet<N> mo = eval_jet<N>(*gl.model, p, eng);
  Jet<N> ne = eval_jet<N>(*gl.neck, p, eng);
  Jet<N> chi = SmoothStep::jet(Jet<N>::variable(t, 2));
  return mo + chi * (ne - mo);
}

inline double eval_potential(const PotentialSpec& s, const Point3& p, Engine eng = Engine::Auto) {
  return eval_jet<0>(s, p, eng).value();
}

// All partials up to `order` (<= 4); entries above the order are zeroed.
inline Jet<4> potential_derivatives(const PotentialSpec& s, const Point3& p, int order) {
  require(order >= 1 && order <= 4, "derivative order must be in 1..4");
  Jet<4> j = eval_jet<4>(s, p);
  const auto& t = Jet<4>::tab();
  for (int k = 0; k < Jet<4>::K; ++k)
    if (t.degree[k] > order) j.c[k] = 0.0;
  return j;
}

// ---- asymptotics ------------------------------------------------------------

struct LinearAsymptote {
  double slope, offset;
};

// Exact linear asymptote of the mode normalization; side -1 is z -> -inf.
inline LinearAsymptote green_asymptote(const CylinderGreen& g, int side) {
  const double A = g.lattice.area();
  double m0 = static_cast<double>(g.poles.size()), sz = 0.0;
  for (const auto& q : g.poles) sz += q.z;
  if (side < 0) return {kPi * m0 / A + g.slope, g.offset - kPi / A * sz};
  return {-kPi * m0 / A + g.slope, g.offset + kPi / A * sz};
}

// Mean of V over the torus slice at height z (periodic trapezoid rule).
inline double fiber_average(const PotentialSpec& s, const TorusLattice& L, double z, int M = 16) {
  double acc = 0.0;
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      Vec2 q = L.from_frac((i + 0.5) / M, (j + 0.5) / M);
      acc += eval_potential(s, {q.x, q.y, z});
    }
  return acc / (M * M);
}

struct LineFit {
  double slope = 0, intercept = 0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

struct SlopeFit {
  double k = 0, beta_offset = 0, residual_rate = 0;
};

inline const TorusLattice& spec_lattice(const PotentialSpec& s) {
  if (const auto* g = s.green()) return g->lattice;
  if (const auto* gl = s.glued()) return spec_lattice(*gl->neck);
  static const TorusLattice unit = TorusLattice::unit_square();
  return unit;
}

inline SlopeFit fit_asymptotic_slope(const PotentialSpec& s, double z_lo, double z_hi, int side,
                                     int slices = 16, int grid = 16) {
  require(side == -1 || side == 1, "side must be -1 or +1");
  require(z_hi > z_lo, "empty window");
  if (slices < 4) throw Error(ErrorKind::WindowTooNarrow, "fewer than 4 slices");
  if (const auto* g = s.green()) {
    for (const auto& q : g->poles) {
      bool ok = side < 0 ? z_hi <= q.z - 1.0 : z_lo >= q.z + 1.0;
      require(ok, "window must stay at least 1 away from every pole level on the requested side");
    }
  }
  const TorusLattice& L = spec_lattice(s);
  std::vector<double> zs, avg;
  for (int i = 0; i < slices; ++i) {
    double z = z_lo + (z_hi - z_lo) * i / (slices - 1);
    zs.push_back(z);
    avg.push_back(fiber_average(s, L, z, grid));
  }
  LineFit lf = least_squares(zs, avg);
  std::vector<double> zr, lr;
  for (double z : zs) {
    double sup = 0.0;
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j) {
        Vec2 q = L.from_frac((i + 0.5) / grid, (j + 0.5) / grid);
        sup = std::max(sup, std::abs(eval_potential(s, {q.x, q.y, z}) - (lf.slope * z + lf.intercept)));
      }
    if (sup > 0) {
      zr.push_back(z);
      lr.push_back(std::log(sup));
    }
  }
  SlopeFit out{lf.slope, lf.intercept, 0.0};
  if (zr.size() >= 2) out.residual_rate = std::abs(least_squares(zr, lr).slope);
  return out;
}

// ---- near-pole remainder ------------------------------------------------------

inline double near_pole_remainder(const PotentialSpec& s, int m, const Point3& p) {
  if (const auto* g = s.green()) {
    require(m >= 0 && m < static_cast<int>(g->poles.size()), "pole index out of range");
    if (cyl_distance(g->lattice, p, g->poles[m]) >= 0.5 * injectivity_radius(g->lattice))
      throw Error(ErrorKind::NotNearPole, "point outside half the injectivity radius");
    return eval_green<0>(*g, p, s.tol, 0.0, Engine::Auto, m).value();
  }
  if (const auto* e = s.monopole()) {
    require(m >= 0 && m < static_cast<int>(e->poles.size()), "pole index out of range");
    const auto& q = e->poles[m];
    double r = std::hypot(p.x - q.x, p.y - q.y, p.z - q.z);
    if (r >= 0.5) throw Error(ErrorKind::NotNearPole, "point too far from the pole");
    double v = e->sigma;
    for (std::size_t i = 0; i < e->poles.size(); ++i) {
      if (static_cast<int>(i) == m) continue;
      const auto& o = e->poles[i];
      v += 0.5 / std::hypot(p.x - o.x, p.y - o.y, p.z - o.z);
    }
    return v;
  }
  if (const auto* gl = s.glued()) {
    double t = p.z - gl->T;
    if (t <= 0) return near_pole_remainder(*gl->model, m, p);
    if (t >= 1) return near_pole_remainder(*gl->neck, m, p);
    const auto* g = gl->neck->green();
    if (!g) throw Error(ErrorKind::NotNearPole, "no poles in the blended region");
    double r = cyl_distance(g->lattice, p, g->poles.at(m));
    return eval_potential(s, p) - 0.5 / r;
  }
  throw Error(ErrorKind::NotNearPole, "potential has no poles");
}

// ---- gluing -----------------------------------------------------------------

// Leading z-slope of a spec near height z.
inline double leading_slope(const PotentialSpec& s, double z) {
  if (const auto* m = s.linear()) return m->c;
  if (const auto* g = s.green()) {
    double lo = g->poles.front().z, hi = lo;
    for (const auto& q : g->poles) {
      lo = std::min(lo, q.z);
      hi = std::max(hi, q.z);
    }
    if (z < lo) return green_asymptote(*g, -1).slope;
    if (z > hi) return green_asymptote(*g, 1).slope;
    const auto& L = g->lattice;
    return (fiber_average(s, L, z + 0.5) - fiber_average(s, L, z - 0.5));
  }
  if (s.monopole()) return 0.0;
  const TorusLattice& L = spec_lattice(s);
  return fiber_average(s, L, z + 0.5) - fiber_average(s, L, z - 0.5);
}

inline PotentialSpec glue_potentials(SpecPtr neck, SpecPtr model, double T) {
  require(neck && model, "glue needs two specs");
  double tol = std::max(neck->tol, model->tol);
  double kn = leading_slope(*neck, T + 0.5), km = leading_slope(*model, T + 0.5);
  if (std::abs(kn - km) > std::max(tol, 1e-9 * std::abs(km)))
    throw Error(ErrorKind::SlopeMismatch, "neck and model slopes differ on the damage zone");
  PotentialSpec s;
  s.v = Glued{std::move(neck), std::move(model), T};
  s.tol = tol;
  return s;
}

// Residual sup |Laplacian V| over the damage zone [T, T+1] on a slice grid.
inline double glue_residual(const PotentialSpec& glued, int nz = 21, int grid = 8) {
  const Glued* gl = glued.glued();
  require(gl != nullptr, "glue_residual needs a glued spec");
  const TorusLattice& L = spec_lattice(glued);
  double sup = 0.0;
  for (int k = 1; k < nz - 1; ++k) {
    double z = gl->T + static_cast<double>(k) / (nz - 1);
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j) {
        Vec2 q = L.from_frac((i + 0.5) / grid, (j + 0.5) / grid);
        sup = std::max(sup, std::abs(eval_jet<2>(glued, {q.x, q.y, z}).laplacian()));
      }
  }
  return sup;
}

// Decaying end expansion of a periodic Green's function below (side -1) or
// above (side +1) every pole: u = V - linear asymptote, U its z-antiderivative
// vanishing at the far end, W the second antiderivative, plus planar gradients.
struct EndModes {
  double u = 0, U = 0, Ux = 0, Uy = 0, W = 0, Wx = 0, Wy = 0;
};

inline EndModes end_modes(const CylinderGreen& g, const Point3& p, int side, double tol = 1e-14) {
  EndModes e;
  const double A = g.lattice.area();
  for (const auto& q : g.poles) {
    double dz = p.z - q.z;
    require(side < 0 ? dz < 0 : dz > 0, "end expansion needs the point beyond every pole");
    double ad = std::abs(dz);
    double G = pot_detail::mode_cutoff(ad, 0, tol);
    Vec2 d = min_image(g.lattice, p.x - q.x, p.y - q.y);
    for (const auto& m : g.modes) {
      if (m.norm > G) break;
      double E = 2.0 * kPi / (A * m.norm) * std::exp(-m.norm * ad);
      double ph = m.gx * d.x + m.gy * d.y;
      double cv = std::cos(ph), sv = std::sin(ph);
      double k = m.norm;
      e.u += E * cv;
      e.U += E * cv / k;
      e.Ux += -E * sv * m.gx / k;
      e.Uy += -E * sv * m.gy / k;
      e.W += E * cv / (k * k);
      e.Wx += -E * sv * m.gx / (k * k);
      e.Wy += -E * sv * m.gy / (k * k);
    }
  }
  if (side > 0) {  // antiderivatives from +inf flip sign for odd order
    e.U = -e.U;
    e.Ux = -e.Ux;
    e.Uy = -e.Uy;
  }
  return e;
}

}  // namespace hklab

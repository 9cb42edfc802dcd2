#pragma once
// Gibbons-Hawking metrics g = V(e1^2 + e2^2 + dz^2) + V^{-1} theta^2 as
// pointwise tensor algebra in the coframe (e1, e2, dz, theta).

#include <array>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "hklab/error.hpp"
#include "hklab/potentials.hpp"

namespace hklab {

// 2-form basis order: e1^e2, e2^dz, dz^e1, dz^theta, e1^theta, e2^theta.
using TwoForm = std::array<double, 6>;

struct TripleSample {
  std::array<TwoForm, 3> omega{};
};

// Coefficient of e1^e2^dz^theta in a ^ b. Basis pairs (0,3), (1,4), (2,5)
// each wedge to +dvol0, all other pairs vanish.
inline double wedge(const TwoForm& a, const TwoForm& b) {
  return a[0] * b[3] + a[3] * b[0] + a[1] * b[4] + a[4] * b[1] + a[2] * b[5] + a[5] * b[2];
}

using Mat3 = std::array<std::array<double, 3>, 3>;

inline double det3(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

struct QMatrix {
  Mat3 Q{};
  double det = 0;
  Mat3 Qomega{};

  double deviation() const {  // Frobenius norm of Q_omega - Id
    double s = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double d = Qomega[i][j] - (i == j ? 1.0 : 0.0);
        s += d * d;
      }
    return std::sqrt(s);
  }
};

inline QMatrix q_matrix(const TripleSample& t) {
  QMatrix q;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      require(std::isfinite(t.omega[i][j]) && std::isfinite(t.omega[i][j + 3]), "triple components must be finite");
      q.Q[i][j] = 0.5 * wedge(t.omega[i], t.omega[j]);
    }
  q.det = det3(q.Q);
  if (!(q.det > 0)) throw Error(ErrorKind::DegenerateTriple, "det Q is not positive");
  double s = std::cbrt(q.det);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) q.Qomega[i][j] = q.Q[i][j] / s;
  return q;
}

inline TripleSample template_triple(double V) {
  TripleSample t;
  t.omega[0] = {V, 0, 0, 1, 0, 0};
  t.omega[1] = {0, V, 0, 0, 1, 0};
  t.omega[2] = {0, 0, V, 0, 0, 1};
  return t;
}

inline TripleSample triple_at_point(const PotentialSpec& s, const Point3& p) {
  double V = eval_potential(s, p);
  if (!(V > 0)) throw Error(ErrorKind::NonpositivePotential, "V <= 0");
  return template_triple(V);
}

struct MetricSample {
  double V = 0;
  std::array<double, 4> diag{};  // g(e1,e1), g(e2,e2), g(dz,dz), g(theta,theta) dual norms
  double volume_density = 0;
  double fiber_length = 0;
};

// Fiber length 2*pi*V^{-1/2} times the period factor of the model gauge.
inline MetricSample metric_at_point(const PotentialSpec& s, const Point3& p, double period_factor = 1.0) {
  double V = eval_potential(s, p);
  if (!(V > 0)) throw Error(ErrorKind::NonpositivePotential, "V <= 0");
  MetricSample m;
  m.V = V;
  m.diag = {V, V, V, 1.0 / V};
  m.volume_density = V;
  m.fiber_length = kTwoPi * period_factor / std::sqrt(V);
  return m;
}

// |Rm|^2 = (1/2) V^{-1} Lap^2 (V^{-1}). For harmonic V this equals
// 2|T|^2 / V^6 with T = V Hess V - 3 dV (x) dV + |dV|^2 Id, a sum of squares
// that vanishes identically for a single 1/(2r) pole.
inline double curvature_square_harmonic(const Jet<2>& j) {
  double V = j.value();
  double g[3] = {j.d(1, 0, 0), j.d(0, 1, 0), j.d(0, 0, 1)};
  double H[3][3] = {{j.d(2, 0, 0), j.d(1, 1, 0), j.d(1, 0, 1)},
                    {j.d(1, 1, 0), j.d(0, 2, 0), j.d(0, 1, 1)},
                    {j.d(1, 0, 1), j.d(0, 1, 1), j.d(0, 0, 2)}};
  double g2 = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
  double t2 = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double T = V * H[a][b] - 3 * g[a] * g[b] + (a == b ? g2 : 0.0);
      t2 += T * T;
    }
  return 2.0 * t2 / std::pow(V, 6);
}

inline double curvature_square_literal(const Jet<4>& j) {
  Jet<4> w = recip(j);
  double bilap = w.d(4, 0, 0) + w.d(0, 4, 0) + w.d(0, 0, 4) +
                 2 * (w.d(2, 2, 0) + w.d(2, 0, 2) + w.d(0, 2, 2));
  return 0.5 * bilap / j.value();
}

inline double clamp_curvature_square(double q) {
  if (q < -1e-12) throw Error(ErrorKind::NegativeSquare, "curvature square below -1e-12");
  return q < 0 ? 0.0 : q;
}

inline double curvature_norm_literal(const PotentialSpec& s, const Point3& p) {
  Jet<4> j = eval_jet<4>(s, p);
  if (!(j.value() > 0)) throw Error(ErrorKind::NonpositivePotential, "V <= 0");
  return std::sqrt(clamp_curvature_square(curvature_square_literal(j)));
}

inline double curvature_norm(const PotentialSpec& s, const Point3& p) {
  if (!s.harmonic()) return curvature_norm_literal(s, p);
  Jet<2> j = eval_jet<2>(s, p);
  if (!(j.value() > 0)) throw Error(ErrorKind::NonpositivePotential, "V <= 0");
  return std::sqrt(clamp_curvature_square(curvature_square_harmonic(j)));
}

struct CurvatureProfile {
  std::vector<double> coord, rm;
  double slope = 0;
  bool flat = false;
};

inline CurvatureProfile curvature_profile(const PotentialSpec& s, const std::vector<Point3>& ray,
                                          const std::vector<double>& coord) {
  require(ray.size() == coord.size() && ray.size() >= 2, "ray and coordinates must match");
  CurvatureProfile pr;
  pr.coord = coord;
  pr.flat = true;
  for (const auto& p : ray) {
    double r = curvature_norm(s, p);
    pr.rm.push_back(r);
    if (r > 1e-10) pr.flat = false;
  }
  if (!pr.flat) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < coord.size(); ++i)
      if (pr.rm[i] > 0) {
        lx.push_back(std::log(coord[i]));
        ly.push_back(std::log(pr.rm[i]));
      }
    pr.slope = least_squares(lx, ly).slope;
  }
  return pr;
}

// ---- local connection ---------------------------------------------------------

struct Box {
  double x0, x1, y0, y1, z0, z1;
  bool contains(double x, double y, double z, double pad = 0) const {
    return x >= x0 - pad && x <= x1 + pad && y >= y0 - pad && y <= y1 + pad && z >= z0 - pad && z <= z1 + pad;
  }
};

inline bool chart_has_pole(const PotentialSpec& s, const Box& b) {
  if (const auto* g = s.green()) {
    const auto& L = g->lattice;
    for (const auto& q : g->poles) {
      if (q.z < b.z0 - s.pole_eps || q.z > b.z1 + s.pole_eps) continue;
      double span = std::max(b.x1 - b.x0, b.y1 - b.y0) + std::hypot(L.v2().x, L.v2().y) + L.epsilon;
      int R = static_cast<int>(std::ceil(span / (2 * injectivity_radius(L)))) + 2;
      Vec2 c = L.to_frac(0.5 * (b.x0 + b.x1) - q.x, 0.5 * (b.y0 + b.y1) - q.y);
      int ci = static_cast<int>(std::round(c.x)), cj = static_cast<int>(std::round(c.y));
      for (int i = ci - R; i <= ci + R; ++i)
        for (int j = cj - R; j <= cj + R; ++j) {
          Vec2 t = L.from_frac(i, j);
          if (b.contains(q.x + t.x, q.y + t.y, q.z, s.pole_eps)) return true;
        }
    }
    return false;
  }
  if (const auto* e = s.monopole()) {
    for (const auto& q : e->poles)
      if (b.contains(q.x, q.y, q.z, s.pole_eps)) return true;
    return false;
  }
  if (const auto* gl = s.glued()) return chart_has_pole(*gl->neck, b) || chart_has_pole(*gl->model, b);
  return false;
}

// A with dA = *dV, built from the chart corner (x0, y, z0):
//   A_x = int_{z0}^{z} V_y dz,  A_y = int_{x0}^{x} V_z(., y, z0) dx - int_{z0}^{z} V_x dz,  A_z = 0.
inline std::array<double, 3> local_connection(const PotentialSpec& s, const Box& chart, const Point3& p) {
  if (chart_has_pole(s, chart)) throw Error(ErrorKind::ChartContainsPole, "chart contains a pole");
  require(chart.contains(p.x, p.y, p.z), "point outside the chart");
  using GL = boost::math::quadrature::gauss<double, 30>;
  auto grad = [&](double x, double y, double z) {
    Jet<1> j = eval_jet<1>(s, {x, y, z});
    return std::array<double, 3>{j.d(1, 0, 0), j.d(0, 1, 0), j.d(0, 0, 1)};
  };
  std::array<double, 3> A{0, 0, 0};
  if (p.z != chart.z0) {
    A[0] = GL::integrate([&](double z) { return grad(p.x, p.y, z)[1]; }, chart.z0, p.z);
    A[1] = -GL::integrate([&](double z) { return grad(p.x, p.y, z)[0]; }, chart.z0, p.z);
  }
  if (p.x != chart.x0) A[1] += GL::integrate([&](double x) { return grad(x, p.y, chart.z0)[2]; }, chart.x0, p.x);
  return A;
}

// ---- rescaled Taub-NUT comparison -----------------------------------------------

inline double taubnut_profile(double sigma, double d) { return 0.5 / d + 1.0 / (sigma * sigma); }

// Max over rescaled samples q of |V_beta(p_m + q/gamma)/(sigma^2 beta) - G_sigma(q)|,
// gamma = sigma^2 beta, where beta is the offset of the periodic Green's spec.
inline double rescaled_taubnut_compare(const PotentialSpec& s, int m, double sigma,
                                       const std::vector<Point3>& samples) {
  const auto* g = s.green();
  require(g != nullptr, "rescaled comparison needs a periodic Green's spec");
  require(m >= 0 && m < static_cast<int>(g->poles.size()), "pole index out of range");
  const double beta = g->offset;
  require(beta > 0 && sigma > 0, "beta and sigma must be positive");
  const double gamma = sigma * sigma * beta;
  const auto& q = g->poles[m];
  double worst = 0;
  for (const auto& t : samples) {
    double d = std::hypot(t.x, t.y, t.z);
    require(d > 0, "sample at the pole");
    Point3 p{q.x + t.x / gamma, q.y + t.y / gamma, q.z + t.z / gamma};
    double h = near_pole_remainder(s, m, p);  // V - 1/(2r)
    double dev = std::abs((h - beta) / (sigma * sigma * beta));
    worst = std::max(worst, dev);
  }
  return worst;
}

// ---- glued triple ---------------------------------------------------------------

// omega = omega_model + d(chi a), where d a = omega_neck - omega_model on the
// end region. With u = V_neck - V_model, U = int u dz and W = int U dz:
//   a1 = W_y dx - W_x dy, a2 = -U dy, a3 = U dx, theta_neck - theta_model = U_y dx - U_x dy.
// The chi-part is again of template form; only chi' dz ^ a_i breaks it.
inline TripleSample glued_triple_at_point(const PotentialSpec& glued, const Point3& p) {
  const Glued* gl = glued.glued();
  require(gl != nullptr, "glued triple needs a glued spec");
  const auto* g = gl->neck->green();
  const auto* mo = gl->model->linear();
  require(g && mo, "glued triple needs a periodic neck and a linear model");
  double zmin = g->poles.front().z, zmax = zmin;
  for (const auto& q : g->poles) {
    zmin = std::min(zmin, q.z);
    zmax = std::max(zmax, q.z);
  }
  int side = p.z < zmin ? -1 : 1;
  require(p.z < zmin || p.z > zmax, "glued triple evaluated between pole levels");
  LinearAsymptote as = green_asymptote(*g, side);
  if (std::abs(as.slope - mo->c) > 1e-9 * std::max(1.0, std::abs(mo->c)) ||
      std::abs(as.offset - mo->offset) > 1e-9 * std::max(1.0, std::abs(mo->offset)))
    throw Error(ErrorKind::SlopeMismatch, "model is not the neck's linear asymptote");
  EndModes e = end_modes(*g, p, side);
  double t = p.z - gl->T;
  double chi = SmoothStep::value(t), dchi = SmoothStep::d1(t);
  double V = mo->c * p.z + mo->offset + chi * e.u;
  if (!(V > 0)) throw Error(ErrorKind::NonpositivePotential, "V <= 0");
  TripleSample tr = template_triple(V);
  tr.omega[0][1] += dchi * e.Wx;
  tr.omega[0][2] += dchi * e.Wy;
  tr.omega[1][1] += dchi * e.U;
  tr.omega[2][2] += dchi * e.U;
  return tr;
}

// Sup of ||Q_omega - Id|| over the damage zone of a glued spec.
inline double glued_q_deviation(const PotentialSpec& glued, int nz = 21, int grid = 8) {
  const Glued* gl = glued.glued();
  require(gl != nullptr, "needs a glued spec");
  const TorusLattice& L = spec_lattice(glued);
  double sup = 0;
  for (int k = 0; k < nz; ++k) {
    double z = gl->T + static_cast<double>(k) / (nz - 1);
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j) {
        Vec2 q = L.from_frac((i + 0.5) / grid, (j + 0.5) / grid);
        sup = std::max(sup, q_matrix(glued_triple_at_point(glued, {q.x, q.y, z})).deviation());
      }
  }
  return sup;
}

}  // namespace hklab

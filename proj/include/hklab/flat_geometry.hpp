#pragma once
// Flat torus T^2 = R^2 / eps*Z<1, tau> and the cylinder T^2 x R.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "hklab/error.hpp"
#include "hklab/jet.hpp"

namespace hklab {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

struct Vec2 {
  double x = 0, y = 0;
};

struct TorusLattice {
  double epsilon = 1.0;
  double tau1 = 0.0;
  double tau2 = 1.0;

  TorusLattice() = default;
  TorusLattice(double eps, double t1, double t2) : epsilon(eps), tau1(t1), tau2(t2) {
    require(eps > 0 && std::isfinite(eps), "lattice epsilon must be positive");
    require(t2 > 0 && std::isfinite(t2) && std::isfinite(t1), "lattice tau2 must be positive");
  }
  static TorusLattice unit_square() { return {1.0, 0.0, 1.0}; }

  double area() const { return epsilon * epsilon * tau2; }
  Vec2 v1() const { return {epsilon, 0.0}; }
  Vec2 v2() const { return {epsilon * tau1, epsilon * tau2}; }
  // Lattice coordinates (a, b) with (x, y) = a*v1 + b*v2.
  Vec2 to_frac(double x, double y) const {
    double b = y / (epsilon * tau2);
    return {x / epsilon - tau1 * b, b};
  }
  Vec2 from_frac(double a, double b) const {
    return {epsilon * (a + tau1 * b), epsilon * tau2 * b};
  }
  // Dual basis w_i with w_i . v_j = delta_ij.
  Vec2 w1() const { return {1.0 / epsilon, -tau1 / (epsilon * tau2)}; }
  Vec2 w2() const { return {0.0, 1.0 / (epsilon * tau2)}; }
};

struct CylinderPoint {
  double x = 0, y = 0, z = 0;
};

namespace geom_detail {
inline double wrap_unit(double a) {
  double r = a - std::floor(a);
  if (r >= 1.0) r = 0.0;
  return r;
}
inline double wrap_centered(double a) { return a - std::floor(a + 0.5); }
}  // namespace geom_detail

// Reduce (x, y) into the half-open parallelogram [0,1)v1 + [0,1)v2.
// Points already inside (up to 1e-13 in lattice coordinates) are returned
// untouched, which keeps the reduction idempotent under rounding.
inline CylinderPoint reduce(const TorusLattice& L, CylinderPoint p) {
  Vec2 f = L.to_frac(p.x, p.y);
  constexpr double slack = 1e-13;
  if (f.x >= -slack && f.x < 1.0 && f.y >= -slack && f.y < 1.0) return p;
  Vec2 q = L.from_frac(geom_detail::wrap_unit(f.x), geom_detail::wrap_unit(f.y));
  return {q.x, q.y, p.z};
}

// Shortest representative of a planar displacement modulo the lattice.
inline Vec2 min_image(const TorusLattice& L, double dx, double dy) {
  Vec2 f = L.to_frac(dx, dy);
  Vec2 base = L.from_frac(geom_detail::wrap_centered(f.x), geom_detail::wrap_centered(f.y));
  Vec2 best = base;
  double bd = base.x * base.x + base.y * base.y;
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j) {
      Vec2 s = L.from_frac(i, j);
      double x = base.x + s.x, y = base.y + s.y;
      double d = x * x + y * y;
      if (d < bd) {
        bd = d;
        best = {x, y};
      }
    }
  return best;
}

inline double cyl_distance(const TorusLattice& L, const CylinderPoint& p, const CylinderPoint& q) {
  Vec2 d = min_image(L, q.x - p.x, q.y - p.y);
  double dz = q.z - p.z;
  return std::sqrt(d.x * d.x + d.y * d.y + dz * dz);
}

// Gauss-reduced basis (|u| <= |v|, u.v >= 0).
inline std::array<Vec2, 2> reduced_basis(const TorusLattice& L) {
  Vec2 u = L.v1(), v = L.v2();
  auto n2 = [](Vec2 a) { return a.x * a.x + a.y * a.y; };
  if (n2(u) > n2(v)) std::swap(u, v);
  for (int it = 0; it < 100; ++it) {
    double mu = std::round((u.x * v.x + u.y * v.y) / n2(u));
    v = {v.x - mu * u.x, v.y - mu * u.y};
    if (n2(v) >= n2(u)) break;
    std::swap(u, v);
  }
  if (u.x * v.x + u.y * v.y < 0) v = {-v.x, -v.y};
  return {u, v};
}

inline double injectivity_radius(const TorusLattice& L) {
  auto b = reduced_basis(L);
  return 0.5 * std::hypot(b[0].x, b[0].y);
}

// Largest distance from a point of T^2 to the nearest lattice point, i.e.
// the circumradius of the non-obtuse Delaunay triangle (0, u, v).
inline double torus_covering_radius(const TorusLattice& L) {
  auto b = reduced_basis(L);
  double lu = std::hypot(b[0].x, b[0].y), lv = std::hypot(b[1].x, b[1].y);
  double luv = std::hypot(b[0].x - b[1].x, b[0].y - b[1].y);
  return lu * lv * luv / (2.0 * L.area());
}

// Real L^2-normalized eigenfunction of -Laplacian on the torus.
struct TorusMode {
  enum class Kind { Constant, Cos, Sin };
  int m = 0, n = 0;  // dual vector xi* = m*w1 + n*w2
  Kind kind = Kind::Constant;
  double lambda = 0.0;
  double gx = 0.0, gy = 0.0;  // 2*pi*xi*
  double norm = 1.0;

  double operator()(double x, double y) const {
    double ph = gx * x + gy * y;
    switch (kind) {
      case Kind::Constant: return norm;
      case Kind::Cos: return norm * std::cos(ph);
      case Kind::Sin: return norm * std::sin(ph);
    }
    return 0.0;
  }
  double sqrt_lambda() const { return std::hypot(gx, gy); }
};

inline TorusMode make_mode(const TorusLattice& L, int m, int n, TorusMode::Kind kind) {
  TorusMode t;
  t.m = m;
  t.n = n;
  t.kind = kind;
  Vec2 a = L.w1(), b = L.w2();
  t.gx = kTwoPi * (m * a.x + n * b.x);
  t.gy = kTwoPi * (m * a.y + n * b.y);
  t.lambda = t.gx * t.gx + t.gy * t.gy;
  t.norm = kind == TorusMode::Kind::Constant ? 1.0 / std::sqrt(L.area()) : std::sqrt(2.0 / L.area());
  return t;
}

// Nonzero dual vectors (one per +/- pair) with 4 pi^2 |xi*|^2 <= lambda_max,
// sorted by (lambda, m, n). Near-equal eigenvalues (relative 1e-12) are
// treated as equal so degenerate shells keep their (m, n) order.
inline std::vector<TorusMode> dual_half_plane(const TorusLattice& L, double lambda_max) {
  Vec2 a = L.w1(), b = L.w2();
  // Gram matrix of the dual basis, smallest eigenvalue bounds |xi*|^2 from below.
  double g11 = a.x * a.x + a.y * a.y, g22 = b.x * b.x + b.y * b.y, g12 = a.x * b.x + a.y * b.y;
  double tr = g11 + g22, det = g11 * g22 - g12 * g12;
  double smin = 0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4 * det)));
  int R = static_cast<int>(std::ceil(std::sqrt(lambda_max / (4 * kPi * kPi * smin)))) + 1;
  std::vector<TorusMode> out;
  for (int m = 0; m <= R; ++m)
    for (int n = -R; n <= R; ++n) {
      if (m == 0 && n <= 0) continue;
      TorusMode t = make_mode(L, m, n, TorusMode::Kind::Cos);
      if (t.lambda <= lambda_max) out.push_back(t);
    }
  std::sort(out.begin(), out.end(), [](const TorusMode& p, const TorusMode& q) {
    if (p.lambda != q.lambda) return p.lambda < q.lambda;
    if (p.m != q.m) return p.m < q.m;
    return p.n < q.n;
  });
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i].lambda - out[i - 1].lambda <= 1e-12 * out[i].lambda) out[i].lambda = out[i - 1].lambda;
  std::stable_sort(out.begin(), out.end(), [](const TorusMode& p, const TorusMode& q) {
    if (p.lambda != q.lambda) return p.lambda < q.lambda;
    if (p.m != q.m) return p.m < q.m;
    return p.n < q.n;
  });
  return out;
}

inline std::vector<TorusMode> torus_spectrum(const TorusLattice& L, int max_count) {
  require(max_count >= 1, "max_count must be at least 1");
  std::vector<TorusMode> out;
  out.push_back(make_mode(L, 0, 0, TorusMode::Kind::Constant));
  double lam = 4 * kPi * kPi / (L.epsilon * L.epsilon);
  while (true) {
    auto shell = dual_half_plane(L, lam);
    if (1 + 2 * static_cast<int>(shell.size()) >= max_count) {
      for (const auto& t : shell) {
        if (static_cast<int>(out.size()) >= max_count) break;
        out.push_back(t);
        if (static_cast<int>(out.size()) >= max_count) break;
        TorusMode s = t;
        s.kind = TorusMode::Kind::Sin;
        out.push_back(s);
      }
      break;
    }
    lam *= 2.0;
  }
  return out;
}

// Number of eigenvalues (with multiplicity) not exceeding lambda.
inline std::int64_t spectral_count(const TorusLattice& L, double lambda) {
  return 1 + 2 * static_cast<std::int64_t>(dual_half_plane(L, lambda).size());
}

}  // namespace hklab

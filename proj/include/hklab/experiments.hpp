#pragma once
// Reproducible experiment runners shared by the command-line tool and the
// acceptance driver. Each returns raw measurements; pass/fail thresholds
// live with the caller.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hklab/calabi_separation.hpp"
#include "hklab/gibbons_hawking.hpp"
#include "hklab/io.hpp"
#include "hklab/model_ode.hpp"
#include "hklab/neck_planner.hpp"
#include "hklab/potentials.hpp"

namespace hklab {

// Fixed, deliberately asymmetric pole placements on the unit square so no
// Fourier mode cancels between poles.
inline std::vector<CylinderPoint> default_poles(int m0) {
  static const CylinderPoint base[] = {{0.13, 0.21, 0.0}, {0.58, 0.37, 0.12}, {0.31, 0.79, -0.09},
                                       {0.84, 0.66, 0.05}, {0.47, 0.08, -0.15}, {0.71, 0.93, 0.2}};
  require(m0 >= 1 && m0 <= 6, "default layout holds 1 to 6 poles");
  return {base, base + m0};
}

// ---- slope law -----------------------------------------------------------------

struct SlopeRow {
  int m0 = 0;
  double k_minus = 0, k_plus = 0, expected = 0, rate_minus = 0, rate_plus = 0;
};

inline SlopeRow slope_law(const TorusLattice& L, const std::vector<CylinderPoint>& poles, double tol = 1e-12) {
  auto s = make_cylinder_green(L, poles, 0.0, 0.0, tol);
  double lo = poles.front().z, hi = lo;
  for (const auto& q : poles) {
    lo = std::min(lo, q.z);
    hi = std::max(hi, q.z);
  }
  auto m = fit_asymptotic_slope(s, lo - 3.0, lo - 1.0, -1);
  auto p = fit_asymptotic_slope(s, hi + 1.0, hi + 3.0, 1);
  return {static_cast<int>(poles.size()), m.k, p.k, kTwoPi * poles.size() / L.area(), m.residual_rate,
          p.residual_rate};
}

// ---- engine agreement --------------------------------------------------------------

struct EnginePoint {
  Point3 p;
  double ewald = 0, modes = 0;
};

// Points at distance [0.2, 0.4] from a single pole with |z - z_pole| >= 0.1.
inline std::vector<EnginePoint> engine_agreement(int n, std::uint64_t seed, double tol = 1e-12) {
  const TorusLattice L = TorusLattice::unit_square();
  const CylinderPoint pole{0.5, 0.5, 0.0};
  auto s = make_cylinder_green(L, {pole}, 0.0, 0.0, tol);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<EnginePoint> out;
  while (static_cast<int>(out.size()) < n) {
    double r = 0.2 + 0.2 * U(rng), ct = 2 * U(rng) - 1, ph = kTwoPi * U(rng);
    double st = std::sqrt(1 - ct * ct);
    Point3 p{pole.x + r * st * std::cos(ph), pole.y + r * st * std::sin(ph), pole.z + r * ct};
    if (std::abs(p.z - pole.z) < 0.1) continue;
    out.push_back({p, eval_potential(s, p, Engine::Ewald), eval_potential(s, p, Engine::Modes)});
  }
  return out;
}

// ---- Q identity ----------------------------------------------------------------------

struct QSample {
  Point3 p;
  double V = 0, deviation = 0;
};

inline std::vector<QSample> q_identity(int n, std::uint64_t seed, double beta = 4.0) {
  const TorusLattice L = TorusLattice::unit_square();
  auto s = make_cylinder_green(L, default_poles(2), 0.0, beta);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<QSample> out;
  while (static_cast<int>(out.size()) < n) {
    Point3 p{U(rng), U(rng), 2 * U(rng) - 1};
    double V;
    try {
      V = eval_potential(s, p);
    } catch (const Error&) {
      continue;
    }
    if (!(V > 0)) continue;
    out.push_back({p, V, q_matrix(triple_at_point(s, p)).deviation()});
  }
  return out;
}

// ---- curvature -------------------------------------------------------------------------

struct CurvatureStudy {
  double flat_const_max = 0, flat_monopole_max = 0;
  CurvatureProfile taubnut;
  double calabi_max_rel = 0;
  double calabi_rm_exponent = 0;
};

inline std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(lo * std::pow(hi / lo, double(i) / (n - 1)));
  return v;
}

inline CurvatureProfile taubnut_profile_along_ray(double sigma, double r_lo, double r_hi, int n = 41) {
  auto s = make_euclidean_monopole(sigma, {{0, 0, 0}});
  std::vector<Point3> ray;
  auto rs = log_grid(r_lo, r_hi, n);
  for (double r : rs) ray.push_back({r / std::sqrt(3.0), r / std::sqrt(3.0), r / std::sqrt(3.0)});
  return curvature_profile(s, ray, rs);
}

inline CurvatureStudy curvature_study() {
  CurvatureStudy c;
  auto one = make_euclidean_monopole(1.0, {});
  auto mono = make_euclidean_monopole(0.0, {{0, 0, 0}});
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    Point3 p{U(rng), U(rng), U(rng)};
    if (std::hypot(p.x, p.y, p.z) < 0.05) continue;
    c.flat_const_max = std::max(c.flat_const_max, curvature_norm(one, p));
    c.flat_monopole_max = std::max(c.flat_monopole_max, curvature_norm(mono, p));
  }
  c.taubnut = taubnut_profile_along_ray(1.0, 5.0, 50.0);
  auto cal = make_calabi(1, 0.5);
  auto lin = make_model_linear(cal.slope(), 0.0);
  for (double z : log_grid(1.0, 50.0, 25)) {
    double exact = 2 * std::sqrt(3.0) / (z * z * z);
    c.calabi_max_rel = std::max(c.calabi_max_rel, std::abs(curvature_norm(lin, {0.1, 0.2, z}) - exact) / exact);
  }
  c.calabi_rm_exponent = calabi_profile(cal, 20.0, 200.0).rm_exponent;
  return c;
}

// ---- Wronskian and envelopes --------------------------------------------------------------

struct WronskianRow {
  int j = 0;
  double h = 0, closed = 0, max_rel_dev = 0, spread = 0;
  double Fp0_err = 0, U0_err = 0, F0_err = 0, Up0_err = 0;  // relative
};

// The numeric Wronskian is F'U - FU' from the differentiated integrals.
inline WronskianRow wronskian_study(int j, double h, double z_hi = 4.0, int n = 41) {
  auto fp = fundamental_pair(mode_params(j, h));
  WronskianRow r{j, h, fp.wronskian_closed()};
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i < n; ++i) {
    double z = z_hi * i / (n - 1);
    double w = fp.Fp(z) * fp.U(z) - fp.F(z) * fp.Up(z);
    lo = std::min(lo, w);
    hi = std::max(hi, w);
    r.max_rel_dev = std::max(r.max_rel_dev, std::abs(w - r.closed) / r.closed);
  }
  r.spread = (hi - lo) / r.closed;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
  r.Fp0_err = rel(fp.Fp(0), fp.Fp0_closed());
  r.U0_err = rel(fp.U(0), fp.U0_closed());
  r.F0_err = rel(fp.F(0), fp.F0_closed());
  r.Up0_err = rel(fp.Up(0), fp.Up0_closed());
  return r;
}

struct EnvelopeStudy {
  int points = 0, F_violations = 0, U_violations = 0, quotient_violations = 0;
  double max_quotient_over_C0 = 0;
  double max_monotonicity_err = 0;  // |numeric dFhat/da - sqrt(h/2 + a^2/16)|
  double min_monotonicity_margin = INFINITY;  // sqrt(h/2 + a^2/16) - a/4
  // max |t0*s0 - h/2| for the adopted roots and for the h^2/2 variant
  double root_identity_err = 0, root_identity_err_printed = 0;
};

inline EnvelopeStudy envelope_study(const std::vector<int>& js, const std::vector<double>& hs, double z_hi = 8.0,
                                    int nz = 40) {
  EnvelopeStudy s;
  for (int j : js)
    for (double h : hs)
      for (int i = 0; i < nz; ++i) {
        double z = z_hi * i / (nz - 1);
        auto e = laplace_envelope(mode_params(j, h), z);
        ++s.points;
        s.F_violations += !e.F_bounded;
        s.U_violations += !e.U_bounded;
        s.quotient_violations += !e.quotient_bounded;
        s.max_quotient_over_C0 = std::max(s.max_quotient_over_C0, e.quotient / e.C0);
        // Five-point derivative of Fhat in a = 2y.
        double a = 2 * e.y, d = 1e-3;
        auto Fa = [&](double t) { return envelope_F(h, 0.5 * t); };
        double num = (Fa(a - 2 * d) - 8 * Fa(a - d) + 8 * Fa(a + d) - Fa(a + 2 * d)) / (12 * d);
        double exact = std::sqrt(0.5 * h + a * a / 16);
        if (h > 0 || a > 2 * d) s.max_monotonicity_err = std::max(s.max_monotonicity_err, std::abs(num - exact));
        s.min_monotonicity_margin = std::min(s.min_monotonicity_margin, exact - a / 4);
        s.root_identity_err = std::max(s.root_identity_err, std::abs(e.t0 * e.s0 - 0.5 * h));
        s.root_identity_err_printed = std::max(s.root_identity_err_printed, std::abs(e.t0_printed * e.s0_printed - 0.5 * h));
      }
  return s;
}

// ---- Poisson solves --------------------------------------------------------------------------

struct PoissonCase {
  std::string name;
  ModeParams mode;
  Rhs rhs;
  double z_eval = 0, eta = 0, window_lo = 0, window_hi = 0;
};

inline std::vector<PoissonCase> poisson_cases() {
  const double l1 = 4 * kPi * kPi;
  return {
      {"j1_h0_exp", mode_params(1, 0), {[](double z) { return std::exp(-z); }, 1.0, -1.0}, 2.0, -0.9, 2, 6},
      {"j0_l1_exp", flat_mode(l1), {[](double z) { return std::exp(-z); }, 1.0, -1.0}, 3.0, -0.9, 10, 30},
      {"j1_h1_grow", mode_params(1, 1), {[](double z) { return std::exp(z / 10); }, 1.0, 0.1}, 6.0, 0.2, 2, 6},
      {"j2_h05_exp", mode_params(2, 0.5), {[](double z) { return std::exp(-z); }, 1.0, -1.0}, 2.0, -0.9, 2, 6},
      {"j0_l2_damped", flat_mode(2 * l1), {[](double z) { return std::exp(-z / 2) / (1 + z); }, 1.0, -0.5}, 1.5,
       -0.4, 10, 30},
      {"j3_h2_rational", mode_params(3, 2), {[](double z) { return 1 / (1 + z * z); }, 1.0, 0.0}, 1.5, 0.1, 2, 6},
  };
}

struct PoissonRow {
  std::string name;
  double u = 0, relative_residual = 0, fitted_rate = 0, eta = 0, eta0 = 0;
  bool growth_holds = false;
};

inline PoissonRow poisson_study(const PoissonCase& c) {
  auto r = poisson_mode_solve(c.mode, c.rhs, c.z_eval, c.eta, c.window_lo, c.window_hi);
  return {c.name, r.u, r.residual.relative, r.growth.fitted_rate, c.eta, c.rhs.eta0, r.growth.holds};
}

// ---- harmonic decay ---------------------------------------------------------------------------

inline DecayCertificate harmonic_decay_study() {
  SliceData d;
  d.a = 1.0;
  d.b = 0.5;
  d.torus.push_back({make_mode(d.lattice, 1, 0, TorusMode::Kind::Cos), 1.0});
  return extension_certificate(d, 1.0, 4.0, 16);
}

// ---- bookkeeping ------------------------------------------------------------------------------

struct BookkeepingStudy {
  long long configs = 0, failures = 0;
  double symmetric_t1 = 0;
  std::string first_failure;
};

inline void for_each_composition(int n, int max_parts, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> w;
  std::function<void(int)> rec = [&](int left) {
    if (left == 0) {
      f(w);
      return;
    }
    if (static_cast<int>(w.size()) == max_parts) return;
    for (int x = 1; x <= left; ++x) {
      w.push_back(x);
      rec(left - x);
      w.pop_back();
    }
  };
  rec(n);
}

inline BookkeepingStudy bookkeeping_study(int max_parts) {
  BookkeepingStudy s;
  for (int bm = 1; bm <= 9; ++bm)
    for (int bp = 1; bp <= 9; ++bp) {
      auto topo = topology_invariants(bm, bp);
      for_each_composition(bm + bp, max_parts, [&](const std::vector<int>& w) {
        ++s.configs;
        bool ok = topo.chi == 24 && topo.signature == -16 && topo.b2_plus == 3 && topo.b2_minus == 19;
        try {
          auto sp = slope_recurrence(bm, bp, w);
          int sum = 0;
          for (int x : w) sum += x;
          ok = ok && sp.degrees.front() - sp.degrees.back() == sum;
          for (std::size_t i = 0; i < w.size(); ++i) ok = ok && sp.degrees[i] - sp.degrees[i + 1] == w[i];
          ok = ok && sp.right.back() == Rational(2 * (bm - sum)) && sp.right.back() == Rational(-2 * bp);
          ok = ok && sp.left.front() == Rational(2 * bm);
        } catch (const Error&) {
          ok = false;
        }
        if (!ok && s.failures++ == 0) s.first_failure = std::to_string(bm) + "," + std::to_string(bp);
      });
    }
  GluingConfig c;
  c.b_minus = c.b_plus = 7;
  c.weights = {14};
  c.beta = 100;
  s.symmetric_t1 = plan_neck(c).singular_points.at(0);
  return s;
}

// ---- weight coherence --------------------------------------------------------------------------

struct InterfaceRow {
  double beta = 0;
  std::vector<InterfaceRatio> ratios;
};

inline std::vector<InterfaceRow> interface_study(GluingConfig c, const WeightParams& w,
                                                 const std::vector<double>& betas) {
  std::vector<InterfaceRow> out;
  for (double b : betas) {
    c.beta = b;
    out.push_back({b, interface_ratios(plan_neck(c), w)});
  }
  return out;
}

}  // namespace hklab

#pragma once
// Separation of variables on the Calabi model space T^2 x (0, inf) with
// V = (2 pi b / A) z: fiber-mode bookkeeping, decaying harmonic extensions
// and mode-wise Poisson solves.

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "hklab/error.hpp"
#include "hklab/flat_geometry.hpp"
#include "hklab/gibbons_hawking.hpp"
#include "hklab/model_ode.hpp"
#include "hklab/potentials.hpp"

namespace hklab {

struct CalabiParams {
  int b = 1;
  double A = kTwoPi;
  double tau1 = 0.0, tau2 = 1.0;
  double r0 = 0.5;
  double z0 = 0.0;

  TorusLattice lattice() const { return {std::sqrt(A / tau2), tau1, tau2}; }
  double slope() const { return kTwoPi * b / A; }
};

inline CalabiParams make_calabi(int b, double r0, double tau1 = 0.0, double tau2 = 1.0) {
  require(b >= 1, "degree must be positive");
  require(r0 > 0 && r0 < 1, "slice radius must lie in (0, 1)");
  require(tau2 > 0, "tau2 must be positive");
  CalabiParams c;
  c.b = b;
  c.A = kTwoPi * b;
  c.tau1 = tau1;
  c.tau2 = tau2;
  c.r0 = r0;
  c.z0 = std::sqrt(-std::log(r0 * r0));
  return c;
}

// ---- spectra -------------------------------------------------------------------

// Distinct values of {4 pi^2 (k^2 + l^2)} U {2 pi m (2h + 1 + 2 pi m) : m >= 1, h >= 0},
// the Laplace spectrum of the degree-1 square Heisenberg nilmanifold.
inline std::vector<double> heisenberg_spectrum(int count) {
  require(count >= 1, "count must be at least 1");
  const double c = 4 * kPi * kPi;
  // Grow the search bound until the count-th value is certainly covered.
  for (double bound = c * count;; bound *= 2) {
    std::set<double> vals;
    int nmax = static_cast<int>(bound / c) + 1;
    for (int n = 0; n <= nmax; ++n) {
      bool two_squares = false;
      for (int k = 0; k * k <= n && !two_squares; ++k) {
        int r = n - k * k;
        int l = static_cast<int>(std::lround(std::sqrt(double(r))));
        two_squares = l * l == r;
      }
      if (two_squares && c * n <= bound) vals.insert(c * n);
    }
    for (int m = 1; kTwoPi * m * (1 + kTwoPi * m) <= bound; ++m)
      for (int h = 0;; ++h) {
        double v = kTwoPi * m * (2 * h + 1 + kTwoPi * m);
        if (v > bound) break;
        vals.insert(v);
      }
    if (static_cast<int>(vals.size()) >= count) return {vals.begin(), std::next(vals.begin(), count)};
  }
}

enum class LambdaFormula { Derivation, ProofVariant };

// Slice eigenvalue of a separated mode: lambda/(2 z0) + 2 z0 j^2 / r0^2, or
// lambda/z0 + 2 z0 j^2 / r0^2 under the comparison flag.
inline double fiber_mode_lambda(const CalabiParams& c, double lambda, int j,
                                LambdaFormula f = LambdaFormula::Derivation) {
  require(j >= 0 && lambda >= j, "need lambda >= j >= 0");
  double first = f == LambdaFormula::Derivation ? lambda / (2 * c.z0) : lambda / c.z0;
  return first + 2 * c.z0 * double(j) * j / (c.r0 * c.r0);
}

// ---- harmonic extension -----------------------------------------------------------

struct TorusTerm {
  TorusMode mode;
  double c = 0.0;         // coefficient of the decaying branch e^{-sqrt(lambda) z}
  double c_growth = 0.0;  // coefficient of e^{+sqrt(lambda) z}; must vanish
};

struct HermiteTerm {
  ModeParams p;
  double c = 0.0;         // coefficient of the decaying solution U
  double c_growth = 0.0;  // coefficient of F; must vanish
};

struct SliceData {
  TorusLattice lattice = TorusLattice::unit_square();
  double a = 0.0, b = 0.0;  // linear part a z + b
  std::vector<TorusTerm> torus;
  std::vector<HermiteTerm> hermite;
};

inline void check_decaying(const SliceData& d) {
  for (const auto& t : d.torus)
    if (t.c_growth != 0.0) throw Error(ErrorKind::GrowthModeRejected, "nonzero growing torus coefficient");
  for (const auto& t : d.hermite)
    if (t.c_growth != 0.0) throw Error(ErrorKind::GrowthModeRejected, "nonzero growing Hermite coefficient");
  for (const auto& t : d.torus) require(t.mode.lambda > 0, "torus terms must be nonconstant modes");
}

// Value of the j = 0 part at a point; j >= 1 modes only enter through
// slice-sup certificates.
inline double harmonic_extension(const SliceData& d, const Point3& p) {
  check_decaying(d);
  double u = d.a * p.z + d.b;
  for (const auto& t : d.torus) u += t.c * std::exp(-t.mode.sqrt_lambda() * p.z) * t.mode(p.x, p.y);
  return u;
}

// sup over the slice at height z of |u - (a z + b)|: a grid sup for the torus
// modes plus |c| U(z) for each Hermite mode (unit-sup section convention).
inline double extension_remainder(const SliceData& d, double z, int grid = 32) {
  check_decaying(d);
  double sup = 0.0;
  if (!d.torus.empty()) {
    for (int i = 0; i < grid; ++i)
      for (int k = 0; k < grid; ++k) {
        Vec2 q = d.lattice.from_frac(double(i) / grid, double(k) / grid);
        double s = 0.0;
        for (const auto& t : d.torus) s += t.c * std::exp(-t.mode.sqrt_lambda() * z) * t.mode(q.x, q.y);
        sup = std::max(sup, std::abs(s));
      }
  }
  for (const auto& t : d.hermite) sup += std::abs(t.c) * fundamental_pair(t.p).U(z);
  return sup;
}

struct DecayCertificate {
  double fitted_rate = 0.0;    // -slope of log remainder over the window
  double analytic_rate = 0.0;  // min over active modes of the exact secant rate
  bool holds = false;          // fitted >= 0.9 analytic and never above it
  std::vector<double> z, remainder;
};

inline DecayCertificate extension_certificate(const SliceData& d, double z_lo = 1.0, double z_hi = 4.0,
                                              int samples = 16) {
  require(z_hi > z_lo && samples >= 3, "window needs z_hi > z_lo and >= 3 samples");
  DecayCertificate c;
  c.analytic_rate = INFINITY;
  for (const auto& t : d.torus)
    if (t.c != 0.0) c.analytic_rate = std::min(c.analytic_rate, t.mode.sqrt_lambda());
  for (const auto& t : d.hermite)
    if (t.c != 0.0) {
      auto fp = fundamental_pair(t.p);
      c.analytic_rate = std::min(c.analytic_rate, (fp.log_U(z_lo) - fp.log_U(z_hi)) / (z_hi - z_lo));
    }
  std::vector<double> lz, lr;
  for (int i = 0; i < samples; ++i) {
    double z = z_lo + (z_hi - z_lo) * i / (samples - 1);
    double r = extension_remainder(d, z);
    c.z.push_back(z);
    c.remainder.push_back(r);
    if (r > 0) {
      lz.push_back(z);
      lr.push_back(std::log(r));
    }
  }
  if (lz.size() < 2) {
    c.fitted_rate = INFINITY;
    c.holds = true;  // pure linear data: remainder identically zero
    return c;
  }
  c.fitted_rate = -least_squares(lz, lr).slope;
  c.holds = c.fitted_rate >= 0.9 * c.analytic_rate;
  return c;
}

// ---- Poisson solves ---------------------------------------------------------------

struct PoissonModeResult {
  double u = 0.0;
  PoissonResidual residual;
  GrowthCertificate growth;
};

inline PoissonModeResult poisson_mode_solve(const ModeParams& mode, const Rhs& rhs, double z, double eta,
                                            double window_lo, double window_hi) {
  PoissonModeResult r;
  r.u = particular_solution(mode, rhs, z).u;
  if (rhs.Q > 0) r.residual = poisson_residual(mode, rhs, z);
  r.growth = growth_certificate(mode, rhs, eta, window_lo, window_hi);
  return r;
}

// ---- Calabi profile ------------------------------------------------------------------

struct CalabiRow {
  double z, s, fiber_len, rm_norm, vol_cum;
};

struct CalabiProfile {
  std::vector<CalabiRow> rows;
  double s_exponent = 0;    // s against z
  double vol_exponent = 0;  // cumulative volume against s
  double rm_exponent = 0;   // |Rm| against s
};

// Samples z log-uniformly on [z_lo, z_hi]; s and the volume are quadratures
// from z = 1 of sqrt(V) and 2 pi A V.
inline CalabiProfile calabi_profile(const CalabiParams& c, double z_lo, double z_hi, int samples = 41) {
  require(z_lo > 1 && z_hi > z_lo && samples >= 3, "profile needs 1 < z_lo < z_hi and >= 3 samples");
  using boost::math::quadrature::gauss;
  const double k = c.slope();
  PotentialSpec spec = make_model_linear(k, 0.0);
  CalabiProfile pr;
  std::vector<double> lz, ls, lv, lr;
  for (int i = 0; i < samples; ++i) {
    double z = z_lo * std::pow(z_hi / z_lo, double(i) / (samples - 1));
    double s = gauss<double, 30>::integrate([&](double t) { return std::sqrt(k * t); }, 1.0, z);
    double vol = kTwoPi * c.A * gauss<double, 30>::integrate([&](double t) { return k * t; }, 1.0, z);
    auto m = metric_at_point(spec, {0, 0, z});
    double rm = curvature_norm(spec, {0, 0, z});
    pr.rows.push_back({z, s, m.fiber_length, rm, vol});
    lz.push_back(std::log(z));
    ls.push_back(std::log(s));
    lv.push_back(std::log(vol));
    lr.push_back(std::log(rm));
  }
  pr.s_exponent = least_squares(lz, ls).slope;
  pr.vol_exponent = least_squares(ls, lv).slope;
  pr.rm_exponent = least_squares(ls, lr).slope;
  return pr;
}

}  // namespace hklab

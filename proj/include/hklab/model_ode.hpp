#pragma once
// Fundamental solutions of f'' - (lambda + j^2 z^2) f = 0 and the
// variation-of-parameters solver for the inhomogeneous mode equation.
//
// For j >= 1 the pair is built from
//   H(h, y) = int_0^inf exp(-t^2 - 2 t y) t^h dt,   y = sqrt(j) z,
// with F(z) = e^{-y^2/2} H(h, -y) (growing) and U(z) = e^{-y^2/2} H(h, y)
// (decaying). Everything is carried in log space, so no overflow occurs for
// any representable z.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hklab/error.hpp"
#include "hklab/flat_geometry.hpp"

namespace hklab {

struct ModeParams {
  int j = 0;
  double h = 0.0;
  double lambda = 0.0;

  // Coefficient of the zeroth-order term at height z.
  double potential(double z) const { return lambda + double(j) * j * z * z; }
};

inline ModeParams mode_params(int j, double h) {
  require(j >= 1, "j must be at least 1 for the Hermite branch");
  require(h >= 0 && std::isfinite(h), "h must be nonnegative");
  return {j, h, (2 * h + 1) * j};
}

inline ModeParams flat_mode(double lambda) {
  require(lambda >= 0 && std::isfinite(lambda), "lambda must be nonnegative");
  return {0, 0.0, lambda};
}

namespace ode_detail {

constexpr double kQuadTol = 1e-13;
constexpr int kQuadDepth = 6;
constexpr double kDrop = 60.0;  // log-range kept around the maximum

inline double log_integrand(double h, double y, double t) {
  if (t <= 0) return h > 0 ? -INFINITY : 0.0;
  return -t * t - 2 * t * y + (h > 0 ? h * std::log(t) : 0.0);
}

template <class F>
double gk(F&& f, double a, double b, double* err) {
  double e = 0.0, l1 = 0.0;
  double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, kQuadDepth, kQuadTol, &e, &l1);
  if (err) *err += e;
  return v;
}

}  // namespace ode_detail

// log H(h, y); the integral is split at the integrand's peak and each side is
// cut where the integrand falls e^{-60} below its maximum.
inline double log_hermite_integral(double h, double y, double* rel_err = nullptr) {
  using namespace ode_detail;
  require(h >= 0 && std::isfinite(h) && std::isfinite(y), "hermite_integral needs h >= 0 and finite y");
  const double tc = h > 0 ? 0.5 * (std::sqrt(y * y + 2 * h) - y) : std::max(0.0, -y);
  const double pmax = log_integrand(h, y, tc);
  double curv = 2.0 + (h > 0 ? h / (tc * tc) : 0.0);
  double w = 1.0 / std::sqrt(curv);
  if (tc == 0.0) w = std::min(w, 1.0 / (2.0 * std::abs(y) + 1e-300));
  auto g = [&](double t) { return std::exp(log_integrand(h, y, t) - pmax); };

  double hi = tc + w;
  while (log_integrand(h, y, hi) - pmax > -kDrop) hi = tc + 2.0 * (hi - tc);
  double lo = tc;
  if (tc > 0) {
    double step = w;
    lo = tc - step;
    while (lo > 0 && log_integrand(h, y, lo) - pmax > -kDrop) {
      step *= 2.0;
      lo = tc - step;
    }
  }

  // Integrate in the scaled variable s = (t - tc)/w with unit panels, so the
  // rule sees an O(1) integrand regardless of how narrow the peak is.
  auto panels = [&](auto&& f, double a, double b, double* e) {
    int n = std::clamp(int(std::ceil(b - a)), 1, 96);
    double s = 0.0, d = (b - a) / n;
    for (int i = 0; i < n; ++i) s += gk(f, a + i * d, a + (i + 1) * d, e);
    return s;
  };
  auto gs = [&](double s) { return g(tc + w * s); };
  double err = 0.0, sum = 0.0;
  if (tc > 0) {
    if (lo <= 0) {
      // t = tc v^2 removes the t^h endpoint singularity for fractional h.
      auto gv = [&](double v) { return g(tc * v * v) * 2.0 * v * (tc / w); };
      for (int i = 0; i < 16; ++i) sum += gk(gv, i / 16.0, (i + 1) / 16.0, &err);
    } else {
      sum += panels(gs, (lo - tc) / w, 0.0, &err);
    }
  }
  sum += panels(gs, 0.0, (hi - tc) / w, &err);
  sum *= w;
  err *= w;
  if (!(sum > 0) || err > 1e-10 * sum)
    throw Error(ErrorKind::QuadratureBudgetExceeded, "hermite integral did not reach tolerance");
  if (rel_err) *rel_err = err / sum;
  return pmax + std::log(sum);
}

inline double hermite_integral(double h, double y) { return std::exp(log_hermite_integral(h, y)); }

// Growing/decaying pair for j >= 1.
struct FundamentalPair {
  ModeParams p;

  double y(double z) const { return std::sqrt(double(p.j)) * z; }
  double log_F(double z) const { double t = y(z); return -0.5 * t * t + log_hermite_integral(p.h, -t); }
  double log_U(double z) const { double t = y(z); return -0.5 * t * t + log_hermite_integral(p.h, t); }
  double F(double z) const { return std::exp(log_F(z)); }
  double U(double z) const { return std::exp(log_U(z)); }
  // Logarithmic derivatives F'/F and U'/U.
  double dlog_F(double z) const {
    double t = y(z);
    double r = std::exp(log_hermite_integral(p.h + 1, -t) - log_hermite_integral(p.h, -t));
    return std::sqrt(double(p.j)) * (-t + 2 * r);
  }
  double dlog_U(double z) const {
    double t = y(z);
    double r = std::exp(log_hermite_integral(p.h + 1, t) - log_hermite_integral(p.h, t));
    return -std::sqrt(double(p.j)) * (t + 2 * r);
  }
  double Fp(double z) const { return F(z) * dlog_F(z); }
  double Up(double z) const { return U(z) * dlog_U(z); }

  // F'U - FU' = 2 sqrt(j) e^{-y^2} [H_{h+1}(-y) H_h(y) + H_h(-y) H_{h+1}(y)].
  double wronskian(double z) const {
    double t = y(z), h = p.h;
    double a = log_hermite_integral(h + 1, -t) + log_hermite_integral(h, t);
    double b = log_hermite_integral(h, -t) + log_hermite_integral(h + 1, t);
    double m = std::max(a, b);
    return 2 * std::sqrt(double(p.j)) * std::exp(m - t * t) * (std::exp(a - m) + std::exp(b - m));
  }
  double wronskian_closed() const {
    return std::pow(2.0, -p.h) * std::sqrt(p.j * kPi) * std::tgamma(p.h + 1);
  }

  double F0_closed() const { return 0.5 * std::tgamma(0.5 * (p.h + 1)); }
  double Fp0_closed() const { return std::sqrt(double(p.j)) * std::tgamma(0.5 * p.h + 1); }
  double U0_closed() const { return 0.5 * std::tgamma(0.5 * p.h + 0.5); }
  double Up0_closed() const { return -std::sqrt(double(p.j)) * std::tgamma(0.5 * p.h + 1); }

  // Relative quadrature target of each H evaluation.
  double quad_rel_err() const { return 1e-10; }
};

inline FundamentalPair fundamental_pair(const ModeParams& p) {
  require(p.j >= 1, "fundamental_pair needs j >= 1");
  require(std::abs(p.lambda - (2 * p.h + 1) * p.j) <= 1e-12 * p.lambda, "lambda must equal (2h+1)j");
  return {p};
}

struct WronskianTable {
  std::vector<double> z, W;
  double closed = 0.0;
  double max_rel_dev = 0.0;  // max |W - closed| / closed
};

inline WronskianTable wronskian(const ModeParams& p, const std::vector<double>& zs) {
  auto fp = fundamental_pair(p);
  WronskianTable t;
  t.closed = fp.wronskian_closed();
  for (double z : zs) {
    double w = fp.wronskian(z);
    t.z.push_back(z);
    t.W.push_back(w);
    t.max_rel_dev = std::max(t.max_rel_dev, std::abs(w - t.closed) / t.closed);
  }
  return t;
}

// ---- Laplace envelopes ------------------------------------------------------

struct LaplaceEnvelope {
  double y = 0, t0 = 0, s0 = 0;
  double Fhat = 0, Uhat = 0;
  double dFhat_da = 0;             // derivative in a = 2y
  double log_F = 0, log_U = 0;     // actual solutions, for the bound flags
  bool F_bounded = false, U_bounded = false;
  double quotient = 0;             // e^{Fhat+Uhat} / W
  double C0 = 0;                   // certified constant for the quotient
  bool quotient_bounded = false;
  double t0_printed = 0, s0_printed = 0;  // roots with h^2/2 in place of h/2
};

namespace ode_detail {
inline double hlog(double h, double t) { return h > 0 ? h * std::log(t) : 0.0; }
}

inline double envelope_F(double h, double y) {
  double r = std::sqrt(0.5 * h + 0.25 * y * y);
  double t0 = 0.5 * y + r;
  return -0.5 * y * y + (-t0 * t0 + 2 * t0 * y + ode_detail::hlog(h, t0));
}

inline double envelope_U(double h, double y) {
  double r = std::sqrt(0.5 * h + 0.25 * y * y);
  double s0 = -0.5 * y + r;
  return -0.5 * y * y + (-s0 * s0 - 2 * s0 * y + ode_detail::hlog(h, s0));
}

inline LaplaceEnvelope laplace_envelope(const ModeParams& p, double z) {
  require(p.j >= 1 && p.h >= 0 && z >= 0, "laplace_envelope needs j >= 1, h >= 0, z >= 0");
  LaplaceEnvelope e;
  const double h = p.h;
  e.y = std::sqrt(double(p.j)) * z;
  double r = std::sqrt(0.5 * h + 0.25 * e.y * e.y);
  e.t0 = 0.5 * e.y + r;
  e.s0 = -0.5 * e.y + r;
  double rp = std::sqrt(0.5 * h * h + 0.25 * e.y * e.y);
  e.t0_printed = 0.5 * e.y + rp;
  e.s0_printed = -0.5 * e.y + rp;
  e.Fhat = envelope_F(h, e.y);
  e.Uhat = envelope_U(h, e.y);
  e.dFhat_da = r;  // a = 2y, so h/2 + y^2/4 = h/2 + a^2/16

  auto fp = fundamental_pair(p);
  e.log_F = fp.log_F(z);
  e.log_U = fp.log_U(z);
  const double lc = std::log(1 + std::sqrt(kPi));
  e.F_bounded = e.log_F <= lc + e.Fhat;
  e.U_bounded = e.log_U <= lc + e.Uhat;
  e.quotient = std::exp(e.Fhat + e.Uhat) / fp.wronskian_closed();
  e.C0 = 1.0 / std::sqrt(kPi);
  e.quotient_bounded = e.quotient <= e.C0 * (1 + 1e-12);
  return e;
}

// ---- j = 0 branch -------------------------------------------------------------

struct J0Pair {
  double lambda = 0;
  double first(double z) const { return lambda > 0 ? std::exp(std::sqrt(lambda) * z) : 1.0; }
  double second(double z) const { return lambda > 0 ? std::exp(-std::sqrt(lambda) * z) : z; }
  double first_d(double z) const { return lambda > 0 ? std::sqrt(lambda) * first(z) : 0.0; }
  double second_d(double z) const { return lambda > 0 ? -std::sqrt(lambda) * second(z) : 1.0; }
  // Standard Wronskian first*second' - first'*second.
  double wronskian() const { return lambda > 0 ? -2 * std::sqrt(lambda) : 1.0; }
};

inline J0Pair j0_solutions(double lambda) {
  require(lambda >= 0 && std::isfinite(lambda), "lambda must be nonnegative");
  return {lambda};
}

// ---- residual certificate -----------------------------------------------------

// Five-point f'' minus (lambda + j^2 z^2) f.
inline double ode_residual(const std::function<double(double)>& f, const ModeParams& p, double z, double step) {
  require(step > 0, "step must be positive");
  double f0 = f(z);
  double d2 = (-f(z + 2 * step) + 16 * f(z + step) - 30 * f0 + 16 * f(z - step) - f(z - 2 * step)) /
              (12 * step * step);
  return d2 - p.potential(z) * f0;
}

// ---- particular solutions -------------------------------------------------------

// Right-hand side xi with a certified majorant |xi(z)| <= Q e^{eta0 z}.
struct Rhs {
  std::function<double(double)> f;
  double Q = 0.0;
  double eta0 = 0.0;
};

namespace ode_detail {

// Log of the growing/decaying solutions and the Wronskian for either branch.
struct Branch {
  ModeParams p;
  FundamentalPair fp;
  double log_grow(double z) const { return p.j == 0 ? std::sqrt(p.lambda) * z : fp.log_F(z); }
  double log_decay(double z) const { return p.j == 0 ? -std::sqrt(p.lambda) * z : fp.log_U(z); }
  double W() const { return p.j == 0 ? 2 * std::sqrt(p.lambda) : fp.wronskian_closed(); }
  // Upper bound of log(decay) valid from r on, and its decay slope there.
  double log_decay_majorant(double r) const {
    if (p.j == 0) return -std::sqrt(p.lambda) * r;
    return std::log(1 + std::sqrt(kPi)) + envelope_U(p.h, std::sqrt(double(p.j)) * r);
  }
  double majorant_rate(double r) const {
    if (p.j == 0) return std::sqrt(p.lambda);
    double y = std::sqrt(double(p.j)) * r;
    return std::sqrt(double(p.j)) * 2 * std::sqrt(0.5 * p.h + 0.25 * y * y);
  }
};

inline Branch make_branch(const ModeParams& p) {
  if (p.j == 0) {
    require(p.lambda > 0, "the j = 0 branch needs lambda > 0");
    return {p, FundamentalPair{}};
  }
  return {p, fundamental_pair(p)};
}

}  // namespace ode_detail

struct ParticularValue {
  double u = 0.0;
  double D = 0.0, G = 0.0;  // the two variation-of-parameters integrals
  double tail_cut = 0.0;    // where the infinite integral was truncated
};

// u = -(G + D)/W with D = F(z) int_z^inf U xi r dr and G = U(z) int_1^z F xi r dr,
// the decaying-at-infinity solution of u'' - (lambda + j^2 z^2) u = z xi.
inline ParticularValue particular_solution(const ModeParams& p, const Rhs& rhs, double z, double tol = 1e-12) {
  using namespace ode_detail;
  require(z >= 0 && std::isfinite(z), "z must be finite and nonnegative");
  require(rhs.Q >= 0, "rhs majorant must be nonnegative");
  ParticularValue out;
  if (rhs.Q == 0.0) return out;
  Branch br = make_branch(p);
  const double lgz = br.log_grow(z), ldz = br.log_decay(z);
  double err = 0.0;

  auto dint = [&](double r) { return std::exp(lgz + br.log_decay(r)) * rhs.f(r) * r; };
  double D = 0.0, R = z;
  const double width = 1.0;
  for (int panel = 0;; ++panel) {
    if (panel > 4000) throw Error(ErrorKind::TailNotIntegrable, "tail bound not certified within budget");
    D += gk(dint, R, R + width, &err);
    R += width;
    double kappa = br.majorant_rate(R) - rhs.eta0;
    if (kappa <= 0) {
      if (p.j == 0) throw Error(ErrorKind::TailNotIntegrable, "rhs growth exceeds the decaying branch");
      continue;
    }
    double tail = std::exp(lgz + br.log_decay_majorant(R) + rhs.eta0 * R) * rhs.Q * (R / kappa + 1 / (kappa * kappa));
    if (tail <= tol * std::abs(D) || tail == 0.0) break;
    if (!std::isfinite(tail)) throw Error(ErrorKind::TailNotIntegrable, "tail bound overflowed");
  }
  out.tail_cut = R;

  auto gint = [&](double r) { return std::exp(ldz + br.log_grow(r)) * rhs.f(r) * r; };
  double G = 0.0;
  double a = 1.0;
  int n = std::max(1, int(std::ceil(std::abs(z - 1.0) / width)));
  double hstep = (z - 1.0) / n;
  for (int i = 0; i < n; ++i) G += gk(gint, a + i * hstep, a + (i + 1) * hstep, &err);

  out.D = D;
  out.G = G;
  out.u = -(G + D) / br.W();
  return out;
}

// Finite-difference check of u'' - (lambda + j^2 z^2) u - z xi, relative to
// |(lambda + j^2 z^2) u| + |z xi|.
struct PoissonResidual {
  double residual = 0.0, scale = 0.0, relative = 0.0, step = 0.0;
};

inline PoissonResidual poisson_residual(const ModeParams& p, const Rhs& rhs, double z) {
  PoissonResidual r;
  double q = p.potential(z);
  r.step = std::min(0.02, 0.1 / std::sqrt(std::max(q, 1e-12)));
  r.step = std::min(r.step, 0.25 * std::max(z, 1e-3));
  auto u = [&](double s) { return particular_solution(p, rhs, s, 1e-14).u; };
  double res = ode_residual(u, p, z, r.step);
  r.residual = res - z * rhs.f(z);
  r.scale = std::abs(q * u(z)) + std::abs(z * rhs.f(z));
  r.relative = r.scale > 0 ? std::abs(r.residual) / r.scale : std::abs(r.residual);
  return r;
}

struct GrowthCertificate {
  double eta = 0, eta0 = 0;
  double C = 0;            // sup |u| e^{-eta z} / Q over the window
  double fitted_rate = 0;  // least-squares slope of log|u| in z
  bool holds = false;
  std::vector<double> z, u;
};

inline GrowthCertificate growth_certificate(const ModeParams& p, const Rhs& rhs, double eta, double z_lo,
                                            double z_hi, int samples = 21) {
  require(z_hi > z_lo && samples >= 3, "growth window needs z_hi > z_lo and >= 3 samples");
  GrowthCertificate g;
  g.eta = eta;
  g.eta0 = rhs.eta0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int i = 0; i < samples; ++i) {
    double z = z_lo + (z_hi - z_lo) * i / (samples - 1);
    double u = particular_solution(p, rhs, z).u;
    g.z.push_back(z);
    g.u.push_back(u);
    if (rhs.Q > 0) g.C = std::max(g.C, std::abs(u) * std::exp(-eta * z) / rhs.Q);
    if (u != 0.0) {
      double ly = std::log(std::abs(u));
      sx += z; sy += ly; sxx += z * z; sxy += z * ly;
      ++n;
    }
  }
  g.fitted_rate = n >= 2 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : -INFINITY;
  g.holds = g.fitted_rate <= eta && eta > rhs.eta0;
  return g;
}

}  // namespace hklab

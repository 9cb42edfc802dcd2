#include <gtest/gtest.h>

#include <cmath>

#include "hklab/model_ode.hpp"

using namespace hklab;

namespace {

// Composite Simpson for int_0^30 e^{-t^2 - 2ty} t^h dt after t = s^2, which keeps
// the integrand smooth at the origin for fractional h. Moderate y only.
double brute_hermite(double h, double y) {
  const int n = 200000;
  const double b = std::sqrt(30.0), dt = b / n;
  auto f = [&](double s) {
    double t = s * s;
    return 2 * std::exp(-t * t - 2 * t * y) * std::pow(s, 2 * h + 1);
  };
  double acc = f(0) + f(b);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4 : 2) * f(i * dt);
  return acc * dt / 3;
}

}  // namespace

TEST(ModeParams, LambdaRelation) {
  auto p = mode_params(3, 0.5);
  EXPECT_EQ(p.lambda, 6.0);
  EXPECT_GE(p.lambda, p.j);
  EXPECT_THROW(mode_params(0, 1.0), Error);
  EXPECT_THROW(mode_params(1, -0.1), Error);
}

TEST(HermiteIntegral, ClosedValues) {
  EXPECT_NEAR(hermite_integral(0, 0), std::sqrt(kPi) / 2, 1e-10 * std::sqrt(kPi) / 2);
  EXPECT_NEAR(hermite_integral(1, 0), 0.5, 1e-10 * 0.5);
}

TEST(HermiteIntegral, MatchesBruteQuadrature) {
  for (double h : {0.0, 0.5, 1.0, 2.0, 3.5})
    for (double y : {-3.0, -1.0, -0.2, 0.0, 0.7, 2.0, 5.0}) {
      double ref = brute_hermite(h, y);
      EXPECT_NEAR(hermite_integral(h, y) / ref, 1.0, 1e-10) << h << " " << y;
    }
}

TEST(HermiteIntegral, LargeArgumentAsymptotics) {
  for (double y : {50.0, 200.0}) {
    double r = hermite_integral(2, y) * std::pow(2 * y, 3) / std::tgamma(3);
    EXPECT_NEAR(r, 1.0, 3.0 / (y * y));
  }
  // deep in the overflow regime the log form stays finite
  EXPECT_TRUE(std::isfinite(log_hermite_integral(1.0, -60.0)));
}

TEST(FundamentalPair, ValuesAtOrigin) {
  for (int j : {1, 2, 5})
    for (double h : {0.0, 0.5, 1.0, 2.0}) {
      auto fp = fundamental_pair(mode_params(j, h));
      EXPECT_NEAR(fp.F(0) / fp.F0_closed(), 1.0, 1e-10);
      EXPECT_NEAR(fp.U(0) / fp.U0_closed(), 1.0, 1e-10);
      EXPECT_NEAR(fp.Fp(0) / (std::sqrt(double(j)) * std::tgamma(h / 2 + 1)), 1.0, 1e-9);
      EXPECT_NEAR(fp.Up(0) / fp.Up0_closed(), 1.0, 1e-9);
    }
}

TEST(FundamentalPair, MatchesBruteQuadrature) {
  auto fp = fundamental_pair(mode_params(2, 1.0));
  for (double z : {0.3, 1.0, 1.7}) {
    double y = std::sqrt(2.0) * z;
    EXPECT_NEAR(fp.F(z) / (std::exp(-y * y / 2) * brute_hermite(1.0, -y)), 1.0, 1e-10);
    EXPECT_NEAR(fp.U(z) / (std::exp(-y * y / 2) * brute_hermite(1.0, y)), 1.0, 1e-10);
  }
}

TEST(FundamentalPair, PositiveAndMonotone) {
  auto fp = fundamental_pair(mode_params(1, 1.0));
  double pf = 0, pu = INFINITY;
  for (int i = 0; i <= 40; ++i) {
    double z = 0.25 * i;
    double f = fp.F(z), u = fp.U(z);
    EXPECT_GT(f, 0);
    EXPECT_GT(u, 0);
    EXPECT_GE(f, pf);
    EXPECT_LE(u, pu);
    pf = f;
    pu = u;
  }
}

TEST(FundamentalPair, GrowthAsymptotics) {
  auto fp = fundamental_pair(mode_params(1, 1.0));
  double z = 8.0;
  double r = fp.F(z) / (std::sqrt(kPi) * std::exp(z * z / 2) * z);
  EXPECT_NEAR(r, 1.0, 0.02);
}

TEST(FundamentalPair, SolvesTheOde) {
  auto fp = fundamental_pair(mode_params(1, 0.0));
  auto p = fp.p;
  double z = 2.0;
  double res = ode_residual([&](double s) { return fp.F(s); }, p, z, 1e-2);
  EXPECT_LE(std::abs(res) / std::abs(p.potential(z) * fp.F(z)), 1e-6);
  res = ode_residual([&](double s) { return fp.U(s); }, p, z, 1e-2);
  EXPECT_LE(std::abs(res) / std::abs(p.potential(z) * fp.U(z)), 1e-6);
}

TEST(OdeResidual, NegativeControlAndZero) {
  auto p = mode_params(1, 0.0);
  double r = ode_residual([](double s) { return std::exp(-s * s / 2); }, p, 2.0, 1e-2);
  EXPECT_NEAR(r, -2 * std::exp(-2.0), 1e-8);
  EXPECT_EQ(ode_residual([](double) { return 0.0; }, p, 1.0, 1e-2), 0.0);
}

TEST(Wronskian, ClosedValues) {
  EXPECT_NEAR(fundamental_pair(mode_params(1, 0)).wronskian_closed(), std::sqrt(kPi), 1e-15);
  EXPECT_NEAR(fundamental_pair(mode_params(4, 1)).wronskian_closed(), std::sqrt(kPi), 1e-15);
}

TEST(Wronskian, ConstantAndClosedOverGrid) {
  std::vector<double> zs;
  for (int i = 0; i <= 16; ++i) zs.push_back(0.25 * i);
  for (int j : {1, 2, 3})
    for (double h : {0.0, 0.5, 1.0, 2.0}) {
      auto fp = fundamental_pair(mode_params(j, h));
      double W = fp.wronskian_closed(), lo = INFINITY, hi = -INFINITY;
      for (double z : zs) {
        double w = fp.Fp(z) * fp.U(z) - fp.F(z) * fp.Up(z);
        lo = std::min(lo, w);
        hi = std::max(hi, w);
        EXPECT_NEAR(w / W, 1.0, 1e-6) << j << " " << h << " " << z;
      }
      EXPECT_LE(hi - lo, 1e-6 * W);
      EXPECT_LE(wronskian(mode_params(j, h), zs).max_rel_dev, 1e-6);
    }
}

TEST(Envelope, ZeroHCase) {
  auto e = laplace_envelope(mode_params(1, 0.0), 1.5);
  EXPECT_DOUBLE_EQ(e.t0, 1.5);
  EXPECT_DOUBLE_EQ(e.s0, 0.0);
  EXPECT_NEAR(e.Fhat, 1.125, 1e-14);
  EXPECT_NEAR(e.Uhat, -1.125, 1e-14);
}

TEST(Envelope, RootIdentities) {
  auto e = laplace_envelope(mode_params(1, 2.0), 1.0);
  EXPECT_NEAR(e.t0 * e.s0, 1.0, 1e-14);
  EXPECT_NEAR(e.t0 - e.s0, 1.0, 1e-14);
  for (int j : {1, 2, 3})
    for (double h : {0.5, 1.0, 2.0, 4.0})
      for (double z : {0.0, 0.5, 2.0, 5.0}) {
        auto f = laplace_envelope(mode_params(j, h), z);
        EXPECT_NEAR(f.t0 * f.s0, h / 2, 1e-12);
        EXPECT_NEAR(f.t0 - f.s0, f.y, 1e-12);
        EXPECT_NEAR(f.Fhat + f.Uhat, -h + h * std::log(h / 2), 1e-10);
      }
}

TEST(Envelope, BoundsNeverViolated) {
  for (int j : {1, 2, 3})
    for (double h : {0.0, 0.5, 1.0, 2.0})
      for (int i = 0; i <= 24; ++i) {
        auto e = laplace_envelope(mode_params(j, h), 0.25 * i);
        EXPECT_TRUE(e.F_bounded);
        EXPECT_TRUE(e.U_bounded);
        EXPECT_TRUE(e.quotient_bounded) << j << " " << h << " " << e.quotient;
      }
}

TEST(Envelope, DerivativeInA) {
  const double h = 1.0, da = 1e-4;
  for (int i = 1; i <= 20; ++i) {
    double a = 0.5 * i;
    auto Fa = [&](double aa) { return envelope_F(h, aa / 2); };
    double d = (Fa(a + da) - Fa(a - da)) / (2 * da);
    double expect = std::sqrt(h / 2 + a * a / 16);
    EXPECT_NEAR(d, expect, 1e-7);
    EXPECT_GE(d, a / 4);
  }
}

TEST(Envelope, ShiftedMonotonicity) {
  const double eta = 0.5;
  for (double h : {0.5, 2.0}) {
    double pf = -INFINITY, pu = INFINITY;
    for (int i = 0; i <= 60; ++i) {
      double z = 2 * eta + 1e-3 + 0.1 * i;
      double f = envelope_F(h, z) - eta * z, u = envelope_U(h, z) + eta * z;
      EXPECT_GT(f, pf);
      EXPECT_LT(u, pu);
      pf = f;
      pu = u;
    }
  }
}

TEST(J0, Pairs) {
  auto a = j0_solutions(4.0);
  EXPECT_DOUBLE_EQ(a.wronskian(), -4.0);
  EXPECT_NEAR(a.first(0.5), std::exp(1.0), 1e-15);
  EXPECT_NEAR(a.first_d(0.5) * a.second(0.5) - a.first(0.5) * a.second_d(0.5), 4.0, 1e-14);
  auto b = j0_solutions(0.0);
  EXPECT_DOUBLE_EQ(b.wronskian(), 1.0);
  EXPECT_EQ(b.second(3.0), 3.0);
  EXPECT_NEAR(j0_solutions(4 * kPi * kPi).second(1.0), 1.8674427317079893e-3, 1e-15);
}

TEST(ParticularSolution, ZeroSource) {
  Rhs r{[](double) { return 0.0; }, 0.0, -1.0};
  EXPECT_EQ(particular_solution(mode_params(1, 0), r, 2.0).u, 0.0);
}

TEST(ParticularSolution, ResidualCertificate) {
  Rhs r{[](double z) { return std::exp(-z); }, 1.0, -1.0};
  auto res = poisson_residual(mode_params(1, 0), r, 2.0);
  EXPECT_LE(res.relative, 1e-6);
  auto g = growth_certificate(mode_params(1, 0), r, -0.9, 2.0, 6.0, 17);
  EXPECT_TRUE(g.holds);
  EXPECT_LE(g.fitted_rate, -0.9);
}

TEST(ParticularSolution, FlatModeMatchesClosedForm) {
  // u'' - 4u = z e^{-z}: u = (a z + b) e^{-z} + c e^{-2z} with a = -1/3, b = 2/9.
  Rhs r{[](double z) { return std::exp(-z); }, 1.0, -1.0};
  auto p = flat_mode(4.0);
  auto c_at = [&](double z) {
    double u = particular_solution(p, r, z).u;
    return (u - (-z / 3 + 2.0 / 9) * std::exp(-z)) * std::exp(2 * z);
  };
  double c1 = c_at(1.5), c2 = c_at(2.5), c3 = c_at(4.0);
  EXPECT_NEAR(c1, c2, 1e-8 * (1 + std::abs(c1)));
  EXPECT_NEAR(c1, c3, 1e-7 * (1 + std::abs(c1)));
}

TEST(ParticularSolution, HermiteModeResidualAcrossCases) {
  struct Case {
    int j;
    double h;
    double z;
  };
  Rhs r{[](double z) { return 1.0 / (1 + z * z); }, 1.0, 0.0};
  for (Case c : {Case{1, 0.5, 1.2}, Case{2, 1.0, 2.0}, Case{3, 2.0, 1.5}})
    EXPECT_LE(poisson_residual(mode_params(c.j, c.h), r, c.z).relative, 1e-6) << c.j;
}

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "hklab/potentials.hpp"

using namespace hklab;

namespace {

const TorusLattice kUnit = TorusLattice::unit_square();

// Direct mode sum for one pole on the unit square torus, summed over the full
// dual lattice by brute force (no half-plane tricks, no Ewald).
double brute_green(double x, double y, double z, double x0, double y0, double z0) {
  const double A = 1.0;
  double dz = std::abs(z - z0);
  double v = -kPi / A * dz;
  const int R = static_cast<int>(std::ceil(40.0 / (kTwoPi * dz))) + 1;
  for (int m = -R; m <= R; ++m)
    for (int n = -R; n <= R; ++n) {
      if (m == 0 && n == 0) continue;
      double g = kTwoPi * std::hypot(double(m), double(n));
      v += kPi / (A * g) * std::exp(-g * dz) * std::cos(kTwoPi * (m * (x - x0) + n * (y - y0)));
    }
  return v;
}

double fd_laplacian(const PotentialSpec& s, const Point3& p, double h) {
  auto f = [&](double dx, double dy, double dz) { return eval_potential(s, {p.x + dx, p.y + dy, p.z + dz}); };
  double c = f(0, 0, 0), acc = 0;
  // fourth-order central stencil per axis
  const double w[5] = {-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12};
  for (int ax = 0; ax < 3; ++ax)
    for (int k = -2; k <= 2; ++k) {
      double d = k * h;
      double v = k == 0 ? c : f(ax == 0 ? d : 0, ax == 1 ? d : 0, ax == 2 ? d : 0);
      acc += w[k + 2] * v;
    }
  return acc / (h * h);
}

}  // namespace

TEST(ModelLinear, ValueAndDerivatives) {
  auto s = make_model_linear(1.0, 0.0);
  EXPECT_DOUBLE_EQ(eval_potential(s, {0.1, 0.2, 3.0}), 3.0);
  auto j = potential_derivatives(make_model_linear(2.5, 1.0), {0.3, 0.4, 0.7}, 4);
  EXPECT_DOUBLE_EQ(j.d(0, 0, 1), 2.5);
  EXPECT_EQ(j.d(1, 0, 0), 0.0);
  EXPECT_EQ(j.d(0, 0, 2), 0.0);
  EXPECT_EQ(j.d(2, 1, 1), 0.0);
}

TEST(EuclideanMonopole, RadialDerivativeAndRemainder) {
  auto s = make_euclidean_monopole(0.0, {{0, 0, 0}});
  auto j = potential_derivatives(s, {1, 0, 0}, 1);
  EXPECT_NEAR(j.d(1, 0, 0), -0.5, 1e-15);
  auto t = make_euclidean_monopole(0.7, {{0, 0, 0}});
  EXPECT_NEAR(near_pole_remainder(t, 0, {0.01, 0.02, -0.03}), 0.7, 1e-15);
  EXPECT_THROW(near_pole_remainder(t, 0, {1, 0, 0}), Error);
}

TEST(EuclideanMonopole, ClosedForm) {
  auto s = make_euclidean_monopole(2.0, {{0, 0, 0}, {1, 0, 0}});
  EXPECT_NEAR(eval_potential(s, {0, 0, 2}), 2.0 + 0.25 + 0.5 / std::sqrt(5.0), 1e-14);
}

TEST(CylinderGreen, MatchesBruteForceModeSum) {
  auto s = make_cylinder_green(kUnit, {{0, 0, 0}});
  for (Point3 p : {Point3{0.3, 0.3, 0.4}, Point3{0.1, 0.7, -0.25}, Point3{0.5, 0.5, 0.15}, Point3{0.9, 0.2, 1.3}})
    EXPECT_NEAR(eval_potential(s, p), brute_green(p.x, p.y, p.z, 0, 0, 0), 1e-9) << p.x << "," << p.z;
}

TEST(CylinderGreen, EnginesAgree) {
  auto s = make_cylinder_green(kUnit, {{0, 0, 0}});
  Point3 p{0.3, 0.3, 0.4};
  EXPECT_NEAR(eval_potential(s, p, Engine::Ewald), eval_potential(s, p, Engine::Modes), 1e-8);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0, 1);
  auto t = make_cylinder_green(kUnit, {{0.5, 0.5, 0}});
  int checked = 0;
  while (checked < 50) {
    double r = 0.2 + 0.2 * U(rng), th = kPi * U(rng), ph = kTwoPi * U(rng);
    Point3 q{0.5 + r * std::sin(th) * std::cos(ph), 0.5 + r * std::sin(th) * std::sin(ph), r * std::cos(th)};
    if (std::abs(q.z) < 0.1) continue;
    ++checked;
    EXPECT_NEAR(eval_potential(t, q, Engine::Ewald), eval_potential(t, q, Engine::Modes), 1e-8);
  }
}

TEST(CylinderGreen, HarmonicAwayFromPoles) {
  std::vector<Point3> poles{{0.13, 0.21, 0}, {0.58, 0.37, 0.12}, {0.31, 0.79, -0.09}};
  auto s = make_cylinder_green(TorusLattice{1.0, 0.3, 0.9}, poles, 0.5, 2.0);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(-1, 1);
  int n = 0;
  while (n < 40) {
    Point3 p{U(rng), U(rng), U(rng)};
    bool far = true;
    for (const auto& q : s.green()->poles) far = far && cyl_distance(s.green()->lattice, p, q) >= 0.25;
    if (!far) continue;
    ++n;
    EXPECT_LE(std::abs(eval_jet<2>(s, p).laplacian()), 1e-8);
    EXPECT_LE(std::abs(fd_laplacian(s, p, 2e-3)), 1e-5);
  }
}

TEST(CylinderGreen, AnalyticPartialsMatchFiniteDifferences) {
  auto s = make_cylinder_green(kUnit, {{0.2, 0.1, 0}, {0.7, 0.6, 0.5}});
  Point3 p{0.45, 0.3, 0.2};
  auto j = potential_derivatives(s, p, 4);
  const double h = 1e-3;
  auto f = [&](double dx, double dz) { return eval_potential(s, {p.x + dx, p.y, p.z + dz}); };
  double dx = (f(-2 * h, 0) - 8 * f(-h, 0) + 8 * f(h, 0) - f(2 * h, 0)) / (12 * h);
  auto mixed = [&](double k) { return (f(k, k) - f(k, -k) - f(-k, k) + f(-k, -k)) / (4 * k * k); };
  double dxz = (4 * mixed(h) - mixed(2 * h)) / 3;
  EXPECT_NEAR(j.d(1, 0, 0), dx, 1e-8);
  EXPECT_NEAR(j.d(1, 0, 1), dxz, 1e-5);
  auto d4 = [&](double H) {
    return (f(0, -2 * H) - 4 * f(0, -H) + 6 * f(0, 0) - 4 * f(0, H) + f(0, 2 * H)) / std::pow(H, 4);
  };
  // Richardson step removes the H^2 term
  double zzzz = (4 * d4(1e-2) - d4(2e-2)) / 3;
  EXPECT_NEAR(j.d(0, 0, 4), zzzz, 1e-3 * (1 + std::abs(zzzz)));
}

TEST(CylinderGreen, ZSymmetryOnRectangularTorus) {
  auto s = make_cylinder_green(TorusLattice{1.0, 0.0, 1.6}, {{0, 0, 0}});
  for (Point3 p : {Point3{0.3, 0.2, 0.35}, Point3{0.1, 1.1, 0.05}, Point3{0.45, 0.8, 2.0}})
    EXPECT_NEAR(eval_potential(s, p), eval_potential(s, {p.x, p.y, -p.z}), 1e-12);
}

TEST(CylinderGreen, PoleNormalization) {
  auto s = make_cylinder_green(kUnit, {{0.5, 0.5, 0}});
  const double dirs[3][3] = {{1, 0, 0}, {0, 0.6, 0.8}, {0.48, -0.6, 0.64}};
  for (const auto& d : dirs) {
    double prev = INFINITY;
    for (double r : {1e-2, 1e-3, 1e-4}) {
      double v = eval_potential(s, {0.5 + r * d[0], 0.5 + r * d[1], r * d[2]});
      double e = std::abs(r * (v - 0.5 / r));
      EXPECT_LT(e, prev);
      prev = e;
    }
    EXPECT_LT(prev, 1e-3);
  }
}

TEST(CylinderGreen, PoleSingularity) {
  auto s = make_cylinder_green(kUnit, {{0.5, 0.5, 0}});
  try {
    eval_potential(s, {0.5, 0.5, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PoleSingularity);
  }
}

TEST(CylinderGreen, RejectsCoincidentPoles) {
  EXPECT_THROW(make_cylinder_green(kUnit, {{0.1, 0.1, 0}, {0.1, 0.1, 1e-5}}), Error);
  EXPECT_THROW(make_cylinder_green(kUnit, {{0.0, 0.1, 0}, {1.0, 0.1, 0}}), Error);
}

TEST(CylinderGreen, RemainderBoundedNearPole) {
  auto s = make_cylinder_green(kUnit, {{0, 0, 0}});
  double a = near_pole_remainder(s, 0, {0.6e-2, 0.8e-2, 0});
  double b = near_pole_remainder(s, 0, {0.6e-3, 0.8e-3, 0});
  EXPECT_LT(std::abs(a - b), 0.05);
  EXPECT_THROW(near_pole_remainder(s, 0, {0.4, 0, 0}), Error);
}

TEST(AsymptoticSlope, SinglePoleUnitArea) {
  auto s = make_cylinder_green(kUnit, {{0, 0, 0}});
  auto lo = fit_asymptotic_slope(s, -4, -1, -1);
  auto hi = fit_asymptotic_slope(s, 1, 4, 1);
  EXPECT_NEAR(lo.k, kPi, 1e-6);
  EXPECT_NEAR(hi.k, -kPi, 1e-6);
}

TEST(AsymptoticSlope, IdentityForArbitraryPlacement) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(0, 1);
  TorusLattice L{1.3, 0.2, 0.8};
  for (int m0 = 1; m0 <= 4; ++m0) {
    std::vector<CylinderPoint> poles;
    for (int i = 0; i < m0; ++i) {
      Vec2 q = L.from_frac(U(rng), U(rng));
      poles.push_back({q.x, q.y, 0.4 * (U(rng) - 0.5)});
    }
    auto s = make_cylinder_green(L, poles, 0.0, 0.0);
    auto lo = fit_asymptotic_slope(s, -4.5, -1.5, -1);
    auto hi = fit_asymptotic_slope(s, 1.5, 4.5, 1);
    EXPECT_NEAR(lo.k - hi.k, kTwoPi * m0 / L.area(), 1e-6) << m0;
    auto exact = green_asymptote(*s.green(), -1);
    EXPECT_NEAR(lo.beta_offset, exact.offset, 1e-6);
  }
}

TEST(AsymptoticSlope, ResidualRateIsFirstEigenvalueRoot) {
  auto s = make_cylinder_green(kUnit, {{0.13, 0.21, 0}});
  auto hi = fit_asymptotic_slope(s, 1.5, 3.5, 1);
  EXPECT_NEAR(hi.residual_rate / kTwoPi, 1.0, 0.01);
}

TEST(AsymptoticSlope, WindowChecks) {
  auto s = make_cylinder_green(kUnit, {{0, 0, 0}});
  EXPECT_THROW(fit_asymptotic_slope(s, 1, 4, 1, 3), Error);
  EXPECT_THROW(fit_asymptotic_slope(s, 0.5, 4, 1), Error);
}

TEST(SmoothStep, DerivativeBounds) {
  double m1 = 0, m2 = 0;
  for (int i = 0; i <= 100000; ++i) {
    double t = i / 100000.0;
    m1 = std::max(m1, std::abs(SmoothStep::d1(t)));
    m2 = std::max(m2, std::abs(SmoothStep::d2(t)));
  }
  EXPECT_LE(m1, 2.0);
  EXPECT_LE(m2, 8.0);
  EXPECT_EQ(SmoothStep::value(0), 0.0);
  EXPECT_EQ(SmoothStep::value(1), 1.0);
  EXPECT_NEAR(SmoothStep::value(0.5), 0.5, 1e-15);
}

TEST(Glue, IdenticalSpecsGiveZeroResidual) {
  auto m = std::make_shared<const PotentialSpec>(make_model_linear(1.0, 3.0));
  auto g = glue_potentials(m, m, 2.0);
  EXPECT_EQ(glue_residual(g), 0.0);
  EXPECT_DOUBLE_EQ(eval_potential(g, {0.1, 0.1, 2.4}), 5.4);
}

TEST(Glue, SlopeMismatchRejected) {
  auto a = std::make_shared<const PotentialSpec>(make_model_linear(1.0));
  auto b = std::make_shared<const PotentialSpec>(make_model_linear(2.0));
  try {
    glue_potentials(a, b, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SlopeMismatch);
  }
}

TEST(Glue, RemainderUnchangedOutsideDamageZone) {
  auto neck = std::make_shared<const PotentialSpec>(make_cylinder_green(kUnit, {{0.5, 0.5, 0}}, 0, 10));
  auto as = green_asymptote(*neck->green(), -1);
  auto model = std::make_shared<const PotentialSpec>(make_model_linear(as.slope, as.offset));
  auto g = glue_potentials(neck, model, -3.0);
  Point3 p{0.51, 0.5, 0.01};
  EXPECT_EQ(near_pole_remainder(g, 0, p), near_pole_remainder(*neck, 0, p));
}

TEST(Glue, ResidualDecaysWithDistanceFromPoles) {
  // Neck = periodic Green's function below a single pole, model = its linear asymptote.
  auto neck = std::make_shared<const PotentialSpec>(make_cylinder_green(kUnit, {{0.3, 0.6, 0}}, 0, 20));
  auto as = green_asymptote(*neck->green(), -1);
  auto model = std::make_shared<const PotentialSpec>(make_model_linear(as.slope, as.offset));
  std::vector<double> zs, logs;
  for (double T : {-1.5, -2.0, -2.5}) {
    // damage zone on [T, T+1] lies below the pole
    auto g = glue_potentials(neck, model, T - 1.0);
    zs.push_back(T);
    logs.push_back(std::log(glue_residual(g, 11, 6)));
  }
  EXPECT_GT(logs[0], logs[1]);
  EXPECT_GT(logs[1], logs[2]);
  EXPECT_GT(least_squares(zs, logs).slope, 0.0);
}

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numeric>

#include "hklab/neck_planner.hpp"

using namespace hklab;

namespace {

GluingConfig config(int bm, int bp, std::vector<int> w, double beta) {
  GluingConfig c;
  c.b_minus = bm;
  c.b_plus = bp;
  c.weights = std::move(w);
  c.beta = beta;
  return c;
}

// All compositions of n into at most `parts` positive parts.
void compositions(int n, int parts, std::vector<int>& cur, const std::function<void(const std::vector<int>&)>& f) {
  if (n == 0) {
    if (!cur.empty()) f(cur);
    return;
  }
  if (static_cast<int>(cur.size()) == parts) return;
  for (int x = 1; x <= n; ++x) {
    cur.push_back(x);
    compositions(n - x, parts, cur, f);
    cur.pop_back();
  }
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Validation;
}

}  // namespace

TEST(SlopeRecurrence, DegreeExamples) {
  EXPECT_EQ(degree_sequence(config(1, 2, {1, 2}, 100)), (std::vector<int>{1, 0, -2}));
  EXPECT_EQ(degree_sequence(config(4, 3, {7}, 100)), (std::vector<int>{4, -3}));
}

TEST(SlopeRecurrence, ExhaustiveTelescoping) {
  int count = 0;
  for (int bm = 1; bm <= 9; ++bm)
    for (int bp = 1; bp <= 9; ++bp) {
      std::vector<int> cur;
      compositions(bm + bp, 4, cur, [&](const std::vector<int>& w) {
        auto s = slope_recurrence(bm, bp, w);
        ++count;
        ASSERT_EQ(s.degrees.size(), w.size() + 1);
        EXPECT_EQ(s.degrees.front(), bm);
        EXPECT_EQ(s.degrees.back(), -bp);
        EXPECT_EQ(s.degrees.front() - s.degrees.back(), std::accumulate(w.begin(), w.end(), 0));
        for (std::size_t j = 0; j < w.size(); ++j) {
          EXPECT_EQ(s.degrees[j] - s.degrees[j + 1], w[j]);
          // slope between clusters is 2 d_j in units of pi/A
          EXPECT_EQ(s.left[j], Rational(2 * s.degrees[j]));
          EXPECT_EQ(s.right[j], Rational(2 * s.degrees[j + 1]));
        }
        EXPECT_EQ(s.left.front(), Rational(2 * bm));
        EXPECT_EQ(s.right.back(), Rational(-2 * bp));
      });
    }
  EXPECT_GT(count, 10000);
}

TEST(SlopeRecurrence, InfeasibleWeights) {
  EXPECT_EQ(kind_of([] { slope_recurrence(2, 3, {2, 2}); }), ErrorKind::InfeasibleWeights);
  EXPECT_EQ(kind_of([] { plan_neck(config(1, 1, {3}, 100)); }), ErrorKind::InfeasibleWeights);
  EXPECT_THROW(slope_recurrence(0, 3, {3}), Error);
  EXPECT_THROW(slope_recurrence(1, 1, {2, 0}), Error);
}

TEST(Topology, AllPairs) {
  for (int bm = 1; bm <= 9; ++bm)
    for (int bp = 1; bp <= 9; ++bp) {
      auto t = topology_invariants(bm, bp);
      EXPECT_EQ(t.chi, 24);
      EXPECT_EQ(t.signature, -16);
      EXPECT_EQ(t.b1, 0);
      EXPECT_EQ(t.b2_plus, 3);
      EXPECT_EQ(t.b2_minus, 19);
      EXPECT_EQ(t.chi_end_minus, 12 - bm);
      EXPECT_EQ(t.b1_nil_minus, 2);
    }
  auto t = topology_invariants(3, 5);
  EXPECT_EQ(t.chi_end_minus, 9);
  EXPECT_EQ(t.chi_neck, 8);
  EXPECT_EQ(t.chi_end_plus, 7);
}

TEST(PlanNeck, SymmetricSingularPoint) {
  auto p = plan_neck(config(7, 7, {14}, 100));
  ASSERT_EQ(p.singular_points.size(), 1u);
  EXPECT_NEAR(p.singular_points[0], 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(p.T_minus, p.T_plus);
}

TEST(PlanNeck, GluingHeight) {
  auto p = plan_neck(config(1, 2, {3}, 100));
  EXPECT_EQ(p.beta_plus, 0.0);
  EXPECT_NEAR(p.T_plus, 100 / (8 * kPi), 1e-12);
  EXPECT_NEAR(p.T_plus, 3.97887, 1e-5);
}

TEST(PlanNeck, CanonicalOffsetsAndSlopes) {
  auto p = plan_neck(config(2, 3, {2, 1, 2}, 200));
  double sz = 0;
  for (const auto& q : p.poles) sz += q.z;
  EXPECT_NEAR(p.beta_minus, -kPi / p.A * sz, 1e-12);
  EXPECT_NEAR(p.beta_plus, kPi / p.A * sz, 1e-12);
  EXPECT_EQ(p.poles.size(), 5u);
  // averaged potential has slope 2 pi d_j / A between clusters
  const auto& d = p.slopes.degrees;
  for (std::size_t j = 0; j <= p.clusters.size(); ++j) {
    double lo = j == 0 ? -p.T_minus : p.clusters[j - 1].z, hi = j == p.clusters.size() ? p.T_plus : p.clusters[j].z;
    double a = lo + 0.25 * (hi - lo), b = lo + 0.75 * (hi - lo);
    EXPECT_NEAR((p.vbar(b) - p.vbar(a)) / (b - a), kTwoPi * d[j] / p.A, 1e-9);
  }
  // neck potential fiber average agrees with the exact average away from clusters
  EXPECT_NEAR(fiber_average(*p.neck, p.cfg.lattice, -p.T_minus + 0.5), p.vbar(-p.T_minus + 0.5), 1e-9);
  // singular points increase and lie in (0, 1)
  for (std::size_t j = 0; j < p.singular_points.size(); ++j) {
    EXPECT_GT(p.singular_points[j], 0.0);
    EXPECT_LT(p.singular_points[j], 1.0);
    if (j) EXPECT_GT(p.singular_points[j], p.singular_points[j - 1]);
  }
}

TEST(PlanNeck, SmallBetaRejected) {
  EXPECT_EQ(kind_of([] { plan_neck(config(1, 1, {2}, 0.05)); }), ErrorKind::NonpositiveT);
  EXPECT_EQ(kind_of([] { plan_neck(config(4, 4, {4, 4}, 1.0)); }), ErrorKind::NonpositiveT);
}

TEST(FiberDiameters, Exponents) {
  auto e = fiber_diameter_exponents(config(1, 1, {2}, 100), 0.3, {100, 200, 400, 800, 1600});
  EXPECT_NEAR(e.nil, -1.0, 0.05);
  EXPECT_NEAR(e.circle, -2.0, 0.05);
}

TEST(FiberDiameters, RegularSetUniform) {
  auto p = plan_neck(config(2, 3, {5}, 400));
  double lo = INFINITY, hi = 0;
  for (double t = 0.2; t <= 0.8 + 1e-9; t += 0.05) {
    if (std::abs(t - p.singular_points[0]) < 0.05) continue;
    double r = fiber_diameters(p, t).nil_ratio;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  EXPECT_LE(hi / lo, 2.0);
}

TEST(Regions, Examples) {
  auto p = plan_neck(config(1, 1, {2}, 100));
  double sb = std::sqrt(p.cfg.beta);
  auto x = point_at_gh_distance(p, 0, 0.5 / sb);
  EXPECT_EQ(classify_region(p, {Piece::Neck, x}).region, Region::I);
  EXPECT_NEAR(gh_distance(p, 0, x), 0.5 / sb, 1e-9);

  auto m = plan_neck(config(7, 7, {14}, 100));
  const auto& cl = m.clusters[0];
  CylinderPoint mid{0.0, 0.0, 0.5};
  EXPECT_LE(std::abs(mid.z), cl.w * cl.T0);
  auto info = classify_region(m, {Piece::Neck, mid});
  EXPECT_GE(info.at.dmin, m.iota0_prime * std::sqrt(m.cfg.beta) / 2);
  EXPECT_EQ(info.region, Region::III);

  EXPECT_EQ(classify_region(p, {Piece::Neck, {0.3, 0.3, -p.T_minus / 2}}).region, Region::IVm);
  EXPECT_EQ(classify_region(p, {Piece::Neck, {0.3, 0.3, p.T_plus / 2}}).region, Region::IVp);
  EXPECT_EQ(classify_region(p, {Piece::EndMinus, {0, 0, 0.5}}).region, Region::VIm);
  EXPECT_EQ(classify_region(p, {Piece::EndPlus, {0, 0, 5.0}}).region, Region::Vp);
}

TEST(Regions, TotalAndDeterministic) {
  auto p = plan_neck(config(2, 1, {1, 2}, 150));
  for (int i = 0; i <= 60; ++i) {
    double z = -p.T_minus - 3 + i * (p.T_minus + p.T_plus + 6) / 60;
    TaggedPoint t{Piece::Neck, {0.37, 0.61, z}};
    auto a = classify_region(p, t), b = classify_region(p, t);
    EXPECT_EQ(a.region, b.region);
    if (a.region == Region::Gap) {
      EXPECT_NE(a.lo, Region::Gap);
      EXPECT_NE(a.hi, Region::Gap);
      EXPECT_GE(a.s, 0.0);
      EXPECT_LE(a.s, 1.0);
    }
    double w = weight_value(p, WeightParams{}, t);
    EXPECT_GT(w, 0.0);
    EXPECT_TRUE(std::isfinite(w));
  }
}

TEST(Weights, RegionFormulas) {
  auto p = plan_neck(config(1, 1, {2}, 100));
  WeightParams w;
  w.k = 0;
  w.alpha = 0.0;
  w.mu = w.nu = 0.25;
  Locus l;
  l.cluster = 0;
  l.dmin = 0.01;
  double e = std::exp(2 * w.delta * p.T_minus);
  EXPECT_NEAR(region_weight(p, w, Region::I, l) / (e * std::pow(100.0, -3.0 / 8)), 1.0, 1e-13);
  WeightParams v;
  EXPECT_NEAR(region_weight(p, v, Region::III, l) / (e * std::pow(100.0, (v.nu + v.k + v.alpha) / 2)), 1.0, 1e-13);
}

TEST(Weights, GapInterpolatesLogLinearly) {
  auto p = plan_neck(config(1, 1, {2}, 100));
  WeightParams w;
  RegionInfo r;
  r.region = Region::Gap;
  r.lo = Region::I;
  r.hi = Region::III;
  r.s = 0.25;
  r.at.cluster = 0;
  double a = region_weight(p, w, Region::I, r.at), b = region_weight(p, w, Region::III, r.at);
  EXPECT_NEAR(weight_at(p, w, r), std::pow(a, 0.75) * std::pow(b, 0.25), 1e-12 * b);
}

TEST(Weights, ParameterValidation) {
  WeightParams w;
  w.mu = 0.6;
  w.nu = 0.5;
  EXPECT_THROW(validate(w), Error);
  WeightParams d;
  d.delta = 0;
  EXPECT_THROW(validate(d), Error);
}

TEST(Weights, InterfaceRatiosBoundedInBeta) {
  for (double beta : {1e2, 1e3, 1e4}) {
    auto p = plan_neck(config(1, 1, {2}, beta));
    for (const auto& r : interface_ratios(p, WeightParams{})) {
      EXPECT_GE(r.ratio, 1e-2) << r.name << " " << beta;
      EXPECT_LE(r.ratio, 1e2) << r.name << " " << beta;
    }
  }
}

TEST(GlueCheck, ResidualAndDeviationShrink) {
  GluingConfig c = config(1, 1, {2}, 6);
  c.lattice = TorusLattice{2.0, 0.0, 1.0};
  auto g = glue_check(c, {6, 8, 10}, 11, 6);
  EXPECT_TRUE(g.residual_decreasing);
  EXPECT_TRUE(g.q_decreasing);
  EXPECT_LT(g.residual_log_slope, 0.0);
  EXPECT_LE(g.rows[1].q_deviation, 1e-3);
}

#include <gtest/gtest.h>

#include <random>

#include "nodeflow/verifier.hpp"

using nodeflow::IntervalSet;
using nodeflow::Span;

namespace {

IntervalSet random_set(std::mt19937_64& rng, bool dyadic) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Span> spans;
  const int n = 1 + static_cast<int>(u(rng) * 4);
  for (int k = 0; k < n; ++k) {
    double a = u(rng), b = u(rng);
    if (dyadic) {
      a = std::round(a * 64) / 64;
      b = std::round(b * 64) / 64;
    }
    if (a > b) std::swap(a, b);
    spans.push_back({a, b});
  }
  return IntervalSet::make(spans);
}

}  // namespace

TEST(IntervalSet, MakeNormalizes) {
  EXPECT_EQ(IntervalSet::make({{0, 0.2}, {0.1, 0.5}}).spans(), (std::vector<Span>{{0, 0.5}}));
  EXPECT_TRUE(IntervalSet::make({{0, 0}}).is_empty());
  EXPECT_EQ(IntervalSet::make({{0.6, 1}, {0, 0.2}}).spans(),
            (std::vector<Span>{{0, 0.2}, {0.6, 1}}));
  EXPECT_THROW(IntervalSet::make({{-0.1, 0.5}}), std::invalid_argument);
  EXPECT_THROW(IntervalSet::make({{0.5, 1.2}}), std::invalid_argument);
  EXPECT_THROW(IntervalSet::make({{0.7, 0.2}}), std::invalid_argument);
}

TEST(IntervalSet, Union) {
  const auto a = IntervalSet::make({{0, 0.2}});
  const auto b = IntervalSet::make({{0.6, 1}});
  EXPECT_EQ(unite(a, b).spans(), (std::vector<Span>{{0, 0.2}, {0.6, 1}}));
  EXPECT_TRUE(unite(IntervalSet::make({{0, 0.5}}), IntervalSet::make({{0.5, 1}})).is_full());
  EXPECT_EQ(unite(IntervalSet::empty(), b), b);
}

TEST(IntervalSet, IntersectMeasure) {
  EXPECT_EQ(intersect_measure(IntervalSet::make({{0, 0.2}}), IntervalSet::make({{0.6, 1}})), 0.0);
  EXPECT_NEAR(intersect_measure(IntervalSet::make({{0.8, 1}}), IntervalSet::make({{0.6, 1}})),
              0.2, 1e-15);
  const auto x = IntervalSet::make({{0.1, 0.3}, {0.5, 0.9}});
  EXPECT_DOUBLE_EQ(intersect_measure(x, x), x.measure());
}

TEST(IntervalSet, MeasureAndFull) {
  EXPECT_EQ(IntervalSet::full().measure(), 1.0);
  EXPECT_DOUBLE_EQ(IntervalSet::make({{0, 0.2}}).measure(), 0.2);
  EXPECT_DOUBLE_EQ(IntervalSet::make({{0, 0.2}, {0.6, 1}}).measure(), 0.6);
  EXPECT_TRUE(IntervalSet::make({{0, 1}}).is_full());
  EXPECT_TRUE(IntervalSet::make({{0, 0.5}, {0.5, 1}}).is_full());
  EXPECT_FALSE(IntervalSet::make({{0, 0.999}}).is_full());
}

TEST(IntervalSet, SubtractAndContains) {
  const auto a = IntervalSet::make({{0.1, 0.9}});
  const auto d = subtract(a, IntervalSet::make({{0.3, 0.4}, {0.8, 1}}));
  EXPECT_EQ(d.spans(), (std::vector<Span>{{0.1, 0.3}, {0.4, 0.8}}));
  EXPECT_TRUE(d.contains(0.3));
  EXPECT_FALSE(d.contains(0.35));
  EXPECT_FALSE(d.contains(0.85));
}

// Dyadic endpoints make every sum exact, so the identity holds with ==.
TEST(IntervalSet, InclusionExclusionExactOnDyadicSets) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 2000; ++t) {
    const auto a = random_set(rng, true), b = random_set(rng, true);
    const auto u = unite(a, b);
    EXPECT_EQ(u.measure(), a.measure() + b.measure() - intersect_measure(a, b));
    EXPECT_EQ(unite(a, b), unite(b, a));
    EXPECT_EQ(unite(a, a), a);
    EXPECT_GE(u.measure(), std::max(a.measure(), b.measure()));
    EXPECT_EQ(intersect(a, b).measure(), intersect_measure(a, b));
  }
}

TEST(IntervalSet, UnionIsAssociative) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 500; ++t) {
    const auto a = random_set(rng, false), b = random_set(rng, false), c = random_set(rng, false);
    EXPECT_EQ(unite(unite(a, b), c), unite(a, unite(b, c)));
  }
}

TEST(IntervalSet, MeasureMatchesSampling) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const auto s = random_set(rng, false);
    constexpr int kPoints = 1000000;
    int hits = 0;
    for (int k = 0; k < kPoints; ++k) hits += s.contains(u(rng));
    EXPECT_NEAR(static_cast<double>(hits) / kPoints, s.measure(), 3e-3) << t;
  }
}

TEST(Rectangle, AreaExamples) {
  const auto half = IntervalSet::make({{0, 0.5}});
  EXPECT_NEAR(nodeflow::rectangle_area(205.5, 300, 1600, half), 252.0, 1e-9);
  EXPECT_NEAR(1600 - nodeflow::rectangle_area(205.5, 300, 1600, half), 1348.0, 1e-9);
  EXPECT_EQ(nodeflow::rectangle_area(300, 300, 1600, half), 0.0);
  EXPECT_EQ(nodeflow::rectangle_area(0, 0, 1600, half), 0.0);

  const std::vector<nodeflow::Rectangle> disjoint{{IntervalSet::make({{0, 0.2}}), 0.5},
                                                  {IntervalSet::make({{0.6, 1}}), 0.25}};
  EXPECT_NEAR(nodeflow::union_area(disjoint, 1000), 0.2 * 0.5 * 1000 + 0.4 * 0.75 * 1000, 1e-9);
}

// Inclusion–exclusion, lane sweep and point sampling of the unit square.
TEST(Rectangle, UnionAreaAgreesWithSweepAndSampling) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<nodeflow::Rectangle> rects;
    const int n = 1 + static_cast<int>(u(rng) * 5);
    for (int r = 0; r < n; ++r) rects.push_back({random_set(rng, false), u(rng)});
    const double base = 100 + 1900 * u(rng);
    const double ie = nodeflow::union_area(rects, base);
    EXPECT_NEAR(ie, nodeflow::union_area_sweep(rects, base), 1e-9 * base);
    constexpr int kPoints = 200000;
    int hits = 0;
    for (int k = 0; k < kPoints; ++k) {
      const double y = u(rng), x = u(rng);
      for (const auto& q : rects)
        if (q.eta.contains(y) && x >= q.progress) {
          ++hits;
          break;
        }
    }
    EXPECT_NEAR(static_cast<double>(hits) / kPoints * base, ie, 0.01 * base) << t;
  }
}

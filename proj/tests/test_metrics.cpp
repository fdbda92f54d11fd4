#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace mcels;

TEST(L1Distance, Examples) {
  const Series x = Matrix::from_rows({{0, 0}});
  EXPECT_EQ(l1_distance(x, x), 0.0);
  EXPECT_EQ(l1_distance(x, Matrix::from_rows({{1, -2}})), 3.0);
  EXPECT_THROW(l1_distance(x, Series(2, 2)), DataError);
}

TEST(L1Distance, MetricPropertiesAndOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const Series a = test::random_series(7, 3, rng), b = test::random_series(7, 3, rng), c = test::random_series(7, 3, rng);
    EXPECT_NEAR(l1_distance(a, b), test::brute_l1(a, b), 1e-9);
    EXPECT_EQ(l1_distance(a, b), l1_distance(b, a));
    EXPECT_LE(l1_distance(a, c), l1_distance(a, b) + l1_distance(b, c) + 1e-12);
  }
}

TEST(Sparsity, Examples) {
  const Series x = Matrix::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(sparsity(x, x), 1.0);
  EXPECT_EQ(sparsity(x, Matrix::from_rows({{0, 0}, {0, 0}})), 0.0);
  EXPECT_EQ(sparsity(x, Matrix::from_rows({{1, 0}, {3, 0}})), 0.5);
  EXPECT_THROW(sparsity(x, Series(3, 2)), DataError);
}

TEST(Sparsity, OptionalVariants) {
  const Series x = Matrix::from_rows({{1, 2}, {3, 4}});
  const Series y = Matrix::from_rows({{1 + 1e-12, 0}, {3, 0}});
  EXPECT_EQ(sparsity(x, y), 0.25);
  EXPECT_EQ(sparsity(x, y, {1e-9, false}), 0.5);
  // Dividing by T alone: 3 changes over T=2.
  EXPECT_EQ(sparsity(x, y, {0.0, true}), 1.0 - 3.0 / 2.0);
}

TEST(Sparsity, MatchesCountingOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Series a = test::random_series(9, 2, rng);
    Series b = a;
    for (double& v: b.values()) {
      if (rng.below(3) == 0) { v += rng.normal(); }
    }
    EXPECT_NEAR(sparsity(a, b), test::brute_sparsity(a, b), 1e-9);
    const double s = sparsity(a, b);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(Validity, UniformClassifierTieBreak) {
  Fcn net = Fcn::init(FcnConfig{{2}, {3}, 1, 2, 0});
  for (auto t: net.parameters().tensors()) { std::fill(t.begin(), t.end(), 0.0); }
  const Series x(4, 1, 0.3);
  const auto v0 = validity(net, x, 0);
  const auto v1 = validity(net, x, 1);
  EXPECT_DOUBLE_EQ(v0.target_probability, 0.5);
  EXPECT_TRUE(v0.valid);
  EXPECT_DOUBLE_EQ(v1.target_probability, 0.5);
  EXPECT_FALSE(v1.valid);
}

TEST(Validity, MatchesIndependentForward) {
  Rng rng(3);
  const Fcn net = test::random_tiny_fcn(2, 3, 7);
  for (int trial = 0; trial < 50; ++trial) {
    const Series x = test::random_series(8, 2, rng);
    const std::size_t target = rng.below(3);
    const auto v = validity(net, x, target);
    const auto p = net.forward(x);
    EXPECT_EQ(v.target_probability, p[target]);
    EXPECT_EQ(v.valid, argmax(p.probs) == target);
    EXPECT_GE(v.target_probability, 0.0);
    EXPECT_LE(v.target_probability, 1.0);
  }
}

TEST(Validity, NunClassifiedAsTarget) {
  Rng rng(4);
  const Fcn net = test::random_tiny_fcn(2, 2, 9);
  const Series nun = test::random_series(8, 2, rng);
  const auto p = net.forward(nun);
  const std::size_t z = p.top_class();
  const auto v = validity(net, nun, z);
  EXPECT_EQ(v.target_probability, p[z]);
  EXPECT_TRUE(v.valid);
}

TEST(Aggregate, Examples) {
  const InstanceMetrics one{0.8, true, 2.5, 0.75};
  const auto single = aggregate(std::vector<InstanceMetrics>{one});
  EXPECT_EQ(single.count, 1u);
  EXPECT_EQ(single.mean_target_probability, 0.8);
  EXPECT_EQ(single.mean_l1, 2.5);
  EXPECT_EQ(single.mean_sparsity, 0.75);
  EXPECT_EQ(single.validity_rate, 1.0);

  const auto two = aggregate(std::vector<InstanceMetrics>{{0.2, false, 1.0, 0.0}, {0.6, true, 3.0, 1.0}});
  EXPECT_EQ(two.mean_sparsity, 0.5);
  EXPECT_EQ(two.validity_rate, 0.5);
  EXPECT_THROW(aggregate(std::vector<InstanceMetrics>{}), DataError);
}

TEST(Aggregate, MatchesFoldOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 150; ++trial) {
    std::vector<InstanceMetrics> ms(1 + rng.below(40));
    for (auto& m: ms) { m = {rng.uniform01(), rng.below(2) == 1, 10.0 * rng.uniform01(), rng.uniform01()}; }
    struct Acc {
      double p = 0, l1 = 0, s = 0, v = 0;
    };
    const Acc acc = std::accumulate(ms.begin(), ms.end(), Acc{}, [](Acc a, const InstanceMetrics& m) {
      return Acc{a.p + m.target_probability, a.l1 + m.l1_distance, a.s + m.sparsity, a.v + (m.valid ? 1.0 : 0.0)};
    });
    const double n = static_cast<double>(ms.size());
    const auto r = aggregate(ms);
    EXPECT_NEAR(r.mean_target_probability, acc.p / n, 1e-9);
    EXPECT_NEAR(r.mean_l1, acc.l1 / n, 1e-9);
    EXPECT_NEAR(r.mean_sparsity, acc.s / n, 1e-9);
    EXPECT_NEAR(r.validity_rate, acc.v / n, 1e-9);
  }
}

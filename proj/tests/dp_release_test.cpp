// Copyright 2026 The dpsumm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <vector>

#include "dpsumm/dp_release.hpp"
#include "dpsumm/rff.hpp"
#include "gtest/gtest.h"

namespace dpsumm {
namespace {

TEST(QuantGridTest, SymmetricGrid) {
  const QuantGrid g(0.25);
  EXPECT_EQ(g.size(), 9u);
  const auto v = g.values();
  for (std::size_t k = 0; k < v.size(); ++k) EXPECT_DOUBLE_EQ(v[k], -v[v.size() - 1 - k]);
  EXPECT_EQ(v[4], 0.0);
  EXPECT_THROW(QuantGrid(0.3), Error);
  EXPECT_THROW(QuantGrid(0.0), Error);
}

TEST(QuantizeScalarTest, GridPointsAreFixed) {
  const QuantGrid g(0.5);
  Rng rng(1);
  for (double x : {-1.0, -0.5, 0.0, 0.5, 1.0})
    for (int i = 0; i < 100; ++i) EXPECT_EQ(QuantizeScalar(x, g, rng), x);
}

TEST(QuantizeScalarTest, HandEvaluatedProbabilities) {
  // eta = 0.5, x = 0.3: k = 2, lower 0.0 with probability 0.4.
  const QuantGrid g(0.5);
  Rng rng(2);
  const int n = 100000;
  int lower = 0;
  for (int i = 0; i < n; ++i) {
    const double v = QuantizeScalar(0.3, g, rng);
    ASSERT_TRUE(v == 0.0 || v == 0.5);
    lower += v == 0.0 ? 1 : 0;
  }
  EXPECT_NEAR(static_cast<double>(lower) / n, 0.4, 0.02);
}

TEST(QuantizeScalarTest, Unbiased) {
  const QuantGrid g(0.5);
  Rng rng(3);
  const int n = 1000000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += QuantizeScalar(0.3, g, rng);
  EXPECT_NEAR(sum / n, 0.3, 0.002);
}

TEST(QuantizeScalarTest, OutOfRangeIsAnError) {
  Rng rng(1);
  EXPECT_THROW(QuantizeScalar(1.01, QuantGrid(0.5), rng), Error);
  EXPECT_THROW(QuantizeScalar(-1.5, QuantGrid(0.5), rng), Error);
}

TEST(QuantizeDatasetTest, ZeroHashesStayZero) {
  Rng rng(1);
  const std::vector<HashVector> h(5, HashVector(4, 0.0));
  const auto dq = QuantizeDataset(h, QuantGrid(0.5), rng);
  EXPECT_EQ(dq.q, 5u);
  for (double v : dq.values) EXPECT_EQ(v, 0.0);
}

TEST(QuantizeDatasetTest, OutOfRangeCoordinateIsAnError) {
  Rng rng(1);
  const std::vector<HashVector> h{{0.0, 2.0}};  // sqrt(2/2) = 1 is the bound
  EXPECT_THROW(QuantizeDataset(h, QuantGrid(0.5), rng), Error);
}

TEST(QuantizeDatasetTest, DeterministicGivenSeed) {
  const auto b = RffBasis::Sample(0.1, 8, 2, 3);
  const auto h = HashDataset(b, Dataset(2, {{0.1, 0.2}, {1.0, -1.0}, {3.0, 0.0}}));
  Rng r1(5), r2(5);
  EXPECT_EQ(QuantizeDataset(h, QuantGrid(0.25), r1).values,
            QuantizeDataset(h, QuantGrid(0.25), r2).values);
}

TEST(QuantizeDatasetTest, ColumnMeansStayWithinEta) {
  const std::size_t d = 8, q = 200;
  const double eta = 0.125;
  int ok = 0;
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    const auto b = RffBasis::Sample(0.1, d, 2, trial);
    Rng pr(100 + trial);
    std::vector<HashVector> h;
    for (std::size_t j = 0; j < q; ++j) h.push_back(b.Hash({3 * pr.Normal(), 3 * pr.Normal()}));
    Rng qr(trial);
    const auto dq = QuantizeDataset(h, QuantGrid(eta), qr);
    const auto mean = MeanHash(h, d);
    bool all = true;
    for (std::size_t i = 0; i < d; ++i)
      all = all && std::abs(std::sqrt(2.0 / d) * dq.ColumnSum(i) / q - mean[i]) <= eta;
    ok += all ? 1 : 0;
  }
  EXPECT_EQ(ok, 50);
}

QuantizedDataset SmallDq() {
  QuantizedDataset dq{3, 2, {1.0, 0.0, 0.5, -0.5, 1.0, -1.0}};
  return dq;
}

TEST(ScoreTest, UniformStartScoresAreAbsoluteSums) {
  const auto dq = SmallDq();
  const auto p = ProductDistribution::Uniform(2, QuantGrid(0.5));
  EXPECT_DOUBLE_EQ(Score(p, dq, 0), 2.5);
  EXPECT_DOUBLE_EQ(Score(p, dq, 1), 1.5);
  QuantizedDataset zeros{2, 2, {0.0, 0.0, 0.0, 0.0}};
  EXPECT_EQ(Score(p, zeros, 1), 0.0);
}

TEST(ScoreTest, MatchesDirectSummation) {
  Rng rng(8);
  const QuantGrid grid(0.5);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = ProductDistribution::Uniform(3, grid);
    for (std::size_t i = 0; i < 3; ++i) {
      auto m = p.mutable_marginal(i);
      double total = 0;
      for (auto& v : m) total += (v = rng.Uniform() + 0.01);
      for (auto& v : m) v /= total;
    }
    QuantizedDataset dq{4, 3, {}};
    for (int k = 0; k < 12; ++k) dq.values.push_back(grid.value(rng.Below(grid.size())));
    for (std::size_t i = 0; i < 3; ++i) {
      double w = 0, target = 0;
      for (std::size_t k = 0; k < grid.size(); ++k) w += grid.value(k) * p.marginal(i)[k];
      for (std::size_t r = 0; r < 4; ++r) target += dq.values[r * 3 + i];
      EXPECT_NEAR(Score(p, dq, i), std::abs(4.0 * w - target), 1e-12);
    }
  }
}

TEST(SelectCoordinateTest, EqualScoresAreUniform) {
  Rng rng(9);
  const std::vector<double> scores(4, 1.7);
  std::vector<int> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[SelectCoordinate(scores, 2.0, rng)];
  double chi2 = 0;
  for (int c : counts) chi2 += (c - n / 4.0) * (c - n / 4.0) / (n / 4.0);
  EXPECT_LT(chi2, 16.27);  // 99.9% quantile, 3 degrees of freedom
}

TEST(SelectCoordinateTest, ZeroEpsilonIsUniform) {
  Rng rng(10);
  const std::vector<double> scores{0.0, 100.0};
  int first = 0;
  for (int i = 0; i < 100000; ++i) first += SelectCoordinate(scores, 0.0, rng) == 0 ? 1 : 0;
  EXPECT_NEAR(first / 100000.0, 0.5, 0.01);
}

TEST(SelectCoordinateTest, SoftmaxProbabilities) {
  Rng rng(11);
  const double eps = 0.7;
  const std::vector<double> scores{0.0, std::log(3.0) / eps};
  int second = 0;
  for (int i = 0; i < 100000; ++i) second += SelectCoordinate(scores, eps, rng) == 1 ? 1 : 0;
  EXPECT_NEAR(second / 100000.0, 0.75, 0.01);
}

TEST(SelectCoordinateTest, LargeScoresDoNotOverflow) {
  Rng rng(12);
  const std::vector<double> scores{1e6, 1e6 + 1.0};
  const auto i = SelectCoordinate(scores, 1000.0, rng);
  EXPECT_EQ(i, 1u);
}

TEST(MwStepTest, ExactMeasurementLeavesMarginalUnchanged) {
  const auto dq = SmallDq();
  const auto p = ProductDistribution::Uniform(2, QuantGrid(0.5));
  MarginalMwem m(p, dq);
  m.Apply(0, m.W(0));
  EXPECT_EQ(m.distribution(), p);
}

TEST(MwStepTest, OnlyTheSelectedMarginalChanges) {
  Rng rng(13);
  const auto dq = SmallDq();
  auto dist = ProductDistribution::Uniform(2, QuantGrid(0.5));
  for (int t = 0; t < 30; ++t) {
    const auto r = MwStep(dist, dq, 0.5, rng);
    const std::size_t other = 1 - r.coordinate;
    const auto a = dist.marginal(other), b = r.dist.marginal(other);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    EXPECT_TRUE(r.dist.IsValid());
    dist = r.dist;
  }
  EXPECT_EQ(dist.storage_size(), 2u * 5u);
}

// Explicit MWEM over the joint distribution on S^d, driven by the
// coordinates and measurements the product form produced.
TEST(MwStepTest, ProductFormMatchesJointDistribution) {
  const QuantGrid grid(1.0);  // S = {-1, 0, 1}
  const std::size_t d = 2, levels = 3;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    Rng data_rng(trial);
    QuantizedDataset dq{5, d, {}};
    for (int k = 0; k < 10; ++k) dq.values.push_back(grid.value(data_rng.Below(levels)));
    std::vector<double> joint(levels * levels, 1.0 / 9.0);
    auto joint_w = [&](std::size_t i) {
      double w = 0;
      for (std::size_t a = 0; a < levels; ++a)
        for (std::size_t b = 0; b < levels; ++b)
          w += joint[a * levels + b] * grid.value(i == 0 ? a : b);
      return 5.0 * w;
    };
    MarginalMwem product(ProductDistribution::Uniform(d, grid), dq);
    Rng rng(1000 + trial);
    for (int t = 0; t < 10; ++t) {
      const auto scores = product.Scores();
      for (std::size_t i = 0; i < d; ++i)
        EXPECT_NEAR(scores[i], std::abs(joint_w(i) - dq.ColumnSum(i)), 1e-9);
      const auto step = product.Advance(0.8, rng);
      const double w = joint_w(step.coordinate);
      double total = 0;
      for (std::size_t a = 0; a < levels; ++a) {
        for (std::size_t b = 0; b < levels; ++b) {
          const double s = grid.value(step.coordinate == 0 ? a : b);
          joint[a * levels + b] *= std::exp(s * (step.measurement - w) / (2.0 * 5.0));
          total += joint[a * levels + b];
        }
      }
      for (auto& v : joint) v /= total;
      for (std::size_t a = 0; a < levels; ++a) {
        double m0 = 0, m1 = 0;
        for (std::size_t b = 0; b < levels; ++b) {
          m0 += joint[a * levels + b];
          m1 += joint[b * levels + a];
        }
        EXPECT_NEAR(product.distribution().marginal(0)[a], m0, 1e-9);
        EXPECT_NEAR(product.distribution().marginal(1)[a], m1, 1e-9);
      }
    }
  }
}

TEST(MwStepTest, HugeMeasurementsStayFinite) {
  const auto dq = SmallDq();
  MarginalMwem m(ProductDistribution::Uniform(2, QuantGrid(0.5)), dq);
  m.Apply(0, 1e9);
  m.Apply(1, -1e9);
  EXPECT_TRUE(m.distribution().IsValid());
  EXPECT_NEAR(m.means()[0], 1.0, 1e-12);
  EXPECT_NEAR(m.means()[1], -1.0, 1e-12);
}

std::vector<HashVector> RandomHashes(std::size_t d, std::size_t q, std::uint64_t seed) {
  const auto b = RffBasis::Sample(0.1, d, 3, seed);
  Rng rng(seed + 1);
  std::vector<HashVector> h;
  for (std::size_t j = 0; j < q; ++j)
    h.push_back(b.Hash({2 * rng.Normal(), 2 * rng.Normal(), 2 * rng.Normal()}));
  return h;
}

double MaxError(const HashVector& a, const HashVector& b) {
  double e = 0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

TEST(H2Test, ReportsTwoEventsPerIteration) {
  const auto h = RandomHashes(8, 20, 1);
  const auto r = H2(h, {0.5, 7, 0.25, 3});
  std::uint64_t n = 0;
  for (const auto& e : r.events) {
    EXPECT_EQ(e.epsilon, 0.5);
    n += e.count;
  }
  EXPECT_EQ(n, 14u);
  const auto one = H2(h, {0.5, 7, 0.25, 3, 1});
  ASSERT_EQ(one.events.size(), 1u);
  EXPECT_EQ(one.events[0].count, 7u);
}

TEST(H2Test, OutputWithinHashBound) {
  const auto h = RandomHashes(16, 30, 2);
  const auto r = H2(h, {0.05, 50, 0.125, 4});
  for (double v : r.value) EXPECT_LE(std::abs(v), std::sqrt(2.0 / 16.0) + 1e-15);
}

TEST(H2Test, DeterministicGivenSeed) {
  const auto h = RandomHashes(8, 40, 3);
  EXPECT_EQ(H2(h, {1.0, 20, 0.25, 9}).value, H2(h, {1.0, 20, 0.25, 9}).value);
}

TEST(H2Test, EmptyInputIsAnError) {
  EXPECT_THROW(H2({}, {1.0, 5, 0.5, 1}), Error);
  const auto h = RandomHashes(4, 3, 1);
  EXPECT_THROW(H2(h, {0.0, 5, 0.5, 1}), Error);
  EXPECT_THROW(H2(h, {1.0, 0, 0.5, 1}), Error);
}

TEST(H2Test, NoiseFreeRunMeetsNoiseFreeBound) {
  const std::size_t d = 8, q = 400;
  const auto h = RandomHashes(d, q, 5);
  const auto r = H2NoiseOff(h, d * d, 0.125, 6);
  EXPECT_TRUE(r.events.empty());
  EXPECT_LE(MaxError(r.value, MeanHash(h, d)), H2NoiseFreeBound(d, q, 0.125));
}

TEST(H2Test, ErrorBoundFrozenValues) {
  EXPECT_NEAR(H2ErrorBound(8, 500, 0.125, 1.0), 1.2365788682162155, 1e-12);
  EXPECT_NEAR(H2NoiseFreeBound(8, 500, 0.125), 1.2137050112577374, 1e-12);
}

TEST(H2Test, WarmStartChangesTheStartingState) {
  const auto h = RandomHashes(8, 40, 7);
  const auto first = H2(h, {1.0, 30, 0.25, 1});
  const auto warm = H2(h, {1.0, 1, 0.25, 2}, &first.final_state);
  const auto cold = H2(h, {1.0, 1, 0.25, 2});
  EXPECT_NE(warm.value, cold.value);
  const auto wrong = ProductDistribution::Uniform(4, QuantGrid(0.25));
  EXPECT_THROW(H2(h, {1.0, 1, 0.25, 2}, &wrong), Error);
}

}  // namespace
}  // namespace dpsumm

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

#include <cmath>
#include <limits>
#include <vector>

#include "dpsumm/baselines.hpp"
#include "dpsumm/protocol.hpp"
#include "gtest/gtest.h"

namespace dpsumm {
namespace {

SynthShiftInstance SmallInstance(std::uint64_t seed, std::size_t per_owner = 30,
                                 std::size_t owners = 3, std::size_t dim = 3) {
  SynthShiftSpec spec;
  spec.dim = dim;
  for (std::size_t k = 0; k < owners; ++k) {
    const double mean = static_cast<double>(k);
    spec.owners.push_back({{per_owner, GaussianSpec::Isotropic(dim, mean, 1.0)}});
  }
  spec.validation_size = 40;
  spec.validation = GaussianSpec::Isotropic(dim, 2.0, 1.0);
  spec.seed = seed;
  return SynthShift(spec);
}

Dataset SeedSet(std::size_t dim, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return SampleGaussian(GaussianSpec::Isotropic(dim, 0.0, 4.0), n, rng);
}

ProtocolConfig SmallConfig(std::size_t p, std::uint64_t seed) {
  ProtocolConfig c;
  c.p = p;
  c.d = 32;
  c.gamma = 0.1;
  c.seed = seed;
  c.practical.t_init = 40;
  c.auction = {0.5, 2};
  return c;
}

TEST(ProtocolTest, SingleOwnerSinglePoint) {
  const Dataset only(2, {{0.5, -1.0}});
  const Dataset validation(2, {{0.0, 0.0}, {1.0, 1.0}});
  auto c = SmallConfig(1, 3);
  c.auction = {1.0, 1};
  const auto r = RunProtocol({{4, only, {0}}}, validation, Dataset(2), c);
  ASSERT_EQ(r.summary.size(), 1u);
  EXPECT_EQ(r.summary[0], only[0]);
  EXPECT_EQ(r.summary_keys[0], (PointKey{4, 0}));
  EXPECT_EQ(r.status, ProtocolStatus::kComplete);
  EXPECT_EQ(r.accessed_total, 1u);
}

TEST(ProtocolTest, NoiseFreeRunMatchesHashedGreedy) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto inst = SmallInstance(seed);
    const Dataset seeds = SeedSet(3, 2, seed + 100);
    auto c = SmallConfig(12, seed);
    c.release = ReleaseMode::kExact;
    const auto r = RunProtocol(inst.owners, inst.validation, seeds, c);
    const auto g = GreedyHashed(inst.owners, inst.validation, 12, ProtocolBasis(c, 3), seeds);
    EXPECT_EQ(r.summary_keys, g.keys) << "seed " << seed;
  }
}

TEST(ProtocolTest, LiteralBidFormAlsoMatchesItsGreedy) {
  const auto inst = SmallInstance(4);
  const Dataset seeds = SeedSet(3, 2, 9);
  auto c = SmallConfig(8, 4);
  c.release = ReleaseMode::kExact;
  c.bid_form = BidForm::kLiteral;
  const auto r = RunProtocol(inst.owners, inst.validation, seeds, c);
  const auto g = GreedyHashed(inst.owners, inst.validation, 8, ProtocolBasis(c, 3), seeds,
                              BidForm::kLiteral);
  EXPECT_EQ(r.summary_keys, g.keys);
}

TEST(ProtocolTest, Deterministic) {
  const auto inst = SmallInstance(5);
  const Dataset seeds = SeedSet(3, 2, 6);
  const auto c = SmallConfig(6, 77);
  const auto a = RunProtocol(inst.owners, inst.validation, seeds, c);
  const auto b = RunProtocol(inst.owners, inst.validation, seeds, c);
  EXPECT_EQ(a.summary_keys, b.summary_keys);
  EXPECT_EQ(a.accessed_total, b.accessed_total);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].winner_bid, b.trace[i].winner_bid);
    EXPECT_EQ(a.trace[i].mmd_sq, b.trace[i].mmd_sq);
  }
  auto other = c;
  other.seed = 78;
  const auto d = RunProtocol(inst.owners, inst.validation, seeds, other);
  EXPECT_NE(a.trace.back().winner_bid, d.trace.back().winner_bid);
}

TEST(ProtocolTest, PracticalEpochBudgets) {
  ProtocolConfig c;
  c.p = 100;
  EXPECT_EQ(PracticalInitialIterations(c), 1656u);
  EXPECT_EQ(ValidationParams(c).iterations, 1656u);
  EXPECT_EQ(ValidationParams(c).epsilon, 0.01);
  EXPECT_EQ(EpochParams(1, c).iterations, 1656u);
  EXPECT_EQ(EpochParams(1, c).epsilon, 0.05);
  EXPECT_EQ(EpochParams(2, c).iterations, 5u);
  EXPECT_NEAR(EpochParams(7, c).epsilon, 0.01 / std::sqrt(500.0), 1e-15);
  EXPECT_THROW(EpochParams(0, c), Error);
}

TEST(ProtocolTest, TheoryEpochBudgets) {
  const auto s = MakeSchedule(1.0, 1e-3, 5, 8, 3, 64);
  const auto c = ProtocolConfig::Theory(s, 0.1, 1);
  EXPECT_EQ(EpochParams(3, c).iterations, 64u);
  EXPECT_EQ(EpochParams(3, c).epsilon, s.EpsEpoch(3));
  EXPECT_EQ(ValidationParams(c).epsilon, s.eps_v);
  EXPECT_EQ(c.auction.tau, s.tau);
}

TEST(ProtocolTest, TheoryRegimeRunsWithinTarget) {
  const auto inst = SmallInstance(6, 10);
  const auto s = MakeSchedule(1.0, 1e-3, 4, 8, 3, 64);
  const auto c = ProtocolConfig::Theory(s, 0.1, 2);
  const auto r = RunProtocol(inst.owners, inst.validation, SeedSet(3, 1, 1), c);
  ASSERT_EQ(r.summary.size(), 4u);
  for (const auto& l : r.owner_ledgers) EXPECT_LE(l.Compose(1e-3).epsilon, 1.0);
}

TEST(ProtocolTest, VerificationTolerance) {
  const auto basis = RffBasis::Sample(0.1, 16, 2, 1);
  const DataPoint x{0.3, -0.2};
  const HashVector g_ell(16, 0.01), g_tilde(16, 0.02);
  const double v = BidValue(BidForm::kDerived, g_ell, g_tilde, basis.Hash(x), 2, 1);
  EXPECT_TRUE(VerifyBid(x, {1, 0, v}, g_ell, g_tilde, basis, 2, 1));
  EXPECT_TRUE(VerifyBid(x, {1, 0, v + 0.9e-6}, g_ell, g_tilde, basis, 2, 1));
  EXPECT_FALSE(VerifyBid(x, {1, 0, v + 2e-6}, g_ell, g_tilde, basis, 2, 1));
  EXPECT_FALSE(VerifyBid({0.8, -0.2}, {1, 0, v}, g_ell, g_tilde, basis, 2, 1));
  EXPECT_FALSE(VerifyBid({0.3}, {1, 0, v}, g_ell, g_tilde, basis, 2, 1));
  EXPECT_FALSE(VerifyBid({std::numeric_limits<double>::infinity(), 0.0}, {1, 0, v}, g_ell,
                         g_tilde, basis, 2, 1));
}

TEST(ProtocolTest, TamperingOwnerIsRemoved) {
  const auto inst = SmallInstance(7);
  auto c = SmallConfig(10, 7);
  c.release = ReleaseMode::kExact;
  c.auction = {0.5, 1};  // every bidder is requested, so the cheater is caught each round
  const auto basis = ProtocolBasis(c, 3);
  std::vector<OwnerSim> owners;
  for (const auto& s : inst.owners) owners.emplace_back(s.owner_id, s.dataset, basis);
  owners[1].set_tamper([](const DataPoint& x) {
    DataPoint y = x;
    y[0] += 5.0;
    return y;
  });
  const auto r = RunProtocol(owners, inst.validation, Dataset(3), c, basis);
  ASSERT_EQ(r.removed_owners, std::vector<int>{owners[1].id()});
  EXPECT_EQ(r.summary.size(), 10u);
  for (const auto& k : r.summary_keys) EXPECT_NE(k.owner_id, owners[1].id());
  std::size_t failures = 0;
  for (const auto& e : r.trace) failures += e.verification_failures;
  EXPECT_EQ(failures, c.max_verification_failures);
}

TEST(ProtocolTest, LedgerRecordsEveryRelease) {
  const auto inst = SmallInstance(8);
  const std::size_t p = 5, seeds = 2;
  auto c = SmallConfig(p, 8);
  const auto r = RunProtocol(inst.owners, inst.validation, SeedSet(3, seeds, 1), c);
  ASSERT_EQ(r.summary.size(), p);
  const std::uint64_t per_iter = 2;
  const std::uint64_t validation = per_iter * c.practical.t_init;
  const std::uint64_t first = per_iter * c.practical.t_init;
  const std::uint64_t later = per_iter * c.practical.t_subs * (p - 1);
  const std::uint64_t auction = std::min<std::uint64_t>(p, c.auction.tau);
  EXPECT_EQ(r.validation_ledger.event_count(), validation);
  EXPECT_EQ(r.summary_ledger.event_count(), later);
  ASSERT_EQ(r.owner_ledgers.size(), inst.owners.size());
  for (const auto& l : r.owner_ledgers) {
    EXPECT_EQ(l.event_count(), validation + first + later + auction);
    EXPECT_EQ(l.CountTagged("auction-round"), auction);
  }
  const std::vector<PrivacyEvent> expected{{EpochParams(2, c).epsilon, 0.0, "x", later}};
  EXPECT_NEAR(r.summary_ledger.Compose(1e-4).epsilon, Compose(expected, 1e-4).epsilon, 1e-12);
}

TEST(ProtocolTest, EmptySeedSetSkipsFirstRelease) {
  const auto inst = SmallInstance(9);
  auto c = SmallConfig(3, 9);
  const auto r = RunProtocol(inst.owners, inst.validation, Dataset(3), c);
  const std::uint64_t per_iter = 2;
  EXPECT_EQ(r.summary_ledger.event_count(), per_iter * c.practical.t_subs * 2);
  EXPECT_EQ(r.owner_ledgers[0].event_count(),
            per_iter * c.practical.t_init + per_iter * c.practical.t_subs * 2 + 2);
}

TEST(ProtocolTest, AccessAtMostOwnersPerRound) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const auto inst = SmallInstance(seed);
    auto c = SmallConfig(10, seed);
    const auto r = RunProtocol(inst.owners, inst.validation, SeedSet(3, 1, seed), c);
    EXPECT_LE(r.accessed_total, 10u * inst.owners.size());
    EXPECT_GE(r.accessed_total, 10u);
    std::size_t prev = 0;
    for (const auto& e : r.trace) {
      EXPECT_GE(e.accessed_total, prev);
      prev = e.accessed_total;
    }
  }
}

TEST(ProtocolTest, TraceMmdMatchesDirectComputation) {
  const auto inst = SmallInstance(10);
  auto c = SmallConfig(6, 10);
  const auto r = RunProtocol(inst.owners, inst.validation, SeedSet(3, 2, 3), c);
  Dataset so_far(3);
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    so_far.push_back(r.summary[i]);
    EXPECT_NEAR(r.trace[i].mmd_sq, MmdSquared(so_far, inst.validation, {c.gamma}), 1e-10);
  }
}

TEST(ProtocolTest, OwnersExhausted) {
  const auto inst = SmallInstance(11, 2);
  auto c = SmallConfig(10, 11);
  const auto r = RunProtocol(inst.owners, inst.validation, Dataset(3), c);
  EXPECT_EQ(r.status, ProtocolStatus::kOwnersExhausted);
  EXPECT_EQ(r.summary.size(), 6u);
  EXPECT_EQ(r.accessed_total, 6u);
  EXPECT_EQ(r.exhausted_owners.size(), 3u);
}

TEST(ProtocolTest, ExhaustedOwnerStopsWhileOthersContinue) {
  auto inst = SmallInstance(15, 20);
  inst.owners[0].dataset = Dataset(3, {inst.owners[0].dataset[0]});
  auto c = SmallConfig(8, 15);
  c.auction = {0.5, 1};
  const auto r = RunProtocol(inst.owners, inst.validation, Dataset(3), c);
  EXPECT_EQ(r.status, ProtocolStatus::kComplete);
  EXPECT_EQ(r.summary.size(), 8u);
  EXPECT_EQ(r.exhausted_owners, std::vector<int>{inst.owners[0].owner_id});
}

TEST(ProtocolTest, RejectsInconsistentInputs) {
  const auto inst = SmallInstance(12);
  auto c = SmallConfig(3, 1);
  EXPECT_THROW(RunProtocol(inst.owners, Dataset(3), Dataset(3), c), Error);
  EXPECT_THROW(RunProtocol(inst.owners, inst.validation, Dataset(2, {{1.0, 2.0}}), c), Error);
  c.events_per_iter = 3;
  EXPECT_THROW(RunProtocol(inst.owners, inst.validation, Dataset(3), c), Error);
}

TEST(ProtocolTest, TraceDiagnostics) {
  const auto inst = SmallInstance(14, 20);
  auto c = SmallConfig(6, 14);
  c.d = 2048;
  c.release = ReleaseMode::kExact;
  c.track_gain_shortfall = true;
  const auto r = RunProtocol(inst.owners, inst.validation, SeedSet(3, 2, 2), c);
  for (const auto& e : r.trace) {
    EXPECT_GE(e.gain_shortfall, 0.0);
    EXPECT_LT(e.kernel_mean_error, 0.05);
  }
  EXPECT_NEAR(ParsimonyFactor(r, inst.validation.size()),
              static_cast<double>(r.accessed_total + 40) / (6.0 + 40.0), 1e-15);
  c.track_gain_shortfall = false;
  const auto off = RunProtocol(inst.owners, inst.validation, SeedSet(3, 2, 2), c);
  EXPECT_TRUE(std::isnan(off.trace[0].gain_shortfall));
  EXPECT_EQ(off.summary_keys, r.summary_keys);
}

// With a wide hash the derived bid ranks an owner's points almost exactly
// as their true marginal gains.
TEST(ProtocolTest, BidArgmaxTracksExactGain) {
  const auto inst = SmallInstance(13, 40);
  const KernelParams kp{0.1};
  const auto basis = RffBasis::Sample(0.1, 4096, 3, 5);
  const Dataset summary = SeedSet(3, 4, 21);
  const auto g_tilde = MeanHash(HashDataset(basis, inst.validation), 4096);
  const auto g_ell = MeanHash(HashDataset(basis, summary), 4096);
  IncrementalObjective obj(inst.validation, kp);
  for (const auto& x : summary) obj.Add(x);
  for (const auto& split : inst.owners) {
    const OwnerSim owner(split.owner_id, split.dataset, basis);
    const auto bid = owner.ComputeBid(g_ell, g_tilde, 5, summary.size(), BidForm::kDerived);
    ASSERT_TRUE(bid.has_value());
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& x : split.dataset) {
      lo = std::min(lo, obj.Gain(x));
      hi = std::max(hi, obj.Gain(x));
    }
    const double chosen = obj.Gain(split.dataset[bid->point_id]);
    EXPECT_GE(chosen - lo, 0.95 * (hi - lo)) << "owner " << split.owner_id;
  }
}

}  // namespace
}  // namespace dpsumm

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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dpsumm/auction.hpp"
#include "dpsumm/core_data.hpp"
#include "dpsumm/dp_release.hpp"
#include "dpsumm/error.hpp"
#include "dpsumm/kernel.hpp"
#include "dpsumm/privacy.hpp"
#include "dpsumm/random.hpp"
#include "dpsumm/rff.hpp"

namespace dpsumm {

/// kDerived: g~.h - q/(q+1) g_l.h, an affine image of the hashed marginal
/// gain of J. kLiteral: g_l.h - g~.h * l/(l+1), which weights the terms by
/// epoch index instead.
enum class BidForm { kDerived, kLiteral };

/// How the curator's broadcasts are produced. kPrivate runs the DP release;
/// kMwemNoiseOff runs it with noise disabled; kExact broadcasts the exact
/// hashed means. Only kPrivate is privacy accounted.
enum class ReleaseMode { kPrivate, kMwemNoiseOff, kExact };

/// kTheory: T and every epsilon come from a Schedule. kPractical: a long
/// first release followed by short per-epoch releases with fixed budgets.
enum class EpsilonRegime { kTheory, kPractical };

struct PracticalParams {
  std::size_t t_init = 0;  // 0 selects floor(d^1.5)
  std::size_t t_subs = 5;
  double eps_v = 0.01;
  double eps_first = 0.05;
  double eps_subs_numerator = 0.01;  // eps_l = numerator / sqrt(p * t_subs) for l > 1
};

struct ProtocolConfig {
  std::size_t p = 1;
  std::size_t d = 140;
  double gamma = 0.1;
  std::uint64_t seed = 0;
  double eta = 0.0;  // 0 selects 1/d
  EpsilonRegime regime = EpsilonRegime::kPractical;
  Schedule schedule;  // read in the theory regime only
  PracticalParams practical;
  AuctionParams auction;
  double delta_tilde = 0.01;  // for ledger reports
  BidForm bid_form = BidForm::kDerived;
  ReleaseMode release = ReleaseMode::kPrivate;
  bool warm_start = false;
  int events_per_iter = 2;
  std::size_t max_verification_failures = 3;
  // Scores every remaining candidate each epoch to fill
  // EpochRecord::gain_shortfall. Costs a full greedy step per epoch.
  bool track_gain_shortfall = false;

  double QuantStep() const { return eta > 0.0 ? eta : 1.0 / static_cast<double>(d); }

  // Theory-regime configuration driven entirely by `s`.
  static ProtocolConfig Theory(const Schedule& s, double gamma, std::uint64_t seed) {
    ProtocolConfig c;
    c.p = s.p;
    c.d = s.d;
    c.gamma = gamma;
    c.seed = seed;
    c.eta = s.eta;
    c.regime = EpsilonRegime::kTheory;
    c.schedule = s;
    c.auction = {s.eps_auc, s.tau};
    c.delta_tilde = s.delta_tilde;
    return c;
  }

  void Validate() const {
    Require(p >= 1, "summary size p must be at least 1");
    Require(d >= 1, "hash dimension must be at least 1");
    Require(gamma > 0.0, "gamma must be positive");
    Require(events_per_iter == 1 || events_per_iter == 2, "events_per_iter must be 1 or 2");
    QuantGrid grid(QuantStep());
    auction.Validate();
    if (regime == EpsilonRegime::kTheory) {
      Require(schedule.T >= 1 && schedule.eps_v > 0.0, "theory regime needs a schedule");
    } else {
      Require(practical.t_subs >= 1, "t_subs must be positive");
      Require(practical.eps_v > 0.0 && practical.eps_first > 0.0 &&
                  practical.eps_subs_numerator > 0.0,
              "practical budgets must be positive");
    }
  }
};

struct EpochBudget {
  double epsilon = 0.0;
  std::size_t iterations = 0;
};

inline std::size_t PracticalInitialIterations(const ProtocolConfig& c) {
  if (c.practical.t_init > 0) return c.practical.t_init;
  return static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(c.d), 1.5)));
}

/// Budget of the summary release in epoch `ell` (1-based).
inline EpochBudget EpochParams(std::size_t ell, const ProtocolConfig& c) {
  Require(ell >= 1, "epochs are numbered from 1");
  if (c.regime == EpsilonRegime::kTheory) return {c.schedule.EpsEpoch(ell), c.schedule.T};
  if (ell == 1) return {c.practical.eps_first, PracticalInitialIterations(c)};
  return {c.practical.eps_subs_numerator /
              std::sqrt(static_cast<double>(c.p) * static_cast<double>(c.practical.t_subs)),
          c.practical.t_subs};
}

/// Budget of the one-time validation release.
inline EpochBudget ValidationParams(const ProtocolConfig& c) {
  if (c.regime == EpsilonRegime::kTheory) return {c.schedule.eps_v, c.schedule.T};
  return {c.practical.eps_v, PracticalInitialIterations(c)};
}

inline double BidValue(BidForm form, std::span<const double> g_ell,
                       std::span<const double> g_tilde, std::span<const double> h,
                       std::size_t ell, std::size_t q) {
  if (form == BidForm::kDerived) {
    const double coef = static_cast<double>(q) / static_cast<double>(q + 1);
    return Dot(g_tilde, h) - coef * Dot(g_ell, h);
  }
  const double coef = static_cast<double>(ell) / static_cast<double>(ell + 1);
  return Dot(g_ell, h) - Dot(g_tilde, h) * coef;
}

/// A simulated data owner holding its points and their hashes.
class OwnerSim {
 public:
  using Tamper = std::function<DataPoint(const DataPoint&)>;

  OwnerSim(int owner_id, Dataset data, const RffBasis& basis)
      : owner_id_(owner_id),
        data_(std::move(data)),
        hashes_(HashDataset(basis, data_)),
        sent_(data_.size(), false),
        unsent_(data_.size()) {}

  int id() const { return owner_id_; }
  const Dataset& data() const { return data_; }
  const std::vector<HashVector>& hashes() const { return hashes_; }
  bool is_sent(std::size_t j) const { return sent_[j]; }
  std::size_t unsent() const { return unsent_; }

  void MarkSent(std::size_t j) {
    if (!sent_[j]) {
      sent_[j] = true;
      --unsent_;
    }
  }

  // Test hook applied to every delivered point.
  void set_tamper(Tamper tamper) { tamper_ = std::move(tamper); }

  DataPoint Deliver(std::size_t j) const { return tamper_ ? tamper_(data_[j]) : data_[j]; }

  /// Best unsent point by bid value; ties go to the lowest point id. Owners
  /// with nothing left abstain.
  std::optional<Bid> ComputeBid(std::span<const double> g_ell, std::span<const double> g_tilde,
                                std::size_t ell, std::size_t q, BidForm form) const {
    std::optional<Bid> best;
    for (std::size_t j = 0; j < hashes_.size(); ++j) {
      if (sent_[j]) continue;
      const double v = BidValue(form, g_ell, g_tilde, hashes_[j], ell, q);
      if (!best || v > best->value) best = Bid{owner_id_, j, v};
    }
    return best;
  }

 private:
  int owner_id_;
  Dataset data_;
  std::vector<HashVector> hashes_;
  std::vector<bool> sent_;
  std::size_t unsent_;
  Tamper tamper_;
};

inline std::optional<Bid> OwnerBid(const OwnerSim& owner, std::span<const double> g_ell,
                                   std::span<const double> g_tilde, std::size_t ell,
                                   std::size_t q, BidForm form = BidForm::kDerived) {
  return owner.ComputeBid(g_ell, g_tilde, ell, q, form);
}

/// Recomputes the bid from the delivered point; accepts iff it is within
/// 1e-6 * max(1, |claimed|) of the claimed value.
inline bool VerifyBid(const DataPoint& point, const Bid& claimed, std::span<const double> g_ell,
                      std::span<const double> g_tilde, const RffBasis& basis, std::size_t ell,
                      std::size_t q, BidForm form = BidForm::kDerived) {
  if (point.size() != basis.n()) return false;
  for (double v : point)
    if (!std::isfinite(v)) return false;
  const double recomputed = BidValue(form, g_ell, g_tilde, basis.Hash(point), ell, q);
  return std::abs(recomputed - claimed.value) <= 1e-6 * std::max(1.0, std::abs(claimed.value));
}

struct EpochRecord {
  std::size_t epoch = 0;
  int winner_owner = 0;
  std::size_t winner_point = 0;
  double winner_bid = 0.0;
  double exact_gain = 0.0;  // J(D_s + x) - J(D_s) with the true kernel
  double mmd_sq = 0.0;      // MMD^2 of the output summary so far against D_v
  // Largest error of the winner's two broadcast-based kernel means (against
  // D_v and against the current summary) relative to the exact means.
  double kernel_mean_error = 0.0;
  // Best exact gain among remaining candidates minus the winner's exact
  // gain; NaN unless ProtocolConfig::track_gain_shortfall is set.
  double gain_shortfall = std::numeric_limits<double>::quiet_NaN();
  std::size_t accessed_total = 0;
  std::vector<Bid> ranked;
  std::vector<PointKey> requested;
  std::size_t verification_failures = 0;
  double owner_epsilon = 0.0;  // largest composed epsilon over owner channels
  std::uint64_t owner_events = 0;
};

enum class ProtocolStatus { kComplete, kOwnersExhausted };

struct ProtocolResult {
  Dataset summary;  // excludes the seed set
  std::vector<PointKey> summary_keys;
  std::vector<EpochRecord> trace;
  PrivacyLedger validation_ledger{"validation"};
  // Releases of summaries that already hold owner points; the first
  // release sees only the public seed set and is not recorded here.
  PrivacyLedger summary_ledger{"summary"};
  std::vector<PrivacyLedger> owner_ledgers;
  std::size_t accessed_total = 0;
  ProtocolStatus status = ProtocolStatus::kComplete;
  std::vector<int> removed_owners;
  // Owners whose points were all transmitted before the run ended; they
  // stop bidding and the others continue.
  std::vector<int> exhausted_owners;
  nlohmann::json basis;
};

namespace detail {

inline constexpr std::uint64_t kBasisStream = 1;
inline constexpr std::uint64_t kValidationStream = 2;
inline constexpr std::uint64_t kAuctionStream = 3;
inline constexpr std::uint64_t kEpochStreamBase = 1000;

struct Release {
  HashVector value;
  std::vector<PrivacyEvent> events;
};

inline Release Broadcast(const ProtocolConfig& c, std::span<const HashVector> hashes,
                         const EpochBudget& budget, std::uint64_t seed,
                         std::optional<ProductDistribution>* warm) {
  if (c.release == ReleaseMode::kExact) return {MeanHash(hashes, c.d), {}};
  const ProductDistribution* start = warm && warm->has_value() ? &**warm : nullptr;
  H2Result r = c.release == ReleaseMode::kPrivate
                   ? H2(hashes, {budget.epsilon, budget.iterations, c.QuantStep(), seed,
                                 c.events_per_iter},
                        start)
                   : H2NoiseOff(hashes, budget.iterations, c.QuantStep(), seed, start);
  if (warm) *warm = std::move(r.final_state);
  return {std::move(r.value), std::move(r.events)};
}

inline void Record(PrivacyLedger& ledger, const std::vector<PrivacyEvent>& events,
                   const std::string& release) {
  for (auto e : events) {
    e.tag = release + "/" + e.tag;
    ledger.Append(std::move(e));
  }
}

}  // namespace detail

/// Runs the full summarization protocol over simulated owners.
///
/// Each epoch the curator broadcasts a release of the hashed summary, every
/// owner bids its best unsent point, a private auction decides which points
/// are transmitted, transmitted points are verified against their bids, and
/// the best pool point joins the summary. Pool points carried over from
/// earlier rounds are re-scored against the current broadcast. The seed set
/// participates in the summary but is not returned.
inline ProtocolResult RunProtocol(std::vector<OwnerSim>& owners, const Dataset& validation,
                                  const Dataset& seed_set, const ProtocolConfig& config,
                                  const RffBasis& basis) {
  config.Validate();
  Require(!owners.empty(), "at least one owner is required");
  Require(!validation.empty(), "validation set must be non-empty");
  Require(basis.d() == config.d, "basis dimension does not match configuration");
  Require(validation.dim() == basis.n(), "validation dimension does not match basis");
  Require(seed_set.empty() || seed_set.dim() == basis.n(), "seed set dimension mismatch");

  const KernelParams kp{config.gamma};
  ProtocolResult result;
  result.basis = basis.ToJson();
  result.summary = Dataset(validation.dim());
  for (const auto& o : owners) result.owner_ledgers.emplace_back("owner-" + std::to_string(o.id()));

  std::map<int, std::size_t> owner_index;
  for (std::size_t k = 0; k < owners.size(); ++k) {
    Require(owner_index.emplace(owners[k].id(), k).second, "duplicate owner id");
  }

  const auto validation_hashes = HashDataset(basis, validation);
  std::vector<HashVector> summary_hashes = HashDataset(basis, seed_set);

  const EpochBudget vbudget = ValidationParams(config);
  const auto g_tilde = detail::Broadcast(config, validation_hashes, vbudget,
                                         DeriveSeed(config.seed, detail::kValidationStream),
                                         nullptr);
  detail::Record(result.validation_ledger, g_tilde.events, "validation-release");
  for (auto& l : result.owner_ledgers) detail::Record(l, g_tilde.events, "validation-release");

  IncrementalObjective with_seed(validation, kp);
  for (const auto& p : seed_set) with_seed.Add(p);
  IncrementalObjective output_only(validation, kp);
  const double m = static_cast<double>(validation.size());
  const double validation_self = KernelSum(validation, validation, kp) / (m * m);

  AuctionState auction;
  Rng auction_rng(DeriveSeed(config.seed, detail::kAuctionStream));
  std::map<PointKey, std::pair<DataPoint, HashVector>> pool_points;
  std::vector<std::size_t> failures(owners.size(), 0);
  std::vector<bool> removed(owners.size(), false);
  std::optional<ProductDistribution> warm;

  for (std::size_t ell = 1; ell <= config.p; ++ell) {
    const std::size_t q = summary_hashes.size();
    detail::Release g_ell{HashVector(config.d, 0.0), {}};
    if (q > 0) {
      g_ell = detail::Broadcast(config, summary_hashes, EpochParams(ell, config),
                                DeriveSeed(config.seed, detail::kEpochStreamBase + ell),
                                config.warm_start ? &warm : nullptr);
      for (auto& l : result.owner_ledgers) detail::Record(l, g_ell.events, "summary-release");
      if (q > seed_set.size()) detail::Record(result.summary_ledger, g_ell.events, "summary-release");
    }

    for (auto& b : auction.pool) {
      const HashVector& h = pool_points.at(b.key()).second;
      b.value = BidValue(config.bid_form, g_ell.value, g_tilde.value, h, ell, q);
    }

    std::set<std::size_t> excluded;
    RoundResult round;
    std::size_t epoch_failures = 0;
    while (true) {
      std::vector<Bid> bids;
      for (std::size_t k = 0; k < owners.size(); ++k) {
        if (removed[k] || excluded.contains(k)) continue;
        if (auto b = owners[k].ComputeBid(g_ell.value, g_tilde.value, ell, q, config.bid_form))
          bids.push_back(*b);
      }
      const AuctionState snapshot = auction;
      round = RunRound(bids, config.auction, auction, auction_rng);

      std::vector<std::pair<PointKey, DataPoint>> delivered;
      std::set<std::size_t> cheaters;
      for (const auto& bid : round.requested) {
        const std::size_t k = owner_index.at(bid.owner_id);
        DataPoint point = owners[k].Deliver(bid.point_id);
        if (!VerifyBid(point, bid, g_ell.value, g_tilde.value, basis, ell, q, config.bid_form))
          cheaters.insert(k);
        delivered.emplace_back(bid.key(), std::move(point));
      }
      if (cheaters.empty()) {
        for (auto& [key, point] : delivered) {
          owners[owner_index.at(key.owner_id)].MarkSent(key.point_id);
          HashVector h = basis.Hash(point);
          pool_points.emplace(key, std::make_pair(std::move(point), std::move(h)));
        }
        break;
      }
      // Reject the round: the curator did see the delivered points.
      auction = snapshot;
      auction.accessed_total += delivered.size();
      for (std::size_t k : cheaters) {
        ++epoch_failures;
        excluded.insert(k);
        if (++failures[k] >= config.max_verification_failures && !removed[k]) {
          removed[k] = true;
          result.removed_owners.push_back(owners[k].id());
        }
      }
    }

    if (!round.winner) {
      result.status = ProtocolStatus::kOwnersExhausted;
      break;
    }

    const PointKey wkey = round.winner->key();
    auto node = pool_points.extract(wkey);
    Require(!node.empty(), "winner missing from the pool");
    auto& [wpoint, whash] = node.mapped();

    EpochRecord rec;
    rec.epoch = ell;
    rec.winner_owner = wkey.owner_id;
    rec.winner_point = wkey.point_id;
    rec.winner_bid = round.winner->value;
    rec.exact_gain = with_seed.Gain(wpoint);
    {
      const double val_err =
          std::abs(Dot(g_tilde.value, whash) - with_seed.ValidationAffinity(wpoint) / m);
      const double sum_err =
          q == 0 ? 0.0
                 : std::abs(Dot(g_ell.value, whash) -
                            with_seed.SummaryAffinity(wpoint) / static_cast<double>(q));
      rec.kernel_mean_error = std::max(val_err, sum_err);
    }
    if (config.track_gain_shortfall) {
      double best = rec.exact_gain;
      for (std::size_t k = 0; k < owners.size(); ++k) {
        if (removed[k]) continue;
        for (std::size_t j = 0; j < owners[k].data().size(); ++j)
          if (!owners[k].is_sent(j)) best = std::max(best, with_seed.Gain(owners[k].data()[j]));
      }
      for (const auto& [key, entry] : pool_points) best = std::max(best, with_seed.Gain(entry.first));
      rec.gain_shortfall = best - rec.exact_gain;
    }
    with_seed.Add(wpoint);
    output_only.Add(wpoint);
    rec.mmd_sq = validation_self - output_only.Value();
    rec.accessed_total = auction.accessed_total;
    rec.ranked = round.ranked;
    for (const auto& b : round.requested) rec.requested.push_back(b.key());
    rec.verification_failures = epoch_failures;

    for (auto& l : result.owner_ledgers) {
      if (l.CountTagged("auction-round") < config.auction.tau)
        l.Append({config.auction.eps_auc, 0.0, "auction-round", 1});
    }
    for (const auto& l : result.owner_ledgers) {
      const auto c = l.Compose(config.delta_tilde);
      rec.owner_epsilon = std::max(rec.owner_epsilon, c.epsilon);
      rec.owner_events = std::max(rec.owner_events, c.events);
    }

    summary_hashes.push_back(std::move(whash));
    result.summary.push_back(std::move(wpoint));
    result.summary_keys.push_back(wkey);
    result.trace.push_back(std::move(rec));
  }
  result.accessed_total = auction.accessed_total;
  for (const auto& o : owners)
    if (o.unsent() == 0) result.exhausted_owners.push_back(o.id());
  return result;
}

/// Convenience overload: samples the shared basis from the configuration
/// seed and builds owners from plain splits.
inline ProtocolResult RunProtocol(const std::vector<OwnerSplit>& splits, const Dataset& validation,
                                  const Dataset& seed_set, const ProtocolConfig& config) {
  Require(!splits.empty(), "at least one owner is required");
  const RffBasis basis = RffBasis::Sample(config.gamma, config.d, validation.dim(),
                                          DeriveSeed(config.seed, detail::kBasisStream));
  std::vector<OwnerSim> owners;
  for (const auto& s : splits) owners.emplace_back(s.owner_id, s.dataset, basis);
  return RunProtocol(owners, validation, seed_set, config, basis);
}

/// Points the curator saw relative to the minimum |D_s| + |D_v|.
inline double ParsimonyFactor(const ProtocolResult& r, std::size_t validation_size) {
  const double minimum = static_cast<double>(r.summary.size() + validation_size);
  return minimum > 0.0 ? static_cast<double>(r.accessed_total + validation_size) / minimum : 0.0;
}

inline RffBasis ProtocolBasis(const ProtocolConfig& config, std::size_t n) {
  return RffBasis::Sample(config.gamma, config.d, n, DeriveSeed(config.seed, detail::kBasisStream));
}

}  // namespace dpsumm

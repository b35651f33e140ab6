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
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "dpsumm/error.hpp"
#include "dpsumm/random.hpp"

namespace dpsumm {

/// Identity of a point: owner and owner-local index.
struct PointKey {
  int owner_id = 0;
  std::size_t point_id = 0;
  auto operator<=>(const PointKey&) const = default;
};

/// An owner's offer: its best unsent point and that point's approximate
/// marginal gain.
struct Bid {
  int owner_id = 0;
  std::size_t point_id = 0;
  double value = 0.0;

  PointKey key() const { return {owner_id, point_id}; }
};

// Strict ranking: higher value first, then owner id, then point id.
inline bool RanksBefore(const Bid& a, const Bid& b) {
  if (a.value != b.value) return a.value > b.value;
  if (a.owner_id != b.owner_id) return a.owner_id < b.owner_id;
  return a.point_id < b.point_id;
}

struct AuctionParams {
  double eps_auc = 1.0;
  std::size_t tau = 1;

  void Validate() const {
    Require(eps_auc > 0.0 && std::isfinite(eps_auc), "eps_auc must be positive");
    Require(tau >= 1, "tau must be a positive integer");
  }
};

struct AuctionState {
  // Times each (owner, point) was submitted as that owner's best point.
  std::map<PointKey, std::size_t> choice_counts;
  // Every point ever transmitted to the aggregator.
  std::set<PointKey> sent;
  // Transmitted points not yet placed in the summary.
  std::vector<Bid> pool;
  std::size_t accessed_total = 0;
};

struct RoundResult {
  std::vector<Bid> ranked;     // bids in rank order
  std::vector<Bid> requested;  // subset of `ranked` transmitted this round
  std::optional<Bid> winner;
  bool exhausted = false;      // no bids and an empty pool
};

/// One private auction round.
///
/// Bids are ranked; the bid at rank i (1-based) is requested independently
/// with probability exp(-eps_auc (i - 1)), so the top bid always is. A bid
/// whose point has now been an owner's best `tau` times is requested
/// unconditionally. Requested points join the pool, and the winner is the
/// highest-valued pool point.
inline RoundResult RunRound(std::span<const Bid> bids, const AuctionParams& params,
                            AuctionState& state, Rng& rng) {
  params.Validate();
  RoundResult result;
  result.ranked.assign(bids.begin(), bids.end());
  std::set<PointKey> seen;
  for (const auto& b : result.ranked) {
    Require(std::isfinite(b.value), "bid values must be finite");
    Require(!state.sent.contains(b.key()), "bid references an already transmitted point");
    Require(seen.insert(b.key()).second, "duplicate bid for one point");
  }
  std::sort(result.ranked.begin(), result.ranked.end(), RanksBefore);

  for (std::size_t rank = 0; rank < result.ranked.size(); ++rank) {
    const Bid& bid = result.ranked[rank];
    const bool forced = ++state.choice_counts[bid.key()] >= params.tau;
    const bool drawn =
        rank == 0 || rng.Bernoulli(std::exp(-params.eps_auc * static_cast<double>(rank)));
    if (!(forced || drawn)) continue;
    state.sent.insert(bid.key());
    state.choice_counts.erase(bid.key());
    state.pool.push_back(bid);
    ++state.accessed_total;
    result.requested.push_back(bid);
  }

  if (state.pool.empty()) {
    result.exhausted = true;
    return result;
  }
  auto best = std::min_element(state.pool.begin(), state.pool.end(), RanksBefore);
  result.winner = *best;
  state.pool.erase(best);
  return result;
}

/// Expected requests per round from the probabilistic step alone with K
/// bidders: sum_{i=1}^{K} exp(-eps (i - 1)).
inline double ExpectedRequestsPerRound(std::size_t K, double eps_auc) {
  return (1.0 - std::exp(-static_cast<double>(K) * eps_auc)) / (1.0 - std::exp(-eps_auc));
}

/// Expected-access bound for a summary of size p: p (K / tau + 1 / eps_auc).
inline double ExpectedAccessBound(std::size_t p, std::size_t K, const AuctionParams& params) {
  params.Validate();
  return static_cast<double>(p) *
         (static_cast<double>(K) / static_cast<double>(params.tau) + 1.0 / params.eps_auc);
}

}  // namespace dpsumm

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
#include <numeric>
#include <vector>

#include "dpsumm/auction.hpp"
#include "dpsumm/core_data.hpp"
#include "dpsumm/error.hpp"
#include "dpsumm/kernel.hpp"
#include "dpsumm/protocol.hpp"
#include "dpsumm/random.hpp"
#include "dpsumm/rff.hpp"

namespace dpsumm {

struct BaselineResult {
  Dataset summary;
  std::vector<PointKey> keys;
  std::vector<double> gains;  // greedy only: gain of each pick
  bool complete = true;       // false when candidates ran out before p picks
};

namespace detail {

struct Candidate {
  PointKey key;
  const DataPoint* point;
};

inline std::vector<Candidate> Candidates(const std::vector<OwnerSplit>& owners) {
  std::vector<Candidate> out;
  for (const auto& o : owners)
    for (std::size_t j = 0; j < o.dataset.size(); ++j) out.push_back({{o.owner_id, j}, &o.dataset[j]});
  std::sort(out.begin(), out.end(),
            [](const Candidate& a, const Candidate& b) { return a.key < b.key; });
  return out;
}

inline std::size_t InputDim(const std::vector<OwnerSplit>& owners, const Dataset& validation) {
  for (const auto& o : owners) Require(o.dataset.dim() == validation.dim(), "owner dimension mismatch");
  return validation.dim();
}

}  // namespace detail

/// Greedy maximization of J with exact kernel sums. Each step takes the
/// remaining point with the largest marginal gain; ties go to the lowest
/// (owner, point). The seed set starts the objective but is not returned.
inline BaselineResult GreedyNonPrivate(const std::vector<OwnerSplit>& owners,
                                       const Dataset& validation, std::size_t p,
                                       const KernelParams& kp, const Dataset& seed_set = Dataset()) {
  const std::size_t dim = detail::InputDim(owners, validation);
  IncrementalObjective obj(validation, kp);
  for (const auto& x : seed_set) obj.Add(x);

  auto cands = detail::Candidates(owners);
  std::vector<double> va(cands.size()), sa(cands.size()), kxx(cands.size());
  for (std::size_t c = 0; c < cands.size(); ++c) {
    va[c] = obj.ValidationAffinity(*cands[c].point);
    sa[c] = obj.SummaryAffinity(*cands[c].point);
    kxx[c] = Rbf(*cands[c].point, *cands[c].point, kp);
  }
  std::vector<bool> used(cands.size(), false);

  BaselineResult out{Dataset(dim), {}, {}, true};
  for (std::size_t step = 0; step < p; ++step) {
    std::size_t best = cands.size();
    double best_gain = 0.0;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      if (used[c]) continue;
      const double g = obj.GainFromAffinities(va[c], sa[c], kxx[c]);
      if (best == cands.size() || g > best_gain) {
        best = c;
        best_gain = g;
      }
    }
    if (best == cands.size()) {
      out.complete = false;
      break;
    }
    used[best] = true;
    const DataPoint& x = *cands[best].point;
    obj.Add(x);
    for (std::size_t c = 0; c < cands.size(); ++c)
      if (!used[c]) sa[c] += Rbf(*cands[c].point, x, kp);
    out.summary.push_back(x);
    out.keys.push_back(cands[best].key);
    out.gains.push_back(best_gain);
  }
  return out;
}

/// Greedy over hashed means: each step broadcasts the exact mean hash of the
/// summary and picks the candidate with the best bid value, ranking exactly
/// as the auction does. This is what the protocol computes with all noise
/// removed.
inline BaselineResult GreedyHashed(const std::vector<OwnerSplit>& owners, const Dataset& validation,
                                   std::size_t p, const RffBasis& basis,
                                   const Dataset& seed_set = Dataset(),
                                   BidForm form = BidForm::kDerived) {
  const std::size_t dim = detail::InputDim(owners, validation);
  const auto cands = detail::Candidates(owners);
  std::vector<HashVector> hashes;
  hashes.reserve(cands.size());
  for (const auto& c : cands) hashes.push_back(basis.Hash(*c.point));

  const auto vh = HashDataset(basis, validation);
  const HashVector g_tilde = MeanHash(vh, basis.d());
  std::vector<HashVector> summary_hashes = HashDataset(basis, seed_set);
  std::vector<bool> used(cands.size(), false);

  BaselineResult out{Dataset(dim), {}, {}, true};
  for (std::size_t ell = 1; ell <= p; ++ell) {
    const HashVector g_ell = MeanHash(summary_hashes, basis.d());
    const std::size_t q = summary_hashes.size();
    std::size_t best = cands.size();
    Bid best_bid;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      if (used[c]) continue;
      const Bid b{cands[c].key.owner_id, cands[c].key.point_id,
                  BidValue(form, g_ell, g_tilde, hashes[c], ell, q)};
      if (best == cands.size() || RanksBefore(b, best_bid)) {
        best = c;
        best_bid = b;
      }
    }
    if (best == cands.size()) {
      out.complete = false;
      break;
    }
    used[best] = true;
    summary_hashes.push_back(hashes[best]);
    out.summary.push_back(*cands[best].point);
    out.keys.push_back(cands[best].key);
    out.gains.push_back(best_bid.value);
  }
  return out;
}

/// Draws floor(p/K) points per owner without replacement and hands the
/// remainder out one each in owner order. If an owner cannot supply its
/// share, quotas become proportional to owner sizes instead.
inline BaselineResult UniformSampling(const std::vector<OwnerSplit>& owners, std::size_t p,
                                      Rng& rng) {
  Require(!owners.empty(), "at least one owner is required");
  const std::size_t K = owners.size();
  std::size_t total = 0;
  bool fits = true;
  const std::size_t ceil_share = (p + K - 1) / K;
  for (const auto& o : owners) {
    total += o.dataset.size();
    if (o.dataset.size() < ceil_share) fits = false;
  }
  Require(total >= p, "owners hold fewer than p points");

  std::vector<std::size_t> quota(K, 0);
  if (fits) {
    for (std::size_t k = 0; k < K; ++k) quota[k] = p / K + (k < p % K ? 1 : 0);
  } else {
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < K; ++k) {
      quota[k] = p * owners[k].dataset.size() / total;
      assigned += quota[k];
    }
    for (std::size_t k = 0; assigned < p; k = (k + 1) % K) {
      if (quota[k] < owners[k].dataset.size()) {
        ++quota[k];
        ++assigned;
      }
    }
  }

  BaselineResult out{Dataset(owners.front().dataset.dim()), {}, {}, true};
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<std::size_t> order(owners[k].dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.Shuffle(order);
    for (std::size_t i = 0; i < quota[k]; ++i) {
      out.summary.push_back(owners[k].dataset[order[i]]);
      out.keys.push_back({owners[k].owner_id, order[i]});
    }
  }
  return out;
}

struct BruteForceResult {
  Dataset summary;
  std::vector<std::size_t> indices;
  double value = 0.0;  // J(seed_set + summary)
};

/// Exhaustive maximization of J(seed_set + S) over |S| = p subsets of
/// `points`. The lexicographically first maximizer wins ties.
inline BruteForceResult BruteForceOptimal(const Dataset& points, const Dataset& validation,
                                          std::size_t p, const KernelParams& kp,
                                          const Dataset& seed_set = Dataset()) {
  const std::size_t n = points.size();
  Require(p >= 1 && p <= n, "p must lie in [1, N]");
  Require(points.dim() == validation.dim(), "dimension mismatch");
  double combos = 1.0;
  for (std::size_t i = 0; i < p; ++i)
    combos = combos * static_cast<double>(n - i) / static_cast<double>(i + 1);
  Require(combos <= 1e6 + 0.5, "instance too large for exhaustive search");

  IncrementalObjective base(validation, kp);
  for (const auto& x : seed_set) base.Add(x);
  std::vector<double> va(n), sa(n);
  for (std::size_t i = 0; i < n; ++i) {
    va[i] = base.ValidationAffinity(points[i]);
    sa[i] = base.SummaryAffinity(points[i]);
  }
  const Matrix km = KernelMatrix(points.points(), kp);
  double base_cross = 0.0;
  for (const auto& x : seed_set) base_cross += base.ValidationAffinity(x);
  const double base_self = KernelSum(seed_set, seed_set, kp);
  const double m = static_cast<double>(validation.size());
  const double s = static_cast<double>(seed_set.size() + p);

  std::vector<std::size_t> idx(p);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  BruteForceResult best;
  bool have = false;
  while (true) {
    double cross = base_cross, self = base_self;
    for (std::size_t a = 0; a < p; ++a) {
      cross += va[idx[a]];
      self += 2.0 * sa[idx[a]];
      for (std::size_t b = 0; b < p; ++b) self += km[idx[a]][idx[b]];
    }
    const double j = 2.0 * cross / (m * s) - self / (s * s);
    if (!have || j > best.value) {
      have = true;
      best.value = j;
      best.indices = idx;
    }
    std::size_t pos = p;
    while (pos > 0 && idx[pos - 1] == n - p + pos - 1) --pos;
    if (pos == 0) break;
    ++idx[pos - 1];
    for (std::size_t a = pos; a < p; ++a) idx[a] = idx[a - 1] + 1;
  }
  best.summary = Dataset(points.dim());
  for (std::size_t i : best.indices) best.summary.push_back(points[i]);
  return best;
}

}  // namespace dpsumm

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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "dpsumm/baselines.hpp"
#include "dpsumm/core_data.hpp"
#include "dpsumm/error.hpp"
#include "dpsumm/kernel.hpp"
#include "dpsumm/random.hpp"

namespace dpsumm {

// Small instances for exhaustive checks.
struct OracleInstance {
  Dataset candidates;
  Dataset validation;
  Dataset seed_set;

  std::vector<DataPoint> AllPoints() const {
    std::vector<DataPoint> all(candidates.begin(), candidates.end());
    all.insert(all.end(), validation.begin(), validation.end());
    all.insert(all.end(), seed_set.begin(), seed_set.end());
    return all;
  }
};

/// Places every point so that each pairwise kernel value is below the
/// submodularity threshold for the union of all points. Points are drawn
/// uniformly from a box that grows until rejection sampling succeeds.
inline OracleInstance MakeSeparatedInstance(std::size_t n_candidates, std::size_t n_validation,
                                            std::size_t n_seed, std::size_t dim,
                                            const KernelParams& kp, std::uint64_t seed) {
  Require(n_candidates >= 1 && n_validation >= 1 && dim >= 1, "instance sizes must be positive");
  const std::size_t total = n_candidates + n_validation + n_seed;
  const double n = static_cast<double>(total);
  const double bound = 1.0 / (n * n * n + 3.0 * n * n + n);
  const double min_sq = 1.05 * std::log(1.0 / bound) / kp.gamma;
  Rng rng(seed);
  std::vector<DataPoint> pts;
  double half = std::sqrt(min_sq);
  while (pts.size() < total) {
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      DataPoint x(dim);
      for (auto& v : x) v = half * (2.0 * rng.Uniform() - 1.0);
      bool ok = true;
      for (const auto& y : pts) ok = ok && SquaredDistance(x, y) >= min_sq;
      if (ok) {
        pts.push_back(std::move(x));
        placed = true;
      }
    }
    if (!placed) half *= 1.25;
  }
  OracleInstance inst{Dataset(dim), Dataset(dim), Dataset(dim)};
  for (std::size_t i = 0; i < total; ++i) {
    if (i < n_candidates) inst.candidates.push_back(pts[i]);
    else if (i < n_candidates + n_validation) inst.validation.push_back(pts[i]);
    else inst.seed_set.push_back(pts[i]);
  }
  return inst;
}

struct GreedyOracleReport {
  double greedy = 0.0;   // f(greedy) = J(seed + greedy) - J(seed)
  double optimum = 0.0;  // f(OPT)
  double raw_greedy = 0.0;   // J(greedy) without a seed set
  double raw_optimum = 0.0;  // J(OPT) without a seed set
  bool normalized_ok = false;
  bool raw_ok = false;
};

/// Compares greedy with exhaustive search on one instance, both for the
/// seed-normalized objective and for raw J.
inline GreedyOracleReport CompareGreedyWithOptimum(const OracleInstance& inst, std::size_t p,
                                                   const KernelParams& kp) {
  const double factor = 1.0 - std::exp(-1.0);
  GreedyOracleReport r;
  const std::vector<OwnerSplit> owners{{1, inst.candidates, {}}};

  IncrementalObjective base(inst.validation, kp);
  for (const auto& x : inst.seed_set) base.Add(x);
  const double j_seed = base.Value();
  const auto g = GreedyNonPrivate(owners, inst.validation, p, kp, inst.seed_set);
  Dataset joined = inst.seed_set;
  for (const auto& x : g.summary) joined.push_back(x);
  r.greedy = ObjectiveJ(inst.validation, joined, kp) - j_seed;
  r.optimum = BruteForceOptimal(inst.candidates, inst.validation, p, kp, inst.seed_set).value - j_seed;
  r.normalized_ok = r.greedy >= factor * r.optimum - 1e-12;

  const auto g_raw = GreedyNonPrivate(owners, inst.validation, p, kp);
  r.raw_greedy = ObjectiveJ(inst.validation, g_raw.summary, kp);
  r.raw_optimum = BruteForceOptimal(inst.candidates, inst.validation, p, kp).value;
  r.raw_ok = r.raw_greedy >= factor * r.raw_optimum - 1e-12;
  return r;
}

}  // namespace dpsumm

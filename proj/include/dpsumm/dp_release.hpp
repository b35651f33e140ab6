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
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dpsumm/error.hpp"
#include "dpsumm/privacy.hpp"
#include "dpsumm/random.hpp"
#include "dpsumm/rff.hpp"

namespace dpsumm {

/// Symmetric grid {-1, -1 + eta, ..., 1 - eta, 1} with 2/eta an integer.
/// Level k has value -1 + 2k / (levels - 1), which is exact for k = 0, the
/// midpoint and the last level.
class QuantGrid {
 public:
  explicit QuantGrid(double eta) {
    Require(eta > 0.0 && eta <= 2.0, "eta must lie in (0, 2]");
    const double steps = 2.0 / eta;
    const double rounded = std::round(steps);
    Require(std::abs(steps - rounded) <= 1e-9 * std::max(1.0, rounded),
            "2/eta must be an integer");
    intervals_ = static_cast<std::size_t>(rounded);
  }

  double eta() const { return 2.0 / static_cast<double>(intervals_); }
  std::size_t size() const { return intervals_ + 1; }
  double value(std::size_t level) const {
    return -1.0 + 2.0 * static_cast<double>(level) / static_cast<double>(intervals_);
  }
  std::vector<double> values() const {
    std::vector<double> v(size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = value(k);
    return v;
  }

  friend bool operator==(const QuantGrid&, const QuantGrid&) = default;

 private:
  std::size_t intervals_ = 0;
};

/// Unbiased stochastic rounding of x in [-1, 1] to one of its two neighbouring
/// grid points: with k = floor((x + 1)/eta), returns -1 + k eta with
/// probability ((k+1) eta - 1 - x)/eta and -1 + (k+1) eta otherwise. Points
/// already on the grid are returned unchanged without consuming randomness.
inline double QuantizeScalar(double x, const QuantGrid& grid, Rng& rng) {
  Require(x >= -1.0 && x <= 1.0, "quantization input must lie in [-1, 1]");
  const double eta = grid.eta();
  const double t = (x + 1.0) / eta;
  const double nearest = std::round(t);
  if (std::abs(t - nearest) <= 1e-12 * static_cast<double>(grid.size()))
    return grid.value(static_cast<std::size_t>(nearest));
  const auto k = static_cast<std::size_t>(std::floor(t));
  const double lower = grid.value(k);
  const double upper = grid.value(k + 1);
  const double p_lower = (upper - x) / eta;
  return rng.Uniform() < p_lower ? lower : upper;
}

/// q rows of d grid values, row-major.
struct QuantizedDataset {
  std::size_t q = 0;
  std::size_t d = 0;
  std::vector<double> values;

  double at(std::size_t row, std::size_t col) const { return values[row * d + col]; }

  // w(D_Q, i): sum of column i.
  double ColumnSum(std::size_t col) const {
    double s = 0.0;
    for (std::size_t r = 0; r < q; ++r) s += values[r * d + col];
    return s;
  }
  std::vector<double> ColumnSums() const {
    std::vector<double> s(d, 0.0);
    for (std::size_t r = 0; r < q; ++r)
      for (std::size_t c = 0; c < d; ++c) s[c] += values[r * d + c];
    return s;
  }
};

/// Rescales each hash coordinate by sqrt(d/2) into [-1, 1] and quantizes it.
inline QuantizedDataset QuantizeDataset(std::span<const HashVector> hashes,
                                        const QuantGrid& grid, Rng& rng) {
  Require(!hashes.empty(), "cannot quantize an empty hash set");
  QuantizedDataset out;
  out.q = hashes.size();
  out.d = hashes.front().size();
  Require(out.d >= 1, "hash vectors must be non-empty");
  const double scale = std::sqrt(static_cast<double>(out.d) / 2.0);
  out.values.reserve(out.q * out.d);
  for (const auto& h : hashes) {
    Require(h.size() == out.d, "hash dimension mismatch");
    for (double v : h) {
      double x = v * scale;
      Require(std::abs(x) <= 1.0 + 1e-9, "hash coordinate exceeds sqrt(2/d)");
      x = std::clamp(x, -1.0, 1.0);
      out.values.push_back(QuantizeScalar(x, grid, rng));
    }
  }
  return out;
}

/// d independent marginals over the quantization grid. Storage is exactly
/// d * |S| probabilities.
class ProductDistribution {
 public:
  static ProductDistribution Uniform(std::size_t d, const QuantGrid& grid) {
    Require(d >= 1, "distribution needs at least one coordinate");
    ProductDistribution p(d, grid);
    std::fill(p.probs_.begin(), p.probs_.end(), 1.0 / static_cast<double>(grid.size()));
    return p;
  }

  std::size_t d() const { return d_; }
  std::size_t levels() const { return grid_.size(); }
  const QuantGrid& grid() const { return grid_; }
  std::size_t storage_size() const { return probs_.size(); }

  std::span<const double> marginal(std::size_t i) const {
    return {probs_.data() + i * levels(), levels()};
  }
  std::span<double> mutable_marginal(std::size_t i) {
    return {probs_.data() + i * levels(), levels()};
  }

  // sum_s s * P_i(s); w(P, i) is q times this. Mirrored levels are paired
  // so that a symmetric marginal has mean exactly 0.
  double Mean(std::size_t i) const {
    const auto m = marginal(i);
    const std::size_t last = m.size() - 1;
    double acc = 0.0;
    for (std::size_t k = 0; k < m.size() / 2; ++k) acc += grid_.value(last - k) * (m[last - k] - m[k]);
    return acc;
  }

  bool IsValid(double tol = 1e-9) const {
    for (std::size_t i = 0; i < d_; ++i) {
      double total = 0.0;
      for (double v : marginal(i)) {
        if (!(v >= 0.0)) return false;
        total += v;
      }
      if (std::abs(total - 1.0) > tol) return false;
    }
    return true;
  }

  friend bool operator==(const ProductDistribution&, const ProductDistribution&) = default;

 private:
  ProductDistribution(std::size_t d, const QuantGrid& grid)
      : d_(d), grid_(grid), probs_(d * grid.size()) {}

  std::size_t d_;
  QuantGrid grid_;
  std::vector<double> probs_;
};

/// psi_i = |w(P, i) - w(D_Q, i)| with w(P, i) = q * sum_s s P_i(s).
inline double Score(const ProductDistribution& dist, const QuantizedDataset& dq, std::size_t i) {
  Require(i < dist.d() && dist.d() == dq.d, "coordinate out of range");
  return std::abs(static_cast<double>(dq.q) * dist.Mean(i) - dq.ColumnSum(i));
}

inline std::size_t SelectCoordinate(std::span<const double> scores, double epsilon, Rng& rng) {
  return ExpMech(scores, epsilon, rng);
}

/// Multiplicative-weights state over the product representation. Only the
/// selected marginal is touched by a step, which is what keeps the state at
/// O(d/eta) instead of |S|^d.
class MarginalMwem {
 public:
  struct Step {
    std::size_t coordinate = 0;
    double measurement = 0.0;  // noisy w(D_Q, i)
  };

  MarginalMwem(ProductDistribution start, const QuantizedDataset& dq)
      : dist_(std::move(start)), q_(static_cast<double>(dq.q)), targets_(dq.ColumnSums()) {
    Require(dist_.d() == dq.d, "distribution and data dimensions differ");
    Require(dq.q >= 1, "quantized dataset is empty");
    means_.resize(dist_.d());
    for (std::size_t i = 0; i < dist_.d(); ++i) means_[i] = dist_.Mean(i);
  }

  const ProductDistribution& distribution() const { return dist_; }
  ProductDistribution&& release_distribution() && { return std::move(dist_); }
  std::span<const double> means() const { return means_; }
  std::span<const double> targets() const { return targets_; }
  double W(std::size_t i) const { return q_ * means_[i]; }

  std::vector<double> Scores() const {
    std::vector<double> s(means_.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::abs(W(i) - targets_[i]);
    return s;
  }

  // Exponential-mechanism selection followed by a Laplace(1/eps) measurement.
  Step Advance(double epsilon, Rng& rng) {
    Require(epsilon > 0.0 && std::isfinite(epsilon), "step epsilon must be positive");
    const auto scores = Scores();
    const std::size_t i = SelectCoordinate(scores, epsilon, rng);
    const double mu = targets_[i] + rng.Laplace(1.0 / epsilon);
    return Apply(i, mu);
  }

  // Test hook: argmax selection (lowest index on ties) and exact measurement.
  Step AdvanceNoiseless() {
    const auto scores = Scores();
    const auto i = static_cast<std::size_t>(
        std::max_element(scores.begin(), scores.end()) - scores.begin());
    return Apply(i, targets_[i]);
  }

  // P_t(s) proportional to P_{t-1}(s) exp(s_i (mu - w(P_{t-1}, i)) / 2q),
  // renormalized; the other marginals are left bit-identical.
  Step Apply(std::size_t i, double measurement) {
    Require(i < dist_.d(), "coordinate out of range");
    const double rate = (measurement - W(i)) / (2.0 * q_);
    const auto& grid = dist_.grid();
    auto m = dist_.mutable_marginal(i);
    // Work in the log domain so that large noisy measurements cannot
    // underflow every level at once.
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m.size(); ++k)
      if (m[k] > 0.0) top = std::max(top, std::log(m[k]) + grid.value(k) * rate);
    double total = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      m[k] = m[k] > 0.0 ? std::exp(std::log(m[k]) + grid.value(k) * rate - top) : 0.0;
      total += m[k];
    }
    for (auto& v : m) v /= total;
    means_[i] = dist_.Mean(i);
    return {i, measurement};
  }

 private:
  ProductDistribution dist_;
  double q_;
  std::vector<double> targets_;
  std::vector<double> means_;
};

struct MwStepResult {
  ProductDistribution dist;
  std::size_t coordinate = 0;
  double measurement = 0.0;
};

inline MwStepResult MwStep(const ProductDistribution& dist, const QuantizedDataset& dq,
                           double epsilon, Rng& rng) {
  MarginalMwem state(dist, dq);
  const auto step = state.Advance(epsilon, rng);
  return {std::move(state).release_distribution(), step.coordinate, step.measurement};
}

struct ReleaseParams {
  double epsilon = 1.0;       // per mechanism step
  std::size_t iterations = 1; // T
  double eta = 0.5;
  std::uint64_t rng_seed = 0;
  int events_per_iter = 2;    // 2: selection and measurement counted separately
};

struct H2Result {
  HashVector value;
  std::vector<PrivacyEvent> events;
  ProductDistribution final_state;
};

namespace detail {

template <typename StepFn>
H2Result RunH2(std::span<const HashVector> hashes, std::size_t iterations, double eta,
               std::uint64_t seed, const ProductDistribution* warm_start, StepFn step) {
  Require(!hashes.empty(), "h2 needs at least one input vector");
  Require(iterations >= 1, "h2 needs at least one iteration");
  const QuantGrid grid(eta);
  Rng quant_rng(DeriveSeed(seed, 1));
  const QuantizedDataset dq = QuantizeDataset(hashes, grid, quant_rng);
  ProductDistribution start = ProductDistribution::Uniform(dq.d, grid);
  if (warm_start != nullptr) {
    Require(warm_start->d() == dq.d && warm_start->grid() == grid,
            "warm-start state does not match the release shape");
    start = *warm_start;
  }
  MarginalMwem state(std::move(start), dq);
  std::vector<double> mean_sum(dq.d, 0.0);
  Rng mech_rng(DeriveSeed(seed, 2));
  for (std::size_t t = 0; t < iterations; ++t) {
    step(state, mech_rng);
    const auto means = state.means();
    for (std::size_t i = 0; i < dq.d; ++i) mean_sum[i] += means[i];
  }
  const double scale = std::sqrt(2.0 / static_cast<double>(dq.d));
  HashVector out(dq.d);
  for (std::size_t i = 0; i < dq.d; ++i) {
    const double avg = std::clamp(mean_sum[i] / static_cast<double>(iterations), -1.0, 1.0);
    out[i] = scale * avg;
  }
  return {std::move(out), {}, std::move(state).release_distribution()};
}

}  // namespace detail

/// Differentially private release of the mean of `hashes`: stochastic
/// quantization, T multiplicative-weights steps over the product
/// distribution, and the rescaled mean of the averaged distribution.
/// `warm_start` replaces the uniform starting distribution when given.
inline H2Result H2(std::span<const HashVector> hashes, const ReleaseParams& params,
                   const ProductDistribution* warm_start = nullptr) {
  Require(params.epsilon > 0.0 && std::isfinite(params.epsilon), "h2 epsilon must be positive");
  Require(params.events_per_iter == 1 || params.events_per_iter == 2,
          "events_per_iter must be 1 or 2");
  auto result = detail::RunH2(hashes, params.iterations, params.eta, params.rng_seed, warm_start,
                              [&](MarginalMwem& s, Rng& rng) { s.Advance(params.epsilon, rng); });
  const auto t = static_cast<std::uint64_t>(params.iterations);
  if (params.events_per_iter == 2) {
    result.events.push_back({params.epsilon, 0.0, "h2-select", t});
    result.events.push_back({params.epsilon, 0.0, "h2-measure", t});
  } else {
    result.events.push_back({params.epsilon, 0.0, "h2-iter", t});
  }
  return result;
}

/// Noise-free variant for testing: argmax coordinate selection and exact
/// measurements. Quantization is still randomized. Not privacy accounted;
/// reports no events.
inline H2Result H2NoiseOff(std::span<const HashVector> hashes, std::size_t iterations,
                           double eta, std::uint64_t seed,
                           const ProductDistribution* warm_start = nullptr) {
  return detail::RunH2(hashes, iterations, eta, seed, warm_start,
                       [](MarginalMwem& s, Rng&) { s.AdvanceNoiseless(); });
}

// Additive error bound on the expected max-coordinate error of H2 for
// q inputs of dimension d (natural logarithms).
inline double H2ErrorBound(std::size_t d, std::size_t q, double eta, double epsilon) {
  const double dd = static_cast<double>(d);
  const double qq = static_cast<double>(q);
  return 2.0 * std::sqrt(2.0 * std::log(2.0 / eta) / (dd * dd)) +
         11.0 * std::numbers::sqrt2 * std::log(dd) / (qq * epsilon * std::sqrt(dd)) +
         4.0 / dd + 2.0 * dd * std::exp(-qq / 4.0) + eta;
}

// The same bound with the epsilon-dependent term dropped.
inline double H2NoiseFreeBound(std::size_t d, std::size_t q, double eta) {
  const double dd = static_cast<double>(d);
  const double qq = static_cast<double>(q);
  return 2.0 * std::sqrt(2.0 * std::log(2.0 / eta) / (dd * dd)) + 4.0 / dd +
         2.0 * dd * std::exp(-qq / 4.0) + eta;
}

}  // namespace dpsumm

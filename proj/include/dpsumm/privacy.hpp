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
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dpsumm/error.hpp"
#include "dpsumm/random.hpp"
#include "json.hpp"

namespace dpsumm {

// ---------------------------------------------------------------------------
// Mechanism primitives

inline double Laplace(double scale, Rng& rng) {
  Require(scale >= 0.0 && std::isfinite(scale), "Laplace scale must be non-negative");
  return rng.Laplace(scale);
}

/// Exponential mechanism: samples index i with probability proportional to
/// exp(epsilon * scores[i]). Scores are shifted by their maximum first, which
/// leaves the distribution unchanged.
inline std::size_t ExpMech(std::span<const double> scores, double epsilon, Rng& rng) {
  Require(!scores.empty(), "exponential mechanism needs at least one candidate");
  Require(epsilon >= 0.0, "epsilon must be non-negative");
  if (scores.size() == 1) return 0;
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> weights(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    Require(std::isfinite(scores[i]), "exponential mechanism scores must be finite");
    weights[i] = epsilon == 0.0 ? 1.0 : std::exp(epsilon * (scores[i] - top));
    total += weights[i];
  }
  const double u = rng.Uniform() * total;
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cumulative += weights[i];
    last_positive = i;
    if (u < cumulative) return i;
  }
  return last_positive;
}

// ---------------------------------------------------------------------------
// Ledger and composition

/// One (epsilon, delta)-DP release, or `count` identical consecutive ones.
struct PrivacyEvent {
  double epsilon = 0.0;
  double delta = 0.0;
  std::string tag;
  std::uint64_t count = 1;
};

struct CompositionResult {
  double epsilon = 0.0;   // min of the three bounds below
  double delta = 0.0;     // 1 - (1 - delta_tilde) * prod(1 - delta_l)
  double basic = 0.0;     // sum eps_l
  double advanced = 0.0;  // kl + sqrt(2 log(1/delta_tilde) sum eps_l^2)
  double tight = 0.0;     // kl + sqrt(2 sum eps_l^2 log(e + sqrt(2 sum eps_l^2)/delta_tilde))
  std::uint64_t events = 0;
};

namespace detail {

// Running sums sufficient for the k-fold adaptive composition bound.
struct CompositionSums {
  double sum_eps = 0.0;
  double sum_sq = 0.0;
  double sum_kl = 0.0;  // sum of (e^eps - 1) eps / (e^eps + 1) = eps tanh(eps/2)
  double log_keep = 0.0;  // sum of log(1 - delta_l)
  std::uint64_t events = 0;

  void Add(const PrivacyEvent& e) {
    Require(e.epsilon >= 0.0 && std::isfinite(e.epsilon), "event epsilon must be >= 0");
    Require(e.delta >= 0.0 && e.delta <= 1.0, "event delta must lie in [0, 1]");
    const double c = static_cast<double>(e.count);
    sum_eps += c * e.epsilon;
    sum_sq += c * e.epsilon * e.epsilon;
    sum_kl += c * e.epsilon * std::tanh(e.epsilon / 2.0);
    log_keep += c * std::log1p(-e.delta);
    events += e.count;
  }

  CompositionResult Evaluate(double delta_tilde) const {
    Require(delta_tilde > 0.0 && delta_tilde <= 1.0 / std::numbers::e,
            "delta_tilde must lie in (0, 1/e]");
    CompositionResult r;
    r.events = events;
    r.basic = sum_eps;
    const double two_sq = 2.0 * sum_sq;
    r.advanced = sum_kl + std::sqrt(two_sq * std::log(1.0 / delta_tilde));
    r.tight = sum_kl + std::sqrt(two_sq * std::log(std::numbers::e +
                                                   std::sqrt(two_sq) / delta_tilde));
    r.epsilon = std::min({r.basic, r.advanced, r.tight});
    r.delta = 1.0 - (1.0 - delta_tilde) * std::exp(log_keep);
    return r;
  }
};

}  // namespace detail

/// k-fold adaptive composition of heterogeneous (eps_l, delta_l) mechanisms.
inline CompositionResult Compose(std::span<const PrivacyEvent> events, double delta_tilde) {
  detail::CompositionSums sums;
  for (const auto& e : events) sums.Add(e);
  return sums.Evaluate(delta_tilde);
}

/// Append-only log of the releases seen by one observer about one protected
/// dataset. Appends are serialized by an internal mutex.
class PrivacyLedger {
 public:
  explicit PrivacyLedger(std::string channel = {}) : channel_(std::move(channel)) {}

  PrivacyLedger(const PrivacyLedger& other) {
    std::lock_guard lock(other.mu_);
    channel_ = other.channel_;
    events_ = other.events_;
    sums_ = other.sums_;
  }
  PrivacyLedger& operator=(const PrivacyLedger& other) {
    if (this == &other) return *this;
    PrivacyLedger copy(other);
    std::scoped_lock lock(mu_);
    channel_ = std::move(copy.channel_);
    events_ = std::move(copy.events_);
    sums_ = copy.sums_;
    return *this;
  }

  const std::string& channel() const { return channel_; }

  void Append(PrivacyEvent event) {
    std::lock_guard lock(mu_);
    sums_.Add(event);
    events_.push_back(std::move(event));
  }

  void AppendAll(std::span<const PrivacyEvent> events) {
    for (const auto& e : events) Append(e);
  }

  std::vector<PrivacyEvent> events() const {
    std::lock_guard lock(mu_);
    return events_;
  }

  std::uint64_t event_count() const {
    std::lock_guard lock(mu_);
    return sums_.events;
  }

  // Number of events whose tag equals `tag`, counting multiplicity.
  std::uint64_t CountTagged(const std::string& tag) const {
    std::lock_guard lock(mu_);
    std::uint64_t n = 0;
    for (const auto& e : events_)
      if (e.tag == tag) n += e.count;
    return n;
  }

  CompositionResult Compose(double delta_tilde) const {
    std::lock_guard lock(mu_);
    return sums_.Evaluate(delta_tilde);
  }

  nlohmann::json ToJson(double delta_tilde) const {
    const auto total = Compose(delta_tilde);
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : this->events())
      events.push_back({{"epsilon", e.epsilon}, {"delta", e.delta}, {"tag", e.tag},
                        {"count", e.count}});
    return {{"channel", channel_},
            {"events", std::move(events)},
            {"delta_tilde", delta_tilde},
            {"event_count", total.events},
            {"epsilon", total.epsilon},
            {"delta", total.delta},
            {"epsilon_basic", total.basic},
            {"epsilon_advanced", total.advanced},
            {"epsilon_tight", total.tight}};
  }

 private:
  mutable std::mutex mu_;
  std::string channel_;
  std::vector<PrivacyEvent> events_;
  detail::CompositionSums sums_;
};

inline CompositionResult Compose(const PrivacyLedger& ledger, double delta_tilde) {
  return ledger.Compose(delta_tilde);
}

// ---------------------------------------------------------------------------
// Budget schedule

/// Per-epoch epsilon is eps / sqrt(c * T * l * log(1/delta) * log p). The
/// main statement uses c = 16; the composition proof uses c = 36.
enum class EpochConstant { kMainText, kProof };

/// Validation release epsilon: eps / (16 T) or eps / sqrt(16 T).
enum class ValidationEpsForm { kLinear, kSqrt };

struct ScheduleOptions {
  EpochConstant epoch_constant = EpochConstant::kProof;
  ValidationEpsForm validation_form = ValidationEpsForm::kLinear;
};

struct Schedule {
  double eps_target = 0.0;
  double delta_tilde = 0.0;
  std::size_t p = 0;
  std::size_t d = 0;
  std::size_t K = 0;
  std::size_t T = 0;
  double eta = 0.0;
  double eps_v = 0.0;
  double eps_auc = 0.0;
  std::size_t tau = 0;
  double epoch_constant = 36.0;

  double EpsEpoch(std::size_t ell) const {
    Require(ell >= 1, "epochs are numbered from 1");
    return eps_target / std::sqrt(epoch_constant * static_cast<double>(T) *
                                  static_cast<double>(ell) * std::log(1.0 / delta_tilde) *
                                  std::log(static_cast<double>(p)));
  }
};

// floor(K^{2/3}), at least 1; exact cubes are not lost to rounding.
inline std::size_t AuctionThreshold(std::size_t K) {
  const double t = std::floor(std::cbrt(static_cast<double>(K) * static_cast<double>(K)) + 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(t));
}

inline Schedule MakeSchedule(double eps_target, double delta_tilde, std::size_t p,
                             std::size_t d, std::size_t K, std::size_t T,
                             const ScheduleOptions& options = {}) {
  Require(eps_target > 0.0 && std::isfinite(eps_target), "target epsilon must be positive");
  Require(delta_tilde > 0.0 && delta_tilde <= 1.0 / std::numbers::e,
          "delta_tilde must lie in (0, 1/e]");
  Require(p >= 2, "schedule needs p >= 2 (log p must be positive)");
  Require(d >= 1 && K >= 1 && T >= 1, "d, K and T must be positive");
  Schedule s;
  s.eps_target = eps_target;
  s.delta_tilde = delta_tilde;
  s.p = p;
  s.d = d;
  s.K = K;
  s.T = T;
  s.eta = 1.0 / static_cast<double>(d);
  s.epoch_constant = options.epoch_constant == EpochConstant::kProof ? 36.0 : 16.0;
  const double t = static_cast<double>(T);
  s.eps_v = options.validation_form == ValidationEpsForm::kLinear
                ? eps_target / (16.0 * t)
                : eps_target / std::sqrt(16.0 * t);
  s.eps_auc = eps_target / (3.0 * std::numbers::sqrt2 * std::log(1.0 / delta_tilde)) /
              std::cbrt(static_cast<double>(K));
  s.tau = AuctionThreshold(K);
  return s;
}

/// The event stream an owner channel accumulates under `s` when each of the
/// T mechanism iterations counts as `events_per_iter` releases: the
/// validation release, one release per epoch, and tau auction rounds.
inline std::vector<PrivacyEvent> ScheduleEventStream(const Schedule& s, int events_per_iter) {
  Require(events_per_iter == 1 || events_per_iter == 2, "events_per_iter must be 1 or 2");
  const auto per_call = static_cast<std::uint64_t>(events_per_iter) * s.T;
  std::vector<PrivacyEvent> events;
  events.push_back({s.eps_v, 0.0, "validation-release", per_call});
  for (std::size_t ell = 1; ell <= s.p; ++ell)
    events.push_back({s.EpsEpoch(ell), 0.0, "summary-release", per_call});
  events.push_back({s.eps_auc, 0.0, "auction-round", s.tau});
  return events;
}

}  // namespace dpsumm

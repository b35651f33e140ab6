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
#include <numbers>
#include <span>
#include <vector>

#include "dpsumm/core_data.hpp"
#include "dpsumm/error.hpp"
#include "dpsumm/random.hpp"
#include "json.hpp"

namespace dpsumm {

// d-dimensional random-feature embedding of a point; every coordinate lies in
// [-sqrt(2/d), sqrt(2/d)].
using HashVector = std::vector<double>;

/// Shared randomness of the random Fourier feature hash: d frequency vectors
/// drawn from N(0, 2 gamma I_n) and d phase offsets uniform on [0, 2 pi).
/// Sampled once per protocol run and handed by value to every participant.
class RffBasis {
 public:
  static RffBasis Sample(double gamma, std::size_t d, std::size_t n, std::uint64_t seed) {
    Require(gamma > 0.0 && std::isfinite(gamma), "gamma must be positive");
    Require(d >= 1, "hash dimension d must be at least 1");
    Require(n >= 1, "input dimension n must be at least 1");
    RffBasis b;
    b.gamma_ = gamma;
    b.d_ = d;
    b.n_ = n;
    b.seed_ = seed;
    Rng rng(seed);
    const double stddev = std::sqrt(2.0 * gamma);
    b.omegas_.resize(d * n);
    for (auto& w : b.omegas_) w = stddev * rng.Normal();
    b.offsets_.resize(d);
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    for (auto& o : b.offsets_) {
      o = kTwoPi * rng.Uniform();
      if (o >= kTwoPi) o = 0.0;
    }
    b.scale_ = std::sqrt(2.0 / static_cast<double>(d));
    return b;
  }

  // Explicit basis, mostly for tests. `omegas` holds d rows of length n.
  static RffBasis FromParts(double gamma, const std::vector<std::vector<double>>& omegas,
                            std::vector<double> offsets) {
    Require(!omegas.empty() && omegas.size() == offsets.size(),
            "need one offset per frequency vector");
    RffBasis b;
    b.gamma_ = gamma;
    b.d_ = omegas.size();
    b.n_ = omegas.front().size();
    b.seed_ = 0;
    for (const auto& row : omegas) {
      Require(row.size() == b.n_, "ragged frequency matrix");
      b.omegas_.insert(b.omegas_.end(), row.begin(), row.end());
    }
    b.offsets_ = std::move(offsets);
    b.scale_ = std::sqrt(2.0 / static_cast<double>(b.d_));
    return b;
  }

  double gamma() const { return gamma_; }
  std::size_t d() const { return d_; }
  std::size_t n() const { return n_; }
  std::uint64_t seed() const { return seed_; }
  // Largest possible coordinate magnitude, sqrt(2/d).
  double bound() const { return scale_; }

  std::span<const double> omega(std::size_t i) const {
    return {omegas_.data() + i * n_, n_};
  }
  double offset(std::size_t i) const { return offsets_[i]; }

  HashVector Hash(const DataPoint& x) const {
    Require(x.size() == n_, "point dimension does not match basis");
    HashVector h(d_);
    for (std::size_t i = 0; i < d_; ++i) {
      const double* w = omegas_.data() + i * n_;
      double proj = 0.0;
      for (std::size_t j = 0; j < n_; ++j) proj += w[j] * x[j];
      h[i] = scale_ * std::cos(proj + offsets_[i]);
    }
    return h;
  }

  // Only the generating parameters are serialized; the matrices are
  // regenerated from the seed.
  nlohmann::json ToJson() const {
    return {{"seed", seed_}, {"gamma", gamma_}, {"d", d_}, {"n", n_}};
  }

  static RffBasis FromJson(const nlohmann::json& j) {
    return Sample(j.at("gamma").get<double>(), j.at("d").get<std::size_t>(),
                  j.at("n").get<std::size_t>(), j.at("seed").get<std::uint64_t>());
  }

  friend bool operator==(const RffBasis&, const RffBasis&) = default;

 private:
  RffBasis() = default;

  double gamma_ = 0.0;
  std::size_t d_ = 0;
  std::size_t n_ = 0;
  std::uint64_t seed_ = 0;
  double scale_ = 0.0;
  std::vector<double> omegas_;
  std::vector<double> offsets_;
};

inline RffBasis SampleBasis(double gamma, std::size_t d, std::size_t n, std::uint64_t seed) {
  return RffBasis::Sample(gamma, d, n, seed);
}

inline HashVector HashPoint(const RffBasis& basis, const DataPoint& x) { return basis.Hash(x); }

inline std::vector<HashVector> HashDataset(const RffBasis& basis, const Dataset& data) {
  std::vector<HashVector> out;
  out.reserve(data.size());
  for (const auto& p : data) out.push_back(basis.Hash(p));
  return out;
}

inline double Dot(std::span<const double> a, std::span<const double> b) {
  Require(a.size() == b.size(), "dot product dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Coordinate-wise mean of hash vectors, accumulated in index order. An empty
// input yields the zero vector of dimension d.
inline HashVector MeanHash(std::span<const HashVector> hashes, std::size_t d) {
  HashVector mean(d, 0.0);
  if (hashes.empty()) return mean;
  for (const auto& h : hashes) {
    Require(h.size() == d, "hash dimension mismatch");
    for (std::size_t i = 0; i < d; ++i) mean[i] += h[i];
  }
  const double inv = 1.0 / static_cast<double>(hashes.size());
  for (auto& v : mean) v *= inv;
  return mean;
}

}  // namespace dpsumm

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
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace dpsumm {

// SplitMix64 finalizer. Used to derive independent stream seeds from a
// master seed so that the curator, owners and baselines never share state.
constexpr std::uint64_t MixSeed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) {
  return MixSeed(seed ^ MixSeed(stream + 0x632be59bd9b4e019ULL));
}

/// Seedable random source with fully specified transforms.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard's distribution classes are implementation-defined,
/// so every transform used here is written out explicitly:
///   - Uniform():  top 53 bits of one engine draw, scaled by 2^-53, in [0,1).
///   - Normal():   Box-Muller on two uniforms, cosine branch only.
///   - Laplace():  inverse CDF of one uniform.
///   - Below(n):   rejection sampling on the engine output.
/// Results are therefore bit-identical across platforms and toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1].
  double UniformOpenLow() { return 1.0 - Uniform(); }

  double Normal() {
    const double u1 = UniformOpenLow();
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double Normal(double mean, double stddev) { return mean + stddev * Normal(); }

  // Zero-mean Laplace with the given scale; scale 0 yields exactly 0.
  double Laplace(double scale) {
    if (scale == 0.0) return 0.0;
    double u = Uniform() - 0.5;
    while (u == -0.5) u = Uniform() - 0.5;
    const double magnitude = -scale * std::log1p(-2.0 * std::abs(u));
    return u < 0 ? -magnitude : magnitude;
  }

  bool Bernoulli(double p) {
    if (p >= 1.0) return true;
    if (p <= 0.0) return false;
    return Uniform() < p;
  }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t Below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  template <typename T>
  void Shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(Below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dpsumm

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
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dpsumm/core_data.hpp"
#include "dpsumm/error.hpp"

namespace dpsumm {

/// RBF kernel k(x, y) = exp(-gamma * |x - y|^2).
struct KernelParams {
  double gamma = 0.1;

  void Validate() const {
    Require(gamma > 0.0 && std::isfinite(gamma), "kernel gamma must be positive");
  }
};

// Neumaier compensated summation. Kernel sums are always accumulated in index
// order through this so that results do not depend on evaluation strategy.
class CompensatedSum {
 public:
  void Add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double Value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double SquaredDistance(const DataPoint& x, const DataPoint& y) {
  Require(x.size() == y.size(), "dimension mismatch: " + std::to_string(x.size()) +
                                    " vs " + std::to_string(y.size()));
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - y[i];
    acc += diff * diff;
  }
  return acc;
}

inline double Rbf(const DataPoint& x, const DataPoint& y, const KernelParams& kp) {
  kp.Validate();
  return std::exp(-kp.gamma * SquaredDistance(x, y));
}

// Sum over all ordered pairs (x in a, y in b) of k(x, y).
inline double KernelSum(const Dataset& a, const Dataset& b, const KernelParams& kp) {
  CompensatedSum s;
  for (const auto& x : a)
    for (const auto& y : b) s.Add(Rbf(x, y, kp));
  return s.Value();
}

// Sum over y in b of k(x, y).
inline double KernelSum(const DataPoint& x, const Dataset& b, const KernelParams& kp) {
  CompensatedSum s;
  for (const auto& y : b) s.Add(Rbf(x, y, kp));
  return s.Value();
}

/// Sample MMD^2 between two non-empty datasets. The raw value is returned;
/// it may be slightly negative (order -1e-12) from rounding.
inline double MmdSquared(const Dataset& a, const Dataset& b, const KernelParams& kp) {
  kp.Validate();
  Require(!a.empty() && !b.empty(), "MMD requires non-empty datasets");
  Require(a.dim() == b.dim(), "MMD dimension mismatch");
  // Evaluate in a canonical argument order so the result is exactly symmetric.
  const bool swap = std::make_pair(b.size(), std::cref(b.points())) <
                    std::make_pair(a.size(), std::cref(a.points()));
  const Dataset& x = swap ? b : a;
  const Dataset& y = swap ? a : b;
  const double m1 = static_cast<double>(x.size());
  const double m2 = static_cast<double>(y.size());
  return KernelSum(x, x, kp) / (m1 * m1) - 2.0 * KernelSum(x, y, kp) / (m1 * m2) +
         KernelSum(y, y, kp) / (m2 * m2);
}

/// Normalized MMD objective J(summary) against the validation set. Undefined
/// (and rejected) for an empty summary.
inline double ObjectiveJ(const Dataset& validation, const Dataset& summary,
                         const KernelParams& kp) {
  kp.Validate();
  Require(!validation.empty(), "objective requires a non-empty validation set");
  Require(!summary.empty(), "objective is undefined for an empty summary");
  Require(validation.dim() == summary.dim(), "objective dimension mismatch");
  const double m = static_cast<double>(validation.size());
  const double s = static_cast<double>(summary.size());
  return 2.0 * KernelSum(validation, summary, kp) / (m * s) -
         KernelSum(summary, summary, kp) / (s * s);
}

/// Maintains the two kernel sums J depends on so that a candidate's marginal
/// gain costs O(|validation| + |summary|) kernel evaluations.
///
///   cross = sum_{y in V, x in S} k(y, x)
///   self  = sum_{x, x' in S} k(x, x')
///   J(S)  = 2 cross / (m |S|) - self / |S|^2,   J(empty) := 0.
class IncrementalObjective {
 public:
  IncrementalObjective(Dataset validation, KernelParams kp)
      : validation_(std::move(validation)), kp_(kp), members_(validation_.dim()) {
    kp_.Validate();
    Require(!validation_.empty(), "objective requires a non-empty validation set");
  }

  std::size_t size() const { return members_.size(); }
  const Dataset& members() const { return members_; }
  const Dataset& validation() const { return validation_; }

  double Value() const { return ValueFrom(cross_.Value(), self_.Value(), size()); }

  // sum over the validation set of k(y, x); independent of the summary.
  double ValidationAffinity(const DataPoint& x) const {
    return KernelSum(x, validation_, kp_);
  }

  // sum over current members of k(x', x).
  double SummaryAffinity(const DataPoint& x) const { return KernelSum(x, members_, kp_); }

  double Gain(const DataPoint& x) const {
    return GainFromAffinities(ValidationAffinity(x), SummaryAffinity(x), Rbf(x, x, kp_));
  }

  // Marginal gain given precomputed affinities of the candidate.
  double GainFromAffinities(double validation_affinity, double summary_affinity,
                            double self_kernel) const {
    const double cross = cross_.Value() + validation_affinity;
    const double self = self_.Value() + 2.0 * summary_affinity + self_kernel;
    return ValueFrom(cross, self, size() + 1) - Value();
  }

  void Add(const DataPoint& x) {
    cross_.Add(ValidationAffinity(x));
    self_.Add(2.0 * SummaryAffinity(x));
    self_.Add(Rbf(x, x, kp_));
    members_.push_back(x);
  }

 private:
  double ValueFrom(double cross, double self, std::size_t s) const {
    if (s == 0) return 0.0;
    const double m = static_cast<double>(validation_.size());
    const double n = static_cast<double>(s);
    return 2.0 * cross / (m * n) - self / (n * n);
  }

  Dataset validation_;
  KernelParams kp_;
  Dataset members_;
  CompensatedSum cross_;
  CompensatedSum self_;
};

/// J(summary + x) - J(summary), with J(empty) = 0.
inline double MarginalGain(const Dataset& validation, const Dataset& summary,
                           const DataPoint& x, const KernelParams& kp) {
  IncrementalObjective obj(validation, kp);
  for (const auto& p : summary) obj.Add(p);
  return obj.Gain(x);
}

using Matrix = std::vector<std::vector<double>>;

inline Matrix KernelMatrix(const std::vector<DataPoint>& points, const KernelParams& kp) {
  const std::size_t n = points.size();
  Matrix k(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) k[i][j] = k[j][i] = Rbf(points[i], points[j], kp);
  return k;
}

/// Diagonal-dominance test under which J is monotone and submodular: every
/// off-diagonal entry is at most k* / (N^3 + 3N^2 + N), where k* is the
/// (constant) diagonal. The matrix must be square and symmetric.
inline bool SubmodCondition(const Matrix& k) {
  const std::size_t n = k.size();
  Require(n > 0, "empty kernel matrix");
  for (const auto& row : k) Require(row.size() == n, "kernel matrix is not square");
  const double diag = k[0][0];
  for (std::size_t i = 0; i < n; ++i) {
    Require(k[i][i] == diag, "kernel matrix diagonal is not constant");
    for (std::size_t j = 0; j < i; ++j)
      Require(k[i][j] == k[j][i], "kernel matrix is not symmetric");
  }
  const double nn = static_cast<double>(n);
  const double bound = diag / (nn * nn * nn + 3.0 * nn * nn + nn);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && k[i][j] > bound) return false;
  return true;
}

}  // namespace dpsumm

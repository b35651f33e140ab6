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

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dpsumm/error.hpp"
#include "dpsumm/random.hpp"

namespace dpsumm {

using DataPoint = std::vector<double>;

/// Ordered collection of points sharing one dimension. Every stored
/// coordinate is finite. Point identity is the index, not the value, so
/// equal-valued points are distinct members.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::size_t dim) : dim_(dim) {}
  Dataset(std::size_t dim, std::vector<DataPoint> points) : dim_(dim) {
    points_.reserve(points.size());
    for (auto& p : points) push_back(std::move(p));
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  const DataPoint& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<DataPoint>& points() const { return points_; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  void reserve(std::size_t n) { points_.reserve(n); }

  void push_back(DataPoint point) {
    Require(point.size() == dim_, "point dimension " +
                                      std::to_string(point.size()) +
                                      " does not match dataset dimension " +
                                      std::to_string(dim_));
    for (double v : point) Require(std::isfinite(v), "non-finite coordinate");
    points_.push_back(std::move(point));
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<DataPoint> points_;
};

/// One simulated data owner. `source_rows[j]` is the row of the pooled input
/// that became point j of `dataset`.
struct OwnerSplit {
  int owner_id = 0;
  Dataset dataset;
  std::vector<std::size_t> source_rows;
};

// ---------------------------------------------------------------------------
// CSV ingestion

namespace detail {

inline std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> SplitCells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(Trim(line.substr(start)));
      break;
    }
    cells.push_back(Trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

}  // namespace detail

/// Parses comma-separated reals. Rows are numbered from 1, counting data rows
/// only (a header row, if present, is not counted). Blank lines are skipped.
inline Dataset ParseCsv(std::istream& in, bool has_header,
                        const std::string& source = "<stream>") {
  std::string line;
  bool header_pending = has_header;
  std::size_t row = 0;
  std::size_t columns = 0;
  std::vector<DataPoint> points;
  while (std::getline(in, line)) {
    if (detail::Trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    ++row;
    const auto cells = detail::SplitCells(line);
    if (row == 1) columns = cells.size();
    if (cells.size() != columns) {
      throw Error(source + ": row " + std::to_string(row) + " has " +
                  std::to_string(cells.size()) + " columns, expected " +
                  std::to_string(columns));
    }
    DataPoint point(columns);
    for (std::size_t c = 0; c < columns; ++c) {
      const std::string_view cell = cells[c];
      double value = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, value);
      if (cell.empty() || ec != std::errc() || ptr != last) {
        throw Error(source + ": parse error at row " + std::to_string(row) +
                    ", column " + std::to_string(c + 1) + ": '" +
                    std::string(cell) + "'");
      }
      if (!std::isfinite(value)) {
        throw Error(source + ": non-finite value at row " +
                    std::to_string(row) + ", column " + std::to_string(c + 1));
      }
      point[c] = value;
    }
    points.push_back(std::move(point));
  }
  if (points.empty()) throw Error(source + ": no data rows");
  return Dataset(columns, std::move(points));
}

inline Dataset LoadCsv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return ParseCsv(in, has_header, path);
}

inline void WriteCsv(std::ostream& out, const Dataset& data) {
  char buf[64];
  for (const auto& p : data) {
    for (std::size_t c = 0; c < p.size(); ++c) {
      if (c) out << ',';
      const auto res = std::to_chars(buf, buf + sizeof buf, p[c]);
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Owner splitting

/// Assigns disjoint random subsets of `data` to owners 1..K. Owner k receives
/// floor(fractions[k-1] * N) points; points left over when the fractions sum
/// to less than one are not assigned.
inline std::vector<OwnerSplit> SplitOwners(const Dataset& data,
                                           const std::vector<double>& fractions,
                                           std::uint64_t seed) {
  Require(!fractions.empty(), "at least one owner is required");
  double total = 0.0;
  for (double f : fractions) {
    Require(f >= 0.0, "owner fractions must be non-negative");
    total += f;
  }
  Require(total <= 1.0 + 1e-12, "owner fractions sum to more than 1");

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.Shuffle(order);

  std::vector<OwnerSplit> owners;
  std::size_t next = 0;
  for (std::size_t k = 0; k < fractions.size(); ++k) {
    auto count = static_cast<std::size_t>(
        std::floor(fractions[k] * static_cast<double>(data.size()) + 1e-9));
    count = std::min(count, data.size() - next);
    OwnerSplit owner{static_cast<int>(k + 1), Dataset(data.dim()), {}};
    owner.dataset.reserve(count);
    for (std::size_t j = 0; j < count; ++j, ++next) {
      owner.dataset.push_back(data[order[next]]);
      owner.source_rows.push_back(order[next]);
    }
    owners.push_back(std::move(owner));
  }
  return owners;
}

/// Explicit split: owner k receives exactly the rows listed in `rows[k-1]`.
inline std::vector<OwnerSplit> SplitOwnersByRows(
    const Dataset& data, const std::vector<std::vector<std::size_t>>& rows) {
  Require(!rows.empty(), "at least one owner is required");
  std::vector<bool> used(data.size(), false);
  std::vector<OwnerSplit> owners;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    OwnerSplit owner{static_cast<int>(k + 1), Dataset(data.dim()), {}};
    for (std::size_t r : rows[k]) {
      Require(r < data.size(), "row index " + std::to_string(r) + " out of range");
      Require(!used[r], "row " + std::to_string(r) + " assigned to two owners");
      used[r] = true;
      owner.dataset.push_back(data[r]);
      owner.source_rows.push_back(r);
    }
    owners.push_back(std::move(owner));
  }
  return owners;
}

// ---------------------------------------------------------------------------
// Synthetic covariate shift

/// Axis-aligned Gaussian: per-coordinate mean and variance.
struct GaussianSpec {
  std::vector<double> mean;
  std::vector<double> variance;

  static GaussianSpec Isotropic(std::size_t dim, double mean, double variance) {
    return {std::vector<double>(dim, mean), std::vector<double>(dim, variance)};
  }
};

struct GaussianComponent {
  std::size_t count = 0;
  GaussianSpec params;
};

inline Dataset SampleGaussian(const GaussianSpec& spec, std::size_t count,
                              Rng& rng) {
  const std::size_t dim = spec.mean.size();
  Require(spec.variance.size() == dim, "mean and variance dimensions differ");
  for (double v : spec.variance) Require(v > 0.0, "variance must be positive");
  Dataset out(dim);
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    DataPoint p(dim);
    for (std::size_t c = 0; c < dim; ++c)
      p[c] = rng.Normal(spec.mean[c], std::sqrt(spec.variance[c]));
    out.push_back(std::move(p));
  }
  return out;
}

struct SynthShiftSpec {
  std::size_t dim = 0;
  // owners[k] lists the Gaussian components owner k+1 is drawn from, so an
  // owner can hold a mixture (for example a share of a second population).
  std::vector<std::vector<GaussianComponent>> owners;
  std::size_t validation_size = 0;
  GaussianSpec validation;
  std::uint64_t seed = 0;
};

struct SynthShiftInstance {
  std::vector<OwnerSplit> owners;
  Dataset validation;
};

inline SynthShiftInstance SynthShift(const SynthShiftSpec& spec) {
  SynthShiftInstance out;
  std::size_t row = 0;
  for (std::size_t k = 0; k < spec.owners.size(); ++k) {
    Rng rng(DeriveSeed(spec.seed, k + 1));
    OwnerSplit owner{static_cast<int>(k + 1), Dataset(spec.dim), {}};
    for (const auto& comp : spec.owners[k]) {
      Require(comp.params.mean.size() == spec.dim, "component dimension mismatch");
      for (const auto& p : SampleGaussian(comp.params, comp.count, rng)) {
        owner.dataset.push_back(p);
        owner.source_rows.push_back(row++);
      }
    }
    out.owners.push_back(std::move(owner));
  }
  Require(spec.validation.mean.size() == spec.dim, "validation dimension mismatch");
  Rng vrng(DeriveSeed(spec.seed, 0));
  out.validation = SampleGaussian(spec.validation, spec.validation_size, vrng);
  return out;
}

// ---------------------------------------------------------------------------
// Optional standardization, fitted on the validation set only.

class Standardizer {
 public:
  static Standardizer Fit(const Dataset& reference) {
    Require(!reference.empty(), "cannot standardize against an empty dataset");
    const std::size_t dim = reference.dim();
    Standardizer s;
    s.mean_.assign(dim, 0.0);
    s.scale_.assign(dim, 0.0);
    const double n = static_cast<double>(reference.size());
    for (const auto& p : reference)
      for (std::size_t c = 0; c < dim; ++c) s.mean_[c] += p[c];
    for (auto& m : s.mean_) m /= n;
    for (const auto& p : reference)
      for (std::size_t c = 0; c < dim; ++c)
        s.scale_[c] += (p[c] - s.mean_[c]) * (p[c] - s.mean_[c]);
    for (auto& v : s.scale_) {
      v = std::sqrt(v / n);
      if (v == 0.0) v = 1.0;
    }
    return s;
  }

  Dataset Apply(const Dataset& data) const {
    Require(data.dim() == mean_.size() || data.empty(), "dimension mismatch");
    Dataset out(data.dim());
    out.reserve(data.size());
    for (const auto& p : data) {
      DataPoint q(p.size());
      for (std::size_t c = 0; c < p.size(); ++c) q[c] = (p[c] - mean_[c]) / scale_[c];
      out.push_back(std::move(q));
    }
    return out;
  }

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
};

}  // namespace dpsumm

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

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dpsumm/baselines.hpp"
#include "dpsumm/core_data.hpp"
#include "dpsumm/error.hpp"
#include "dpsumm/kernel.hpp"
#include "dpsumm/privacy.hpp"
#include "dpsumm/protocol.hpp"
#include "dpsumm/random.hpp"
#include "json.hpp"

namespace dpsumm {

/// Shortest decimal text that parses back to the same double.
inline std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

enum class RunMode { kTheory, kPractical, kNoiseOff };

inline RunMode ParseRunMode(const std::string& s) {
  if (s == "theory") return RunMode::kTheory;
  if (s == "practical") return RunMode::kPractical;
  if (s == "noise_off") return RunMode::kNoiseOff;
  throw Error("unknown mode '" + s + "' (expected theory, practical or noise_off)");
}

inline std::string RunModeName(RunMode m) {
  switch (m) {
    case RunMode::kTheory: return "theory";
    case RunMode::kPractical: return "practical";
    case RunMode::kNoiseOff: return "noise_off";
  }
  return "";
}

/// Flat experiment description. Every key is optional; see the README for
/// the full key list.
struct ExperimentConfig {
  // Data: synthetic two-population shift unless owner_csvs is set.
  std::vector<std::string> owner_csvs;
  std::string validation_csv;
  std::string seed_csv;
  bool csv_header = true;
  bool standardize = false;

  std::size_t dim = 20;
  std::size_t points_per_owner = 500;
  std::vector<double> target_fractions = {0.05, 0.1, 0.2, 0.4};
  double source_mean = 0.0;
  double target_mean = 2.0;
  double variance = 1.0;
  std::size_t validation_size = 500;
  std::size_t seed_set_size = 5;
  double seed_set_variance = 4.0;

  // Protocol.
  RunMode mode = RunMode::kPractical;
  std::size_t d = 140;
  double gamma = 0.1;
  double eps_auc = 0.5;
  std::size_t tau = 0;  // 0 selects floor(K^(2/3))
  BidForm bid_form = BidForm::kDerived;
  bool warm_start = false;
  int events_per_iter = 2;
  double delta_tilde = 1e-4;
  bool track_gain_shortfall = false;
  PracticalParams practical;
  double eps_target = 1.0;     // theory mode
  std::size_t theory_T = 0;    // theory mode; 0 selects d^2

  // Experiment.
  std::vector<std::string> algorithms = {"private", "greedy", "uniform"};
  std::string greedy_variant = "hashed";  // or "exact"
  std::vector<std::size_t> sizes = {50, 100};
  std::size_t repetitions = 5;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::size_t jobs = 1;
  bool write_ledgers = false;

  void Validate() const {
    Require(repetitions >= 1, "repetitions must be at least 1");
    Require(!sizes.empty(), "sizes must be non-empty");
    for (auto s : sizes) Require(s >= 1, "sizes must be positive");
    Require(jobs >= 1, "jobs must be at least 1");
    Require(greedy_variant == "hashed" || greedy_variant == "exact",
            "greedy_variant must be hashed or exact");
    std::set<std::string> seen;
    for (const auto& a : algorithms) {
      Require(a == "private" || a == "greedy" || a == "uniform", "unknown algorithm '" + a + "'");
      Require(seen.insert(a).second, "duplicate algorithm '" + a + "'");
    }
    if (owner_csvs.empty()) {
      Require(dim >= 1 && points_per_owner >= 1 && validation_size >= 1,
              "synthetic sizes must be positive");
      Require(!target_fractions.empty(), "target_fractions must name at least one owner");
      for (double f : target_fractions)
        Require(f >= 0.0 && f <= 1.0, "target_fractions must lie in [0, 1]");
      Require(variance > 0.0 && seed_set_variance > 0.0, "variances must be positive");
    } else {
      Require(!validation_csv.empty(), "validation_csv is required with owner_csvs");
    }
  }

  std::size_t Owners() const {
    return owner_csvs.empty() ? target_fractions.size() : owner_csvs.size();
  }
};

namespace detail {

template <typename T>
T Get(const nlohmann::json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error("config key '" + key + "' has the wrong type");
  }
}

inline BidForm ParseBidForm(const std::string& s) {
  if (s == "derived") return BidForm::kDerived;
  if (s == "literal") return BidForm::kLiteral;
  throw Error("unknown bid_form '" + s + "'");
}

}  // namespace detail

inline ExperimentConfig ParseExperimentConfig(const nlohmann::json& j) {
  Require(j.is_object(), "config must be a JSON object");
  ExperimentConfig c;
  for (const auto& [key, v] : j.items()) {
    using detail::Get;
    if (key == "owner_csvs") c.owner_csvs = Get<std::vector<std::string>>(v, key);
    else if (key == "validation_csv") c.validation_csv = Get<std::string>(v, key);
    else if (key == "seed_csv") c.seed_csv = Get<std::string>(v, key);
    else if (key == "csv_header") c.csv_header = Get<bool>(v, key);
    else if (key == "standardize") c.standardize = Get<bool>(v, key);
    else if (key == "dim") c.dim = Get<std::size_t>(v, key);
    else if (key == "points_per_owner") c.points_per_owner = Get<std::size_t>(v, key);
    else if (key == "target_fractions") c.target_fractions = Get<std::vector<double>>(v, key);
    else if (key == "source_mean") c.source_mean = Get<double>(v, key);
    else if (key == "target_mean") c.target_mean = Get<double>(v, key);
    else if (key == "variance") c.variance = Get<double>(v, key);
    else if (key == "validation_size") c.validation_size = Get<std::size_t>(v, key);
    else if (key == "seed_set_size") c.seed_set_size = Get<std::size_t>(v, key);
    else if (key == "seed_set_variance") c.seed_set_variance = Get<double>(v, key);
    else if (key == "mode") c.mode = ParseRunMode(Get<std::string>(v, key));
    else if (key == "d") c.d = Get<std::size_t>(v, key);
    else if (key == "gamma") c.gamma = Get<double>(v, key);
    else if (key == "eps_auc") c.eps_auc = Get<double>(v, key);
    else if (key == "tau") c.tau = Get<std::size_t>(v, key);
    else if (key == "bid_form") c.bid_form = detail::ParseBidForm(Get<std::string>(v, key));
    else if (key == "warm_start") c.warm_start = Get<bool>(v, key);
    else if (key == "events_per_iter") c.events_per_iter = Get<int>(v, key);
    else if (key == "delta_tilde") c.delta_tilde = Get<double>(v, key);
    else if (key == "track_gain_shortfall") c.track_gain_shortfall = Get<bool>(v, key);
    else if (key == "t_init") c.practical.t_init = Get<std::size_t>(v, key);
    else if (key == "t_subs") c.practical.t_subs = Get<std::size_t>(v, key);
    else if (key == "eps_v") c.practical.eps_v = Get<double>(v, key);
    else if (key == "eps_first") c.practical.eps_first = Get<double>(v, key);
    else if (key == "eps_subs") c.practical.eps_subs_numerator = Get<double>(v, key);
    else if (key == "eps_target") c.eps_target = Get<double>(v, key);
    else if (key == "theory_T") c.theory_T = Get<std::size_t>(v, key);
    else if (key == "algorithms") c.algorithms = Get<std::vector<std::string>>(v, key);
    else if (key == "greedy_variant") c.greedy_variant = Get<std::string>(v, key);
    else if (key == "sizes") c.sizes = Get<std::vector<std::size_t>>(v, key);
    else if (key == "repetitions") c.repetitions = Get<std::size_t>(v, key);
    else if (key == "seed") c.seed = Get<std::uint64_t>(v, key);
    else if (key == "output_dir") c.output_dir = Get<std::string>(v, key);
    else if (key == "jobs") c.jobs = Get<std::size_t>(v, key);
    else if (key == "write_ledgers") c.write_ledgers = Get<bool>(v, key);
    else throw Error("unknown config key '" + key + "'");
  }
  c.Validate();
  return c;
}

inline ExperimentConfig LoadExperimentConfig(const std::string& path) {
  std::ifstream in(path);
  Require(in.good(), "cannot open config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("config " + path + " is not valid JSON: " + e.what());
  }
  return ParseExperimentConfig(j);
}

inline nlohmann::json ToJson(const ExperimentConfig& c) {
  return {{"owner_csvs", c.owner_csvs},
          {"validation_csv", c.validation_csv},
          {"seed_csv", c.seed_csv},
          {"csv_header", c.csv_header},
          {"standardize", c.standardize},
          {"dim", c.dim},
          {"points_per_owner", c.points_per_owner},
          {"target_fractions", c.target_fractions},
          {"source_mean", c.source_mean},
          {"target_mean", c.target_mean},
          {"variance", c.variance},
          {"validation_size", c.validation_size},
          {"seed_set_size", c.seed_set_size},
          {"seed_set_variance", c.seed_set_variance},
          {"mode", RunModeName(c.mode)},
          {"d", c.d},
          {"gamma", c.gamma},
          {"eps_auc", c.eps_auc},
          {"tau", c.tau},
          {"bid_form", c.bid_form == BidForm::kDerived ? "derived" : "literal"},
          {"warm_start", c.warm_start},
          {"events_per_iter", c.events_per_iter},
          {"delta_tilde", c.delta_tilde},
          {"track_gain_shortfall", c.track_gain_shortfall},
          {"t_init", c.practical.t_init},
          {"t_subs", c.practical.t_subs},
          {"eps_v", c.practical.eps_v},
          {"eps_first", c.practical.eps_first},
          {"eps_subs", c.practical.eps_subs_numerator},
          {"eps_target", c.eps_target},
          {"theory_T", c.theory_T},
          {"algorithms", c.algorithms},
          {"greedy_variant", c.greedy_variant},
          {"sizes", c.sizes},
          {"repetitions", c.repetitions},
          {"seed", c.seed},
          {"output_dir", c.output_dir},
          {"jobs", c.jobs},
          {"write_ledgers", c.write_ledgers}};
}

/// One problem instance shared by every algorithm in a cell.
struct Instance {
  std::vector<OwnerSplit> owners;
  Dataset validation;
  Dataset seed_set;
};

/// Seed of repetition `rep`; the same instance is used for every size.
inline std::uint64_t RepetitionSeed(std::uint64_t master, std::size_t rep) {
  return DeriveSeed(master, rep + 1);
}

inline Instance BuildInstance(const ExperimentConfig& c, std::uint64_t rep_seed) {
  Instance inst;
  std::optional<Standardizer> standardizer;
  if (!c.owner_csvs.empty()) {
    inst.validation = LoadCsv(c.validation_csv, c.csv_header);
    for (std::size_t k = 0; k < c.owner_csvs.size(); ++k) {
      Dataset data = LoadCsv(c.owner_csvs[k], c.csv_header);
      Require(data.dim() == inst.validation.dim(),
              "owner file " + c.owner_csvs[k] + " has the wrong dimension");
      std::vector<std::size_t> rows(data.size());
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
      inst.owners.push_back({static_cast<int>(k + 1), std::move(data), std::move(rows)});
    }
    if (c.standardize) {
      standardizer = Standardizer::Fit(inst.validation);
      inst.validation = standardizer->Apply(inst.validation);
      for (auto& o : inst.owners) o.dataset = standardizer->Apply(o.dataset);
    }
  } else {
    SynthShiftSpec spec;
    spec.dim = c.dim;
    spec.seed = DeriveSeed(rep_seed, 10);
    spec.validation_size = c.validation_size;
    spec.validation = GaussianSpec::Isotropic(c.dim, c.target_mean, c.variance);
    for (double f : c.target_fractions) {
      const auto target = static_cast<std::size_t>(
          std::llround(f * static_cast<double>(c.points_per_owner)));
      spec.owners.push_back(
          {{c.points_per_owner - target, GaussianSpec::Isotropic(c.dim, c.source_mean, c.variance)},
           {target, GaussianSpec::Isotropic(c.dim, c.target_mean, c.variance)}});
    }
    auto synth = SynthShift(spec);
    inst.owners = std::move(synth.owners);
    inst.validation = std::move(synth.validation);
  }
  if (!c.seed_csv.empty()) {
    inst.seed_set = LoadCsv(c.seed_csv, c.csv_header);
    Require(inst.seed_set.dim() == inst.validation.dim(), "seed set has the wrong dimension");
    if (standardizer) inst.seed_set = standardizer->Apply(inst.seed_set);
  } else {
    Rng rng(DeriveSeed(rep_seed, 11));
    inst.seed_set = SampleGaussian(
        GaussianSpec::Isotropic(inst.validation.dim(), 0.0, c.seed_set_variance),
        c.seed_set_size, rng);
  }
  return inst;
}

/// Protocol configuration for one cell.
inline ProtocolConfig MakeProtocolConfig(const ExperimentConfig& c, std::size_t p, std::size_t K,
                                         std::uint64_t rep_seed) {
  ProtocolConfig pc;
  if (c.mode == RunMode::kTheory) {
    const std::size_t T = c.theory_T > 0 ? c.theory_T : c.d * c.d;
    pc = ProtocolConfig::Theory(MakeSchedule(c.eps_target, c.delta_tilde, p, c.d, K, T), c.gamma,
                                rep_seed);
  } else {
    pc.p = p;
    pc.d = c.d;
    pc.gamma = c.gamma;
    pc.seed = rep_seed;
    pc.regime = EpsilonRegime::kPractical;
    pc.practical = c.practical;
    pc.auction = {c.eps_auc, c.tau > 0 ? c.tau : AuctionThreshold(K)};
    pc.delta_tilde = c.delta_tilde;
    if (c.mode == RunMode::kNoiseOff) pc.release = ReleaseMode::kExact;
  }
  pc.bid_form = c.bid_form;
  pc.warm_start = c.warm_start;
  pc.events_per_iter = c.events_per_iter;
  pc.track_gain_shortfall = c.track_gain_shortfall;
  return pc;
}

struct MetricsRow {
  std::string algorithm;
  std::size_t size = 0;
  std::uint64_t seed = 0;
  std::optional<double> mmd_sq;
  std::optional<double> pct_vs_greedy;
  std::optional<double> accessed;
  std::optional<double> eps;
  std::optional<double> delta;
  std::string error;  // set when the sub-run failed
};

inline constexpr char kMetricsHeader[] = "alg,size,seed,mmd_sq,pct_vs_greedy,accessed,eps,delta";

inline void WriteMetricsCsv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  auto cell = [](const std::optional<double>& v) { return v ? FormatDouble(*v) : "NA"; };
  out << kMetricsHeader << "\n";
  for (const auto& r : rows) {
    out << r.algorithm << "," << r.size << "," << r.seed << "," << cell(r.mmd_sq) << ","
        << cell(r.pct_vs_greedy) << "," << cell(r.accessed) << "," << cell(r.eps) << ","
        << cell(r.delta) << "\n";
  }
}

/// One row per epoch. `ranked` lists owner:point:bid in rank order and
/// `requested` lists owner:point for transmitted points.
inline void WriteTraceCsv(std::ostream& out, const std::vector<EpochRecord>& trace) {
  out << "epoch,winner_owner,winner_point,winner_bid,exact_gain,mmd_sq,accessed_total,"
         "verification_failures,owner_epsilon,kernel_mean_error,gain_shortfall,ranked,requested\n";
  for (const auto& r : trace) {
    out << r.epoch << "," << r.winner_owner << "," << r.winner_point << ","
        << FormatDouble(r.winner_bid) << "," << FormatDouble(r.exact_gain) << ","
        << FormatDouble(r.mmd_sq) << "," << r.accessed_total << "," << r.verification_failures
        << "," << FormatDouble(r.owner_epsilon) << "," << FormatDouble(r.kernel_mean_error) << ","
        << (std::isnan(r.gain_shortfall) ? "NA" : FormatDouble(r.gain_shortfall)) << ",";
    for (std::size_t i = 0; i < r.ranked.size(); ++i)
      out << (i ? ";" : "") << r.ranked[i].owner_id << ":" << r.ranked[i].point_id << ":"
          << FormatDouble(r.ranked[i].value);
    out << ",";
    for (std::size_t i = 0; i < r.requested.size(); ++i)
      out << (i ? ";" : "") << r.requested[i].owner_id << ":" << r.requested[i].point_id;
    out << "\n";
  }
}

struct CellOutput {
  std::vector<MetricsRow> rows;
  nlohmann::json meta;
  std::string trace_csv;
  nlohmann::json ledgers;
};

inline std::string StatusName(ProtocolStatus s) {
  return s == ProtocolStatus::kComplete ? "complete" : "owners_exhausted";
}

/// Runs every enabled algorithm on one (size, repetition) cell.
inline CellOutput RunCell(const ExperimentConfig& c, std::size_t p, std::size_t rep) {
  CellOutput out;
  const std::uint64_t rep_seed = RepetitionSeed(c.seed, rep);
  out.meta = {{"size", p}, {"rep", rep}, {"seed", rep_seed}};
  const KernelParams kp{c.gamma};
  auto enabled = [&](const std::string& a) {
    return std::find(c.algorithms.begin(), c.algorithms.end(), a) != c.algorithms.end();
  };

  Instance inst;
  try {
    inst = BuildInstance(c, rep_seed);
  } catch (const std::exception& e) {
    for (const auto& a : c.algorithms) out.rows.push_back({a, p, rep_seed, {}, {}, {}, {}, {}, e.what()});
    out.meta["error"] = e.what();
    return out;
  }
  const std::size_t K = inst.owners.size();
  std::size_t total_points = 0;
  for (const auto& o : inst.owners) total_points += o.dataset.size();

  std::optional<double> greedy_mmd;
  MetricsRow greedy_row{"greedy", p, rep_seed, {}, {}, {}, {}, {}, {}};
  if (enabled("greedy")) {
    try {
      BaselineResult g;
      if (c.greedy_variant == "exact") {
        g = GreedyNonPrivate(inst.owners, inst.validation, p, kp, inst.seed_set);
      } else {
        const auto pc = MakeProtocolConfig(c, std::max<std::size_t>(p, 2), K, rep_seed);
        g = GreedyHashed(inst.owners, inst.validation, p, ProtocolBasis(pc, inst.validation.dim()),
                         inst.seed_set, c.bid_form);
      }
      greedy_mmd = MmdSquared(g.summary, inst.validation, kp);
      greedy_row.mmd_sq = greedy_mmd;
      greedy_row.pct_vs_greedy = 0.0;
      greedy_row.accessed = static_cast<double>(total_points);
      greedy_row.eps = std::numeric_limits<double>::infinity();
      greedy_row.delta = 0.0;
      out.meta["greedy"] = {{"complete", g.complete}};
    } catch (const std::exception& e) {
      greedy_row.error = e.what();
      out.meta["greedy"] = {{"error", e.what()}};
    }
  }
  auto pct = [&](double v) -> std::optional<double> {
    if (!greedy_mmd || *greedy_mmd == 0.0) return std::nullopt;
    return 100.0 * (v - *greedy_mmd) / *greedy_mmd;
  };

  for (const auto& alg : c.algorithms) {
    if (alg == "greedy") {
      out.rows.push_back(greedy_row);
      continue;
    }
    MetricsRow row{alg, p, rep_seed, {}, {}, {}, {}, {}, {}};
    try {
      if (alg == "private") {
        const auto pc = MakeProtocolConfig(c, p, K, rep_seed);
        const auto r = RunProtocol(inst.owners, inst.validation, inst.seed_set, pc);
        const double mmd = MmdSquared(r.summary, inst.validation, kp);
        row.mmd_sq = mmd;
        row.pct_vs_greedy = pct(mmd);
        row.accessed = static_cast<double>(r.accessed_total);
        double eps = 0.0, delta = 0.0;
        nlohmann::json ledgers = nlohmann::json::array();
        ledgers.push_back(r.validation_ledger.ToJson(pc.delta_tilde));
        for (const auto& l : r.owner_ledgers) {
          const auto comp = l.Compose(pc.delta_tilde);
          eps = std::max(eps, comp.epsilon);
          delta = std::max(delta, comp.delta);
          ledgers.push_back(l.ToJson(pc.delta_tilde));
        }
        const bool accounted = pc.release == ReleaseMode::kPrivate;
        row.eps = accounted ? eps : std::numeric_limits<double>::infinity();
        row.delta = accounted ? delta : 0.0;
        const auto v = r.validation_ledger.Compose(pc.delta_tilde);
        const auto sm = r.summary_ledger.Compose(pc.delta_tilde);
        ledgers.push_back(r.summary_ledger.ToJson(pc.delta_tilde));
        out.meta["private"] = {{"status", StatusName(r.status)},
                               {"accessed_total", r.accessed_total},
                               {"parsimony", ParsimonyFactor(r, inst.validation.size())},
                               {"summary_size", r.summary.size()},
                               {"removed_owners", r.removed_owners},
                               {"exhausted_owners", r.exhausted_owners},
                               {"basis", r.basis},
                               {"owner_epsilon", eps},
                               {"owner_delta", delta},
                               {"validation_epsilon", v.epsilon},
                               {"validation_delta", v.delta},
                               {"summary_epsilon", sm.epsilon},
                               {"summary_delta", sm.delta}};
        std::ostringstream trace;
        WriteTraceCsv(trace, r.trace);
        out.trace_csv = trace.str();
        out.ledgers = std::move(ledgers);
      } else {
        Rng rng(DeriveSeed(rep_seed, 12));
        const auto u = UniformSampling(inst.owners, p, rng);
        const double mmd = MmdSquared(u.summary, inst.validation, kp);
        row.mmd_sq = mmd;
        row.pct_vs_greedy = pct(mmd);
        row.accessed = static_cast<double>(p);
        row.eps = std::numeric_limits<double>::infinity();
        row.delta = 0.0;
      }
    } catch (const std::exception& e) {
      row.error = e.what();
      out.meta[alg] = {{"error", e.what()}};
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

struct ExperimentResult {
  std::vector<MetricsRow> rows;
  nlohmann::json metadata;
};

/// Runs every (size, repetition) cell, optionally on several threads, and
/// writes metrics.csv, metadata.json and per-cell traces under
/// `config.output_dir`. Output depends only on the configuration.
inline ExperimentResult RunExperiment(const ExperimentConfig& config) {
  config.Validate();
  namespace fs = std::filesystem;
  struct CellId {
    std::size_t size;
    std::size_t rep;
  };
  std::vector<CellId> cells;
  for (auto p : config.sizes)
    for (std::size_t r = 0; r < config.repetitions; ++r) cells.push_back({p, r});

  std::vector<CellOutput> outputs(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++)
      outputs[i] = RunCell(config, cells[i].size, cells[i].rep);
  };
  const std::size_t n_threads = std::min(config.jobs, cells.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult result;
  nlohmann::json cell_meta = nlohmann::json::array();
  for (auto& o : outputs) {
    for (auto& r : o.rows) result.rows.push_back(r);
    cell_meta.push_back(o.meta);
  }
  auto echo = ToJson(config);
  echo.erase("jobs");
  echo.erase("output_dir");
  result.metadata = {{"config", echo}, {"cells", cell_meta}, {"rows", result.rows.size()}};
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& r : result.rows)
    if (!r.error.empty())
      failures.push_back({{"alg", r.algorithm}, {"size", r.size}, {"seed", r.seed}, {"error", r.error}});
  result.metadata["failures"] = failures;

  const fs::path dir(config.output_dir);
  fs::create_directories(dir / "traces");
  {
    std::ofstream f(dir / "metrics.csv", std::ios::binary);
    WriteMetricsCsv(f, result.rows);
  }
  {
    std::ofstream f(dir / "metadata.json", std::ios::binary);
    f << result.metadata.dump(2) << "\n";
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string stem =
        "size" + std::to_string(cells[i].size) + "_rep" + std::to_string(cells[i].rep);
    if (!outputs[i].trace_csv.empty()) {
      std::ofstream f(dir / "traces" / (stem + ".csv"), std::ios::binary);
      f << outputs[i].trace_csv;
    }
    if (config.write_ledgers && !outputs[i].ledgers.is_null()) {
      fs::create_directories(dir / "ledgers");
      std::ofstream f(dir / "ledgers" / (stem + ".json"), std::ios::binary);
      f << outputs[i].ledgers.dump(2) << "\n";
    }
  }
  return result;
}

}  // namespace dpsumm

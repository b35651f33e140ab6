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

// Command-line front end: experiment runs, composition arithmetic and
// exhaustive oracle checks.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dpsumm/dpsumm.hpp"

namespace {

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> mode;
  std::optional<std::size_t> jobs;
  bool ledger = false;
};

int RunCommand(const RunArgs& a) {
  auto config = dpsumm::LoadExperimentConfig(a.config);
  if (a.seed) config.seed = *a.seed;
  if (a.out) config.output_dir = *a.out;
  if (a.mode) config.mode = dpsumm::ParseRunMode(*a.mode);
  if (a.jobs) config.jobs = *a.jobs;
  if (a.ledger) config.write_ledgers = true;
  const auto result = dpsumm::RunExperiment(config);
  std::cout << "wrote " << result.rows.size() << " metric rows to " << config.output_dir
            << "/metrics.csv\n";
  std::size_t failed = 0;
  for (const auto& r : result.rows) failed += r.error.empty() ? 0 : 1;
  if (failed > 0) std::cout << failed << " sub-runs failed; see metadata.json\n";
  return 0;
}

struct ComposeArgs {
  std::optional<double> eps;
  std::optional<std::uint64_t> iters;
  std::optional<int> events_per_iter;
  std::optional<double> delta;
  std::optional<std::string> preset;
  std::size_t p = 100;
  std::size_t t_subs = 5;
};

int ComposeCommand(const ComposeArgs& a) {
  double eps = 0.0, delta = 0.0;
  std::uint64_t iters = 0;
  int per_iter = 1;
  std::optional<double> reported;
  if (a.preset) {
    if (*a.preset == "validation") {
      eps = 0.01;
      iters = 1656;
      delta = 0.01;
      reported = 1.4;
    } else {
      eps = 0.01 / std::sqrt(static_cast<double>(a.p * a.t_subs));
      iters = a.p * a.t_subs;
      delta = 1e-4;
      reported = 0.043;
    }
  }
  if (a.eps) eps = *a.eps;
  if (a.iters) iters = *a.iters;
  if (a.events_per_iter) per_iter = *a.events_per_iter;
  if (a.delta) delta = *a.delta;
  dpsumm::Require(eps > 0.0, "--eps must be positive (or use --preset)");
  dpsumm::Require(iters > 0, "--iters must be positive (or use --preset)");
  dpsumm::Require(per_iter == 1 || per_iter == 2, "--events-per-iter must be 1 or 2");

  const dpsumm::PrivacyEvent e{eps, 0.0, "h2", iters * static_cast<std::uint64_t>(per_iter)};
  const auto c = dpsumm::Compose(std::span<const dpsumm::PrivacyEvent>(&e, 1), delta);
  using dpsumm::FormatDouble;
  std::cout << "events       " << c.events << " x eps " << FormatDouble(eps) << "\n"
            << "delta_tilde  " << FormatDouble(delta) << "\n"
            << "basic        " << FormatDouble(c.basic) << "\n"
            << "advanced     " << FormatDouble(c.advanced) << "\n"
            << "tight        " << FormatDouble(c.tight) << "\n"
            << "epsilon      " << FormatDouble(c.epsilon) << "  (min of the three)\n"
            << "delta        " << FormatDouble(c.delta) << "\n";
  if (reported) std::cout << "reported     " << FormatDouble(*reported) << "  (reference value)\n";
  return 0;
}

struct OracleArgs {
  std::size_t instances = 50;
  std::size_t n = 10;
  std::size_t p = 3;
  std::size_t validation = 4;
  std::size_t seed_points = 2;
  std::size_t dim = 5;
  double gamma = 0.1;
  std::uint64_t seed = 1;
};

int OracleCommand(const OracleArgs& a) {
  const dpsumm::KernelParams kp{a.gamma};
  std::size_t normalized_fail = 0, raw_fail = 0;
  std::cout << "instance,f_greedy,f_opt,ratio,raw_greedy,raw_opt\n";
  for (std::size_t i = 0; i < a.instances; ++i) {
    const auto inst = dpsumm::MakeSeparatedInstance(a.n, a.validation, a.seed_points, a.dim, kp,
                                                    dpsumm::DeriveSeed(a.seed, i));
    dpsumm::Require(dpsumm::SubmodCondition(dpsumm::KernelMatrix(inst.AllPoints(), kp)),
                    "generated instance violates the submodularity condition");
    const auto r = dpsumm::CompareGreedyWithOptimum(inst, a.p, kp);
    normalized_fail += r.normalized_ok ? 0 : 1;
    raw_fail += r.raw_ok ? 0 : 1;
    using dpsumm::FormatDouble;
    std::cout << i << "," << FormatDouble(r.greedy) << "," << FormatDouble(r.optimum) << ","
              << FormatDouble(r.optimum != 0.0 ? r.greedy / r.optimum : 1.0) << ","
              << FormatDouble(r.raw_greedy) << "," << FormatDouble(r.raw_optimum) << "\n";
  }
  std::cout << "seeded objective violations: " << normalized_fail << "/" << a.instances << "\n"
            << "raw objective violations:    " << raw_fail << "/" << a.instances << "\n";
  return normalized_fail == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Private distributed data summarization"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment described by a JSON config");
  run_cmd->add_option("config", run.config, "Config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run.seed, "Master seed (overrides the config)");
  run_cmd->add_option("--out", run.out, "Output directory (overrides the config)");
  run_cmd->add_option("--mode", run.mode, "theory, practical or noise_off")
      ->check(CLI::IsMember({"theory", "practical", "noise_off"}));
  run_cmd->add_option("--jobs", run.jobs, "Worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--ledger", run.ledger, "Write per-cell privacy ledgers");

  ComposeArgs compose;
  auto* compose_cmd = app.add_subcommand("compose", "Compose a run of identical private releases");
  compose_cmd->add_option("--eps", compose.eps, "Epsilon per event")->check(CLI::PositiveNumber);
  compose_cmd->add_option("--iters", compose.iters, "Mechanism iterations");
  compose_cmd->add_option("--events-per-iter", compose.events_per_iter, "1 or 2")
      ->check(CLI::IsMember({1, 2}));
  compose_cmd->add_option("--delta", compose.delta, "delta_tilde in (0, 1/e]");
  compose_cmd->add_option("--preset", compose.preset, "validation or summary")
      ->check(CLI::IsMember({"validation", "summary"}));
  compose_cmd->add_option("--p", compose.p, "Summary size for the summary preset")
      ->check(CLI::PositiveNumber);
  compose_cmd->add_option("--t-subs", compose.t_subs, "Per-epoch iterations for the summary preset")
      ->check(CLI::PositiveNumber);

  OracleArgs oracle;
  auto* oracle_cmd =
      app.add_subcommand("oracle", "Compare greedy with exhaustive search on separated instances");
  oracle_cmd->add_option("--instances", oracle.instances, "Number of instances");
  oracle_cmd->add_option("--n", oracle.n, "Candidates per instance")->check(CLI::Range(1, 20));
  oracle_cmd->add_option("--p", oracle.p, "Summary size")->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--validation", oracle.validation, "Validation points")
      ->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--seed-points", oracle.seed_points, "Seed-set points");
  oracle_cmd->add_option("--dim", oracle.dim, "Point dimension")->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--gamma", oracle.gamma, "Kernel bandwidth")->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--seed", oracle.seed, "Master seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return RunCommand(run);
    if (*compose_cmd) return ComposeCommand(compose);
    if (*oracle_cmd) return OracleCommand(oracle);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

// Copyright 2026 The ncsched Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. Exit codes: 0 success, 1 unexpected error,
// 2 configuration error, 3 invariant violation.

#include <omp.h>

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "ncsched/config.hpp"
#include "ncsched/errors.hpp"
#include "ncsched/experiments.hpp"

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<double> epsilon;
  std::optional<int> receivers;
  std::optional<int> horizon;
  std::optional<std::int64_t> replications;
  std::optional<int> frames;
  std::optional<double> rho;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_path, "YAML experiment config");
  cmd->add_option("--seed", f.seed, "Master seed (u64)");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--workers", f.workers, "OpenMP worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--epsilon", f.epsilon, "Erasure probability for every receiver");
  cmd->add_option("--receivers", f.receivers, "Receiver count");
  cmd->add_option("--horizon", f.horizon, "Slots per frame (T)");
}

ncsched::ExperimentConfig build_config(ncsched::ExperimentKind kind, const Flags& f) {
  using ncsched::ConfigError;
  ncsched::ExperimentConfig c;
  if (!f.config_path.empty()) c = ncsched::load_config(f.config_path);
  c.kind = kind;
  if (kind == ncsched::ExperimentKind::kLearn && f.config_path.empty()) {
    c.policy = ncsched::LearningPolicy{};
  }
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.output_dir = *f.out;
  if (f.horizon) c.horizon = *f.horizon;
  if (f.epsilon || f.receivers) {
    const double eps = f.epsilon.value_or(c.channel.worst_erasure());
    const int n = f.receivers.value_or(c.channel.receivers());
    if (!(eps >= 0.0 && eps <= 1.0)) throw ConfigError("--epsilon", "must lie in [0, 1]");
    if (n < 1) throw ConfigError("--receivers", "must be >= 1");
    c.channel = ncsched::ChannelModel::homogeneous(eps, n);
  }
  if (f.replications) c.simulate.replications = *f.replications;
  if (f.frames) {
    if (kind == ncsched::ExperimentKind::kLearn) c.learn.frames = *f.frames;
    if (kind == ncsched::ExperimentKind::kMultiflow) c.multiflow.frames = *f.frames;
    if (kind == ncsched::ExperimentKind::kRegion) c.region.frames = *f.frames;
  }
  if (f.rho) c.multiflow.rho = *f.rho;
  ncsched::validate_config(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deadline-aware network-coding scheduler experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ncsched::library_version());

  Flags flags;
  struct Entry {
    ncsched::ExperimentKind kind;
    const char* help;
  };
  const Entry entries[] = {
      {ncsched::ExperimentKind::kSolve, "Solve the block-size policy table"},
      {ncsched::ExperimentKind::kSimulate, "Monte Carlo throughput per policy and erasure"},
      {ncsched::ExperimentKind::kLearn, "Multi-frame run with channel learning"},
      {ncsched::ExperimentKind::kMultiflow, "Online multi-flow scheduler and arrival sweep"},
      {ncsched::ExperimentKind::kRegion, "Two-flow feasibility map over delivery ratios"},
      {ncsched::ExperimentKind::kThreshold, "Retransmission threshold table"},
  };
  std::optional<ncsched::ExperimentKind> chosen;
  for (const auto& e : entries) {
    CLI::App* cmd = app.add_subcommand(ncsched::experiment_name(e.kind), e.help);
    add_common(cmd, flags);
    if (e.kind == ncsched::ExperimentKind::kSimulate) {
      cmd->add_option("--replications", flags.replications, "Frames per (policy, erasure) cell");
    }
    if (e.kind == ncsched::ExperimentKind::kLearn || e.kind == ncsched::ExperimentKind::kMultiflow ||
        e.kind == ncsched::ExperimentKind::kRegion) {
      cmd->add_option("--frames", flags.frames, "Frames to simulate");
    }
    if (e.kind == ncsched::ExperimentKind::kMultiflow || e.kind == ncsched::ExperimentKind::kRegion) {
      cmd->add_option("--rho", flags.rho, "Step size");
    }
    cmd->callback([&chosen, kind = e.kind] { chosen = kind; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const ncsched::ExperimentConfig config = build_config(*chosen, flags);
    if (flags.workers) omp_set_num_threads(*flags.workers);
    const ncsched::RunResult result = ncsched::run_experiment(config);
    for (const auto& line : result.summary) std::cout << line << "\n";
    for (const auto& file : result.files) std::cout << "wrote " << config.output_dir << "/" << file << "\n";
    return 0;
  } catch (const ncsched::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ncsched::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

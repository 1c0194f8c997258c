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

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ncsched/coding_math.hpp"
#include "ncsched/multiflow.hpp"
#include "ncsched/policies.hpp"

namespace ncsched {

enum class ExperimentKind { kSolve, kSimulate, kLearn, kMultiflow, kRegion, kThreshold };

std::string experiment_name(ExperimentKind kind);
/// Throws ConfigError("experiment", ...) for unknown names.
ExperimentKind experiment_from_name(std::string_view name);

struct SolveOptions {
  /// When non-empty, one table per erasure value with the configured receiver
  /// count; otherwise one table for `channel`.
  std::vector<double> epsilon_grid;
  bool operator==(const SolveOptions&) const = default;
};

struct SimulateOptions {
  std::vector<PolicyKind> policies = {OptimalPolicy{}, GreedyPolicy{}, ConservativePolicy{},
                                      RetransmissionPolicy{}};
  std::vector<double> epsilon_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::int64_t replications = 100000;
  bool operator==(const SimulateOptions&) const = default;
};

struct LearnOptions {
  std::vector<double> deltas = {0.01};
  int frames = 100;
  bool operator==(const LearnOptions&) const = default;
};

inline FlowSpec make_flow(int id, double lambda) {
  FlowSpec f;
  f.id = id;
  f.lambda = lambda;
  return f;
}

struct MultiflowOptions {
  std::vector<FlowSpec> flows = {make_flow(0, 1.5), make_flow(1, 1.5)};
  double rho = 0.1;
  int frames = 100000;
  std::vector<double> lambda_grid = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
  /// Frames per point of the arrival-rate sweep.
  int sweep_frames = 20000;
  double slope_threshold = 1e-3;
  ServiceModel service = ServiceModel::kBacklogAware;
  bool operator==(const MultiflowOptions&) const = default;
};

struct RegionOptions {
  std::vector<double> q_grid = {0.1, 0.25, 0.4, 0.55, 0.7, 0.85};
  double lambda = 3.0;
  int frames = 20000;
  bool operator==(const RegionOptions&) const = default;
};

struct ThresholdOptions {
  int t_min = 2;
  int t_max = 30;
  int n_min = 1;
  int n_max = 10;
  bool operator==(const ThresholdOptions&) const = default;
};

/// One reproducible run. Defaults follow the reference experiments: T = 10,
/// rho = 0.1, w = 1, q = 0.8, two flows of five receivers at erasure 0.3
/// (lambda 1.5, inside the stable range).
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kSolve;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  int horizon = 10;
  ChannelModel channel = ChannelModel::homogeneous(0.3, 10);
  PolicyKind policy = OptimalPolicy{};
  SolveOptions solve;
  SimulateOptions simulate;
  LearnOptions learn;
  MultiflowOptions multiflow;
  RegionOptions region;
  ThresholdOptions threshold;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses YAML text. Unknown keys and out-of-range values raise ConfigError
/// naming the dotted field path.
ExperimentConfig parse_config(std::string_view yaml);
ExperimentConfig load_config(const std::string& path);

/// Canonical YAML; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

/// Checks cross-field constraints for the selected experiment.
void validate_config(const ExperimentConfig& config);

/// FNV-1a 64 of the canonical serialization, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

}  // namespace ncsched

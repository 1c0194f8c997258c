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

#include <string>
#include <vector>

#include "ncsched/config.hpp"

namespace ncsched {

/// Output files (relative to the output directory) and human-readable
/// summary lines of one run.
struct RunResult {
  std::vector<std::string> files;
  std::vector<std::string> summary;
};

// Every command validates the config, writes its CSVs and manifest.yaml into
// config.output_dir, and throws InvariantViolation (after writing) when a
// structural check fails. CSV schemas, version 1:
//   solve      policy_table[_eps<e>].csv   t,k_star,k_greedy,value
//   simulate   throughput.csv              epsilon,policy,mean,stderr
//   learn      learning.csv                delta,frame,eps_hat,delivered
//              learning_reference.csv      delta,frame,delivered
//   multiflow  multiflow_trace.csv         frame,flow,s_star,arrivals,delivered,nu_hat
//              deficit_vs_lambda.csv       lambda,mean_deficit,max_slope,stable
//   region     region.csv                  grid_x,grid_y,stable_nc,stable_retx
//   threshold  threshold.csv               t,N,eps_star
RunResult cmd_solve(const ExperimentConfig& config);
RunResult cmd_simulate(const ExperimentConfig& config);
RunResult cmd_learn(const ExperimentConfig& config);
RunResult cmd_multiflow(const ExperimentConfig& config);
RunResult cmd_region(const ExperimentConfig& config);
RunResult cmd_threshold(const ExperimentConfig& config);

/// Dispatches on config.kind.
RunResult run_experiment(const ExperimentConfig& config);

inline constexpr int kCsvSchemaVersion = 1;
const char* library_version();

}  // namespace ncsched

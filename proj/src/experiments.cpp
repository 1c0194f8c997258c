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

#include "ncsched/experiments.hpp"

#include <omp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "ncsched/channel_sim.hpp"
#include "ncsched/csv.hpp"
#include "ncsched/dp_solver.hpp"
#include "ncsched/errors.hpp"
#include "ncsched/multiflow.hpp"

#ifndef NCSCHED_VERSION
#define NCSCHED_VERSION "0.0.0"
#endif

namespace ncsched {

namespace fs = std::filesystem;

namespace {

class OutputDir {
 public:
  explicit OutputDir(const ExperimentConfig& config) : root_(config.output_dir) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw ConfigError("output_dir", "cannot create '" + root_.string() + "': " + ec.message());
  }

  std::ofstream open(const std::string& name, RunResult& result) const {
    std::ofstream out(root_ / name);
    if (!out) throw ConfigError("output_dir", "cannot write '" + (root_ / name).string() + "'");
    result.files.push_back(name);
    return out;
  }

 private:
  fs::path root_;
};

void write_manifest(const ExperimentConfig& config, RunResult& result) {
  const OutputDir dir(config);
  std::vector<std::string> files = result.files;
  std::ofstream out = dir.open("manifest.yaml", result);
  out << "tool: ncsched\n";
  out << "version: " << NCSCHED_VERSION << "\n";
  out << "csv_schema: " << kCsvSchemaVersion << "\n";
  out << "experiment: " << experiment_name(config.kind) << "\n";
  out << "seed: " << config.seed << "\n";
  out << "config_hash: \"" << config_hash(config) << "\"\n";
  out << "compiler: \"" << __VERSION__ << "\"\n";
  out << "openmp: " << _OPENMP << "\n";
  out << "outputs:\n";
  for (const auto& f : files) out << "  - " << f << "\n";
  out << "config: |\n";
  std::istringstream lines(serialize_config(config));
  for (std::string line; std::getline(lines, line);) out << "  " << line << "\n";
}

template <typename Fn>
RunResult run_with_manifest(const ExperimentConfig& config, ExperimentKind kind, Fn&& body) {
  ExperimentConfig c = config;
  c.kind = kind;
  validate_config(c);
  RunResult result;
  std::string violation;
  body(c, OutputDir(c), result, violation);
  write_manifest(c, result);
  if (!violation.empty()) throw InvariantViolation(violation);
  return result;
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

const char* library_version() { return NCSCHED_VERSION; }

RunResult cmd_solve(const ExperimentConfig& config) {
  return run_with_manifest(config, ExperimentKind::kSolve, [](const ExperimentConfig& c,
                                                              const OutputDir& dir,
                                                              RunResult& result,
                                                              std::string& violation) {
    std::vector<std::pair<std::string, ChannelModel>> jobs;
    if (c.solve.epsilon_grid.empty()) {
      jobs.emplace_back("policy_table.csv", c.channel);
    } else {
      for (double e : c.solve.epsilon_grid) {
        jobs.emplace_back("policy_table_eps" + fmt(e) + ".csv",
                          ChannelModel::homogeneous(e, c.channel.receivers()));
      }
    }
    std::vector<PolicyTable> tables;
    for (const auto& [name, channel] : jobs) {
      tables.push_back(solve_mbia(c.horizon, channel));
      std::ofstream out = dir.open(name, result);
      write_policy_csv(out, tables.back());
      const StructureReport r = check_structure(tables.back());
      std::ostringstream line;
      line << name << ": V_T=" << fmt(tables.back().value.back())
           << " K* nondecreasing=" << (r.k_star_decreasing == 0 ? "yes" : "NO")
           << " K*<=K^=" << (r.k_star_above_greedy == 0 ? "yes" : "NO")
           << " K^ nondecreasing=" << (r.greedy_decreasing == 0 ? "yes" : "NO")
           << " action_evals=" << tables.back().stats.action_evals;
      result.summary.push_back(line.str());
      if (!r.ok() && violation.empty()) violation = "structure check failed for " + name;
    }
    for (std::size_t i = 1; i < tables.size(); ++i) {
      const bool lower = c.solve.epsilon_grid[i] > c.solve.epsilon_grid[i - 1];
      bool dominated = true;
      for (int t = 0; t <= c.horizon; ++t) {
        const int a = tables[i - 1].k_star[static_cast<std::size_t>(t)];
        const int b = tables[i].k_star[static_cast<std::size_t>(t)];
        dominated = dominated && (lower ? a >= b : a <= b);
      }
      result.summary.push_back("K* ordered pointwise between eps=" +
                               fmt(c.solve.epsilon_grid[i - 1]) + " and eps=" +
                               fmt(c.solve.epsilon_grid[i]) + ": " + (dominated ? "yes" : "no"));
    }
  });
}

RunResult cmd_simulate(const ExperimentConfig& config) {
  return run_with_manifest(config, ExperimentKind::kSimulate, [](const ExperimentConfig& c,
                                                                 const OutputDir& dir,
                                                                 RunResult& result,
                                                                 std::string&) {
    std::ofstream out = dir.open("throughput.csv", result);
    out << "epsilon,policy,mean,stderr\n";
    const int n = c.channel.receivers();
    for (std::size_t i = 0; i < c.simulate.epsilon_grid.size(); ++i) {
      const double eps = c.simulate.epsilon_grid[i];
      const ChannelModel channel = ChannelModel::homogeneous(eps, n);
      // Policies at one erasure value share streams.
      const RngSpec rng{c.seed, static_cast<std::uint64_t>(i)};
      std::ostringstream line;
      line << "eps=" << fmt(eps);
      for (const auto& policy : c.simulate.policies) {
        const DecisionContext ctx = make_context(policy, channel, c.horizon);
        const ThroughputEstimate est = monte_carlo_throughput(
            policy, ctx, c.horizon, c.horizon, channel, c.simulate.replications, rng);
        CsvRow(out) << eps << policy_name(policy) << est.mean << est.std_error;
        line << " " << policy_name(policy) << "=" << fmt(est.mean);
      }
      result.summary.push_back(line.str());
    }
  });
}

RunResult cmd_learn(const ExperimentConfig& config) {
  return run_with_manifest(config, ExperimentKind::kLearn, [](const ExperimentConfig& c,
                                                              const OutputDir& dir,
                                                              RunResult& result,
                                                              std::string& violation) {
    const auto& base = std::get<LearningPolicy>(c.policy);
    auto cache = std::make_shared<TableCache>();
    std::ofstream out = dir.open("learning.csv", result);
    std::ofstream ref = dir.open("learning_reference.csv", result);
    out << "delta,frame,eps_hat,delivered\n";
    ref << "delta,frame,delivered\n";
    for (std::size_t i = 0; i < c.learn.deltas.size(); ++i) {
      LearningPolicy policy = base;
      policy.delta = c.learn.deltas[i];
      const auto frames = run_learning(policy, c.channel, c.horizon, c.learn.frames,
                                       RngSpec{c.seed, static_cast<std::uint64_t>(i)}, cache);
      double got = 0.0;
      double want = 0.0;
      int steps_over = 0;
      for (const auto& f : frames) {
        CsvRow(out) << policy.delta << f.frame << f.eps_hat << f.delivered;
        CsvRow(ref) << policy.delta << f.frame << f.reference_delivered;
        if (2 * f.frame >= c.learn.frames) {
          got += f.delivered;
          want += f.reference_delivered;
        }
        for (const auto& d : f.decisions) {
          if (d.estimate_moving && d.previous_block > 0 && d.block > d.previous_block + 1) {
            ++steps_over;
          }
        }
      }
      std::ostringstream line;
      line << "delta=" << fmt(policy.delta) << " eps_hat=" << fmt(frames.back().eps_hat)
           << " second-half throughput ratio=" << fmt(want > 0 ? got / want : 1.0)
           << " oversized steps=" << steps_over;
      result.summary.push_back(line.str());
      if (steps_over > 0 && violation.empty()) {
        violation = "block size grew by more than one while the estimate was moving";
      }
    }
  });
}

RunResult cmd_multiflow(const ExperimentConfig& config) {
  return run_with_manifest(config, ExperimentKind::kMultiflow, [](const ExperimentConfig& c,
                                                                  const OutputDir& dir,
                                                                  RunResult& result,
                                                                  std::string& violation) {
    const auto& m = c.multiflow;
    OnlineOptions opts;
    opts.service = m.service;
    opts.record_rows = true;
    const MultiflowTrace trace =
        run_online(m.flows, c.horizon, m.frames, m.rho, RngSpec{c.seed, 0}, opts);
    {
      std::ofstream out = dir.open("multiflow_trace.csv", result);
      write_multiflow_csv(out, trace);
    }
    for (std::size_t f = 0; f < trace.flows.size(); ++f) {
      const auto& s = trace.flows[f];
      std::ostringstream line;
      line << "flow " << m.flows[f].id << ": delivery ratio=" << fmt(s.delivery_ratio)
           << " deficit slope=" << fmt(s.deficit_slope)
           << " tail deficit=" << fmt(s.tail_mean_deficit);
      result.summary.push_back(line.str());
    }
    if (std::any_of(trace.deficits.begin(), trace.deficits.end(), [](double v) { return v < 0; })) {
      violation = "negative deficit";
    }

    opts.record_rows = false;
    const auto sweep = arrival_rate_sweep(m.flows, m.lambda_grid, c.horizon, m.rho,
                                          m.sweep_frames, RngSpec{c.seed, 1}, m.slope_threshold,
                                          opts);
    std::ofstream out = dir.open("deficit_vs_lambda.csv", result);
    out << "lambda,mean_deficit,max_slope,stable\n";
    for (const auto& p : sweep) {
      CsvRow(out) << p.lambda << p.mean_deficit << p.max_slope << static_cast<int>(p.stable);
    }
  });
}

RunResult cmd_region(const ExperimentConfig& config) {
  return run_with_manifest(config, ExperimentKind::kRegion, [](const ExperimentConfig& c,
                                                               const OutputDir& dir,
                                                               RunResult& result,
                                                               std::string&) {
    std::vector<FlowSpec> flows = c.multiflow.flows;
    for (auto& f : flows) f.lambda = c.region.lambda;
    const auto points =
        rate_region_sweep(flows, c.region.q_grid, c.horizon, c.multiflow.rho, c.region.frames,
                          RngSpec{c.seed, 0}, c.multiflow.slope_threshold, c.multiflow.service);
    std::ofstream out = dir.open("region.csv", result);
    write_region_csv(out, points);
    int nc = 0;
    int retx = 0;
    int retx_only = 0;
    for (const auto& p : points) {
      nc += p.stable_nc;
      retx += p.stable_retx;
      retx_only += p.stable_retx && !p.stable_nc;
    }
    result.summary.push_back("stable points: coded=" + std::to_string(nc) +
                             " retransmission=" + std::to_string(retx) +
                             " retransmission-only=" + std::to_string(retx_only));
  });
}

RunResult cmd_threshold(const ExperimentConfig& config) {
  return run_with_manifest(config, ExperimentKind::kThreshold, [](const ExperimentConfig& c,
                                                                  const OutputDir& dir,
                                                                  RunResult& result,
                                                                  std::string& violation) {
    const auto& th = c.threshold;
    if (th.t_min < 2) result.summary.push_back("t=1 rows skipped: no threshold with one slot left");
    const int t_lo = std::max(2, th.t_min);
    const int rows = std::max(0, th.t_max - t_lo + 1);
    const int cols = th.n_max - th.n_min + 1;
    std::vector<double> eps(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
#pragma omp parallel for collapse(2) schedule(dynamic)
    for (int r = 0; r < rows; ++r) {
      for (int k = 0; k < cols; ++k) {
        eps[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
            static_cast<std::size_t>(k)] = retransmission_threshold(t_lo + r, th.n_min + k);
      }
    }
    std::ofstream out = dir.open("threshold.csv", result);
    out << "t,N,eps_star\n";
    int up = 0;
    int across = 0;
    for (int r = 0; r < rows; ++r) {
      for (int k = 0; k < cols; ++k) {
        const double v = eps[static_cast<std::size_t>(r * cols + k)];
        CsvRow(out) << t_lo + r << th.n_min + k << v;
        if (r > 0 && !(v > eps[static_cast<std::size_t>((r - 1) * cols + k)])) ++up;
        if (k > 0 && !(v < eps[static_cast<std::size_t>(r * cols + k - 1)])) ++across;
      }
    }
    result.summary.push_back("increasing in t: " + std::string(up == 0 ? "yes" : "NO") +
                             ", decreasing in N: " + (across == 0 ? "yes" : "NO"));
    if (up + across > 0) violation = "threshold table is not monotone";
  });
}

RunResult run_experiment(const ExperimentConfig& config) {
  switch (config.kind) {
    case ExperimentKind::kSolve: return cmd_solve(config);
    case ExperimentKind::kSimulate: return cmd_simulate(config);
    case ExperimentKind::kLearn: return cmd_learn(config);
    case ExperimentKind::kMultiflow: return cmd_multiflow(config);
    case ExperimentKind::kRegion: return cmd_region(config);
    case ExperimentKind::kThreshold: return cmd_threshold(config);
  }
  throw ConfigError("experiment", "unknown experiment");
}

}  // namespace ncsched

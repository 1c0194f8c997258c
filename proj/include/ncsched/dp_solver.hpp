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
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ncsched/coding_math.hpp"

namespace ncsched {

/// Per-state block-size cap, indexed by remaining slots t = 0..T.
using BlockCaps = std::vector<int>;

/// Work counters reported by the solvers.
struct SolveStats {
  /// Bellman right-hand sides evaluated (one per candidate block size).
  std::int64_t action_evals = 0;
  /// Immediate-reward lookups spent locating the greedy block sizes.
  std::int64_t greedy_evals = 0;
};

/// Solution of the single-frame block-size MDP for t = 0..horizon.
struct PolicyTable {
  int horizon = 0;
  std::vector<int> k_star;
  std::vector<double> value;
  std::vector<int> k_greedy;
  ChannelModel channel = ChannelModel::homogeneous(0.0, 1);
  std::optional<BlockCaps> caps;
  SolveStats stats;
};

/// Result of the monotonicity audit run over a solved table.
struct StructureReport {
  int k_star_decreasing = 0;     // t with K*_t < K*_{t-1}
  int k_star_above_greedy = 0;   // t with K*_t > K̂_t
  int greedy_decreasing = 0;     // t with K̂_t < K̂_{t-1}
  int value_violations = 0;      // V_t < V_{t-1} or V_t > t
  int terminal_violations = 0;   // K*_0 != 0 or V_0 != 0
  bool ok() const {
    return k_star_decreasing == 0 && k_star_above_greedy == 0 && greedy_decreasing == 0 &&
           value_violations == 0 && terminal_violations == 0;
  }
};

StructureReport check_structure(const PolicyTable& table);

/// Argmax of R_t(K) over K in 1..min(t, cap), smallest K on ties.
///
/// Uses a golden-section search on the integer lattice, relying on the
/// unimodality of K * P(K, t); windows shorter than eight points are scanned.
/// `evals` (optional) accumulates the number of reward lookups.
int greedy_block_size(const DecodingTable& table, int slots, int cap,
                      std::int64_t* evals = nullptr);
int greedy_block_size(int slots, const ChannelModel& channel,
                      std::optional<int> cap = std::nullopt);

/// Linear-scan argmax of R_t(K), the reference for greedy_block_size.
int greedy_block_size_scan(const DecodingTable& table, int slots, int cap);

/// Exhaustive backward induction over every action 1..min(t, cap_t).
/// Transition masses come from completion_pmf, not from a DecodingTable, so
/// the result is an independent check of solve_mbia. O(T^4); oracle only.
PolicyTable solve_bruteforce(int horizon, const ChannelModel& channel,
                             std::optional<BlockCaps> caps = std::nullopt);

/// Monotonicity-based backward induction. At state t only the window
/// [max(1, K*_{t-1}), min(K̂_t, cap_t)] is searched.
PolicyTable solve_mbia(int horizon, const ChannelModel& channel,
                       std::optional<BlockCaps> caps = std::nullopt);
PolicyTable solve_mbia(const DecodingTable& table, std::optional<BlockCaps> caps = std::nullopt);

/// Caps from a completion-time second-moment bound: cap_t = min(t, Kmax).
BlockCaps variance_caps(double variance_bound, const ChannelModel& channel, int horizon);

/// Exact expected deliveries V_t of an arbitrary stationary decision rule
/// `blocks[t]` (0 = stop) for t = 0..horizon, under saturated traffic.
std::vector<double> evaluate_policy(const DecodingTable& table, std::span<const int> blocks);

/// Block size chosen by the expected-completion-time baseline.
struct ConservativeChoice {
  int block = 1;
  /// True when even K = 1 is expected to overrun the deadline and the
  /// baseline transmits a single packet anyway.
  bool fallback = false;
};

ConservativeChoice conservative_block_size(int slots, const ChannelModel& channel,
                                           double tol = kDefaultSeriesTol);

/// Erasure probability above which R_t(1) > R_t(2), so plain retransmission
/// is optimal for every state up to t. Requires t >= 2 and N >= 1.
double retransmission_threshold(int slots, int receivers);

/// f(e, t, N) = (1 - e^t) - 2^(1/N) (1 - e^t + t e^t - t e^(t-1)).
double retransmission_gap(double erasure, int slots, int receivers);

/// CSV with header `t,k_star,k_greedy,value`.
void write_policy_csv(std::ostream& out, const PolicyTable& table);

}  // namespace ncsched

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

#include "ncsched/dp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "ncsched/csv.hpp"

namespace ncsched {

namespace {

// Relative slack under which two action values count as tied; the smaller
// block size then wins.
constexpr double kTieTol = 1e-12;

bool strictly_better(double candidate, double incumbent) {
  return candidate > incumbent + kTieTol * std::max(1.0, std::abs(incumbent));
}

int cap_at(const std::optional<BlockCaps>& caps, int t) {
  if (!caps) return t;
  return std::clamp((*caps)[static_cast<std::size_t>(t)], 0, t);
}

void check_caps(const std::optional<BlockCaps>& caps, int horizon) {
  if (horizon < 0) throw std::domain_error("horizon must be >= 0");
  if (caps && caps->size() < static_cast<std::size_t>(horizon) + 1) {
    throw std::invalid_argument("block caps must cover t = 0..horizon");
  }
}

// R_t(K) + sum_{j=0}^{t-K} q_t(j) V_j.
double action_value(const DecodingTable& p, std::span<const double> value, int t, int k) {
  double future = 0.0;
  for (int j = 0; j <= t - k; ++j) {
    future += (p(k, t - j) - p(k, t - j - 1)) * value[static_cast<std::size_t>(j)];
  }
  return p.reward(k, t) + future;
}

PolicyTable empty_table(int horizon, const ChannelModel& channel, std::optional<BlockCaps> caps) {
  PolicyTable table;
  table.horizon = horizon;
  table.k_star.assign(static_cast<std::size_t>(horizon) + 1, 0);
  table.value.assign(static_cast<std::size_t>(horizon) + 1, 0.0);
  table.k_greedy.assign(static_cast<std::size_t>(horizon) + 1, 0);
  table.channel = channel;
  table.caps = std::move(caps);
  return table;
}

}  // namespace

int greedy_block_size_scan(const DecodingTable& table, int slots, int cap) {
  const int hi = std::min(slots, cap);
  if (hi < 1) return 0;
  int best = 1;
  double best_r = table.reward(1, slots);
  for (int k = 2; k <= hi; ++k) {
    const double r = table.reward(k, slots);
    if (strictly_better(r, best_r)) {
      best = k;
      best_r = r;
    }
  }
  return best;
}

int greedy_block_size(const DecodingTable& table, int slots, int cap, std::int64_t* evals) {
  if (slots > table.horizon()) throw std::out_of_range("slots beyond decoding table horizon");
  int lo = 1;
  int hi = std::min(slots, cap);
  if (hi < 1) return 0;
  std::int64_t count = 0;
  auto reward = [&](int k) {
    ++count;
    return table.reward(k, slots);
  };
  constexpr double kInvPhi = 0.6180339887498949;
  while (hi - lo + 1 >= 8) {
    const int span = hi - lo;
    int a = hi - static_cast<int>(std::lround(kInvPhi * span));
    int b = lo + static_cast<int>(std::lround(kInvPhi * span));
    if (a >= b) b = a + 1;
    // On a tie the smallest maximizer sits at or left of a.
    if (!strictly_better(reward(b), reward(a))) {
      hi = b - 1;
    } else {
      lo = a + 1;
    }
  }
  int best = lo;
  double best_r = reward(lo);
  for (int k = lo + 1; k <= hi; ++k) {
    const double r = reward(k);
    if (strictly_better(r, best_r)) {
      best = k;
      best_r = r;
    }
  }
  if (evals) *evals += count;
  return best;
}

int greedy_block_size(int slots, const ChannelModel& channel, std::optional<int> cap) {
  if (slots < 1) throw std::domain_error("greedy_block_size needs t >= 1");
  const DecodingTable table = DecodingTable::build(channel, slots);
  return greedy_block_size(table, slots, cap.value_or(slots));
}

PolicyTable solve_bruteforce(int horizon, const ChannelModel& channel,
                             std::optional<BlockCaps> caps) {
  check_caps(caps, horizon);
  PolicyTable table = empty_table(horizon, channel, std::move(caps));
  for (int t = 1; t <= horizon; ++t) {
    const int cap = cap_at(table.caps, t);
    // Greedy block by exhaustive scan of immediate rewards.
    int greedy = 0;
    double greedy_r = -1.0;
    for (int k = 1; k <= cap; ++k) {
      const double r = immediate_reward(k, t, channel);
      if (greedy == 0 || strictly_better(r, greedy_r)) {
        greedy = k;
        greedy_r = r;
      }
    }
    int best = 0;
    double best_v = 0.0;
    for (int k = 1; k <= cap; ++k) {
      const CompletionPmf pmf = completion_pmf(k, t, channel);
      double v = immediate_reward(k, t, channel);
      for (std::size_t j = 0; j < pmf.mass.size(); ++j) v += pmf.mass[j] * table.value[j];
      ++table.stats.action_evals;
      if (best == 0 || strictly_better(v, best_v)) {
        best = k;
        best_v = v;
      }
    }
    table.k_greedy[static_cast<std::size_t>(t)] = greedy;
    table.k_star[static_cast<std::size_t>(t)] = best;
    table.value[static_cast<std::size_t>(t)] = best_v;
  }
  return table;
}

PolicyTable solve_mbia(const DecodingTable& p, std::optional<BlockCaps> caps) {
  const int horizon = p.horizon();
  check_caps(caps, horizon);
  PolicyTable table = empty_table(horizon, p.channel(), std::move(caps));
  for (int t = 1; t <= horizon; ++t) {
    const int cap = cap_at(table.caps, t);
    if (cap == 0) continue;  // nothing may be sent: stop with V_t = 0
    const int greedy = greedy_block_size(p, t, cap, &table.stats.greedy_evals);
    const int hi = greedy;
    const int lo = std::min(std::max(1, table.k_star[static_cast<std::size_t>(t) - 1]), hi);
    int best = lo;
    double best_v = action_value(p, table.value, t, lo);
    ++table.stats.action_evals;
    for (int k = lo + 1; k <= hi; ++k) {
      const double v = action_value(p, table.value, t, k);
      ++table.stats.action_evals;
      if (strictly_better(v, best_v)) {
        best = k;
        best_v = v;
      }
    }
    table.k_greedy[static_cast<std::size_t>(t)] = greedy;
    table.k_star[static_cast<std::size_t>(t)] = best;
    table.value[static_cast<std::size_t>(t)] = best_v;
  }
  return table;
}

PolicyTable solve_mbia(int horizon, const ChannelModel& channel, std::optional<BlockCaps> caps) {
  check_caps(caps, horizon);
  return solve_mbia(DecodingTable::build(channel, horizon), std::move(caps));
}

BlockCaps variance_caps(double variance_bound, const ChannelModel& channel, int horizon) {
  const int kmax = max_block_for_variance(variance_bound, channel, std::max(horizon, 0));
  BlockCaps caps(static_cast<std::size_t>(std::max(horizon, 0)) + 1);
  for (int t = 0; t <= horizon; ++t) caps[static_cast<std::size_t>(t)] = std::min(t, kmax);
  return caps;
}

std::vector<double> evaluate_policy(const DecodingTable& table, std::span<const int> blocks) {
  const int horizon = table.horizon();
  if (blocks.size() < static_cast<std::size_t>(horizon) + 1) {
    throw std::invalid_argument("decision rule must cover t = 0..horizon");
  }
  std::vector<double> value(static_cast<std::size_t>(horizon) + 1, 0.0);
  for (int t = 1; t <= horizon; ++t) {
    const int k = blocks[static_cast<std::size_t>(t)];
    if (k < 0 || k > t) throw std::domain_error("decision rule block size outside 0..t");
    if (k == 0) continue;
    value[static_cast<std::size_t>(t)] = action_value(table, value, t, k);
  }
  return value;
}

StructureReport check_structure(const PolicyTable& table) {
  StructureReport report;
  if (table.k_star.empty() || table.k_star[0] != 0 || table.value[0] != 0.0) {
    ++report.terminal_violations;
  }
  for (int t = 1; t <= table.horizon; ++t) {
    const auto i = static_cast<std::size_t>(t);
    if (table.k_star[i] < table.k_star[i - 1]) ++report.k_star_decreasing;
    if (table.k_star[i] > table.k_greedy[i]) ++report.k_star_above_greedy;
    if (table.k_greedy[i] < table.k_greedy[i - 1]) ++report.greedy_decreasing;
    if (table.value[i] < table.value[i - 1] - 1e-12 || table.value[i] > t + 1e-12) {
      ++report.value_violations;
    }
  }
  return report;
}

ConservativeChoice conservative_block_size(int slots, const ChannelModel& channel, double tol) {
  if (slots < 1) throw std::domain_error("conservative_block_size needs t >= 1");
  if (channel.worst_erasure() == 1.0) return {1, true};
  // S(K) is compared with slack `tol`, the truncation error of the series.
  if (expected_completion_time(1, channel, tol) > slots + tol) return {1, true};
  int best = 1;
  for (int k = 2; k <= slots; ++k) {
    if (expected_completion_time(k, channel, tol) > slots + tol) break;
    best = k;
  }
  return {best, false};
}

double retransmission_gap(double erasure, int slots, int receivers) {
  const double et = std::pow(erasure, slots);
  const double et1 = std::pow(erasure, slots - 1);
  const double two_block = 1.0 - et + slots * et - slots * et1;
  return (1.0 - et) - std::pow(2.0, 1.0 / receivers) * two_block;
}

double retransmission_threshold(int slots, int receivers) {
  if (slots < 2) throw std::domain_error("retransmission threshold needs t >= 2");
  if (receivers < 1) throw std::domain_error("retransmission threshold needs N >= 1");
  auto f = [&](double e) { return retransmission_gap(e, slots, receivers); };

  // Golden-section search for the interior maximizer of f on [0, 1].
  constexpr double kInvPhi = 0.6180339887498949;
  double a = 0.0;
  double b = 1.0;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > 1e-12) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  const double peak = 0.5 * (a + b);
  if (!(f(peak) > 0.0)) throw std::runtime_error("retransmission gap has no positive maximum");

  double lo = 0.0;
  double hi = peak;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void write_policy_csv(std::ostream& out, const PolicyTable& table) {
  out << "t,k_star,k_greedy,value\n";
  for (int t = 0; t <= table.horizon; ++t) {
    const auto i = static_cast<std::size_t>(t);
    CsvRow(out) << t << table.k_star[i] << table.k_greedy[i] << table.value[i];
  }
}

}  // namespace ncsched

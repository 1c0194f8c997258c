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

#include "ncsched/channel_sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ncsched/csv.hpp"

namespace ncsched {

namespace {

struct FrameOutcome {
  int delivered = 0;
  int blocks_completed = 0;
  int blocks_abandoned = 0;
  int slots_used = 0;
};

struct NoRecord {
  void slot(int, int) {}
  void bit(bool) {}
};

struct FullRecord {
  FrameTrace& trace;
  void slot(int state, int block_id) {
    trace.slot_state.push_back(state);
    trace.slot_block.push_back(block_id);
  }
  void bit(bool got) { trace.received.push_back(got ? 1 : 0); }
};

std::vector<double> success_probs(const ChannelModel& channel) {
  std::vector<double> p;
  p.reserve(static_cast<std::size_t>(channel.receivers()));
  for (double e : channel.erasures()) p.push_back(1.0 - e);
  return p;
}

// One frame. `decide(t, backlog)` returns the block for state t (<= t) or 0
// to stop. `have` is caller-owned scratch sized to the receiver count.
template <typename Decide, typename Record>
FrameOutcome run_frame(int horizon, int packets, std::span<const double> success,
                       const CounterRng& rng, std::vector<int>& have, Decide&& decide,
                       Record& record, LearnerState* learner) {
  const int receivers = static_cast<int>(success.size());
  FrameOutcome out;
  int t = horizon;
  int backlog = packets;
  int block_id = 0;
  while (t > 0) {
    const int k = decide(t, backlog);
    if (k <= 0) break;
    std::fill(have.begin(), have.end(), 0);
    int pending = receivers;
    while (t > 0 && pending > 0) {
      const int slot = horizon - t;
      record.slot(t, block_id);
      int successes = 0;
      for (int i = 0; i < receivers; ++i) {
        const bool got = rng.uniform(static_cast<std::uint64_t>(slot), static_cast<std::uint64_t>(i)) <
                         success[static_cast<std::size_t>(i)];
        record.bit(got);
        if (got) {
          ++successes;
          int& h = have[static_cast<std::size_t>(i)];
          if (h < k && ++h == k) --pending;
        }
      }
      if (learner) *learner = learner_observe_slot(*learner, successes, receivers, slot, horizon);
      --t;
      ++out.slots_used;
    }
    if (pending == 0) {
      out.delivered += k;
      backlog -= k;
      ++out.blocks_completed;
    } else {
      ++out.blocks_abandoned;
    }
    ++block_id;
  }
  return out;
}

void check_frame_args(int horizon, int packets) {
  if (horizon < 0) throw std::domain_error("horizon must be >= 0");
  if (packets < 0) throw std::domain_error("packet count must be >= 0");
}

}  // namespace

FrameTrace simulate_frame(const PolicyKind& policy, const DecisionContext& context, int horizon,
                          int packets, const ChannelModel& channel, const RngSpec& rng,
                          LearnerState* learner, TraceDetail detail) {
  check_frame_args(horizon, packets);
  const auto* learning = std::get_if<LearningPolicy>(&policy);
  if (learning && !learner) throw ConfigError("policy", "learning policy needs a learner state");

  FrameTrace trace;
  trace.horizon = horizon;
  trace.receivers = channel.receivers();
  const auto success = success_probs(channel);
  std::vector<int> have(success.size());
  const CounterRng gen(rng);

  auto decide_fn = [&](int t, int backlog) {
    FrameTrace::Decision d;
    d.state = t;
    if (learning) {
      d.previous_block = learner->last_block;
      d.estimate_moving = std::abs(learner->eps_hat - learner->eps_hat_prev) > learning->delta;
    }
    d.block = decide(policy, t, backlog, context, learning ? learner : nullptr);
    if (d.block > 0) trace.decisions.push_back(d);
    return d.block;
  };

  FrameOutcome out;
  if (detail == TraceDetail::kFull) {
    FullRecord rec{trace};
    out = run_frame(horizon, packets, success, gen, have, decide_fn, rec, learning ? learner : nullptr);
  } else {
    NoRecord rec;
    out = run_frame(horizon, packets, success, gen, have, decide_fn, rec, learning ? learner : nullptr);
  }
  trace.delivered = out.delivered;
  trace.blocks_completed = out.blocks_completed;
  trace.blocks_abandoned = out.blocks_abandoned;
  trace.slots_used = out.slots_used;
  return trace;
}

int rescore_trace(const FrameTrace& trace) {
  const std::size_t n = static_cast<std::size_t>(trace.receivers);
  int delivered = 0;
  std::vector<int> have(n, 0);
  int current = -1;
  bool done = false;
  for (std::size_t s = 0; s < trace.slot_block.size(); ++s) {
    const int b = trace.slot_block[s];
    if (b != current) {
      current = b;
      done = false;
      std::fill(have.begin(), have.end(), 0);
    }
    const int k = trace.decisions[static_cast<std::size_t>(b)].block;
    for (std::size_t i = 0; i < n; ++i) have[i] += trace.received[s * n + i];
    if (!done && std::all_of(have.begin(), have.end(), [k](int h) { return h >= k; })) {
      done = true;
      delivered += k;
    }
  }
  return delivered;
}

void write_trace_csv(std::ostream& out, const FrameTrace& trace) {
  out << "slot,state_t,block_id,receiver_id,received_bit\n";
  for (std::size_t s = 0; s < trace.slot_state.size(); ++s) {
    for (int i = 0; i < trace.receivers; ++i) {
      CsvRow(out) << s << trace.slot_state[s] << trace.slot_block[s] << i
                  << static_cast<int>(trace.received_bit(static_cast<int>(s), i));
    }
  }
}

ThroughputEstimate summarize_deliveries(std::span<const int> delivered) {
  ThroughputEstimate est;
  est.replications = static_cast<std::int64_t>(delivered.size());
  if (delivered.empty()) return est;
  int max_d = 0;
  double sum = 0.0;
  for (int d : delivered) {
    sum += d;
    max_d = std::max(max_d, d);
  }
  const double n = static_cast<double>(delivered.size());
  est.mean = sum / n;
  double ss = 0.0;
  est.histogram.assign(static_cast<std::size_t>(max_d) + 1, 0);
  for (int d : delivered) {
    ss += (d - est.mean) * (d - est.mean);
    ++est.histogram[static_cast<std::size_t>(d)];
  }
  est.variance = delivered.size() > 1 ? ss / (n - 1.0) : 0.0;
  est.std_error = std::sqrt(est.variance / n);
  return est;
}

ThroughputEstimate monte_carlo_throughput(const PolicyKind& policy, const DecisionContext& context,
                                          int horizon, int packets, const ChannelModel& channel,
                                          std::int64_t replications, const RngSpec& rng) {
  check_frame_args(horizon, packets);
  if (replications < 1) throw std::domain_error("replications must be >= 1");
  const auto* learning = std::get_if<LearningPolicy>(&policy);
  std::vector<int> rule;
  if (!learning) rule = decision_rule(policy, context);
  if (!learning && static_cast<int>(rule.size()) <= horizon) {
    throw ConfigError("horizon", "decision table shorter than the simulated horizon");
  }
  const auto success = success_probs(channel);
  std::vector<int> delivered(static_cast<std::size_t>(replications));

#pragma omp parallel
  {
    std::vector<int> have(success.size());
    NoRecord rec;
#pragma omp for schedule(static)
    for (std::int64_t r = 0; r < replications; ++r) {
      const CounterRng gen(rng.child(static_cast<std::uint64_t>(r)));
      FrameOutcome out;
      if (learning) {
        LearnerState learner = LearnerState::start(learning->eps_init);
        auto fn = [&](int t, int backlog) { return decide(policy, t, backlog, context, &learner); };
        out = run_frame(horizon, packets, success, gen, have, fn, rec, &learner);
      } else {
        auto fn = [&](int t, int backlog) {
          return std::min(rule[static_cast<std::size_t>(t)], backlog);
        };
        out = run_frame(horizon, packets, success, gen, have, fn, rec, nullptr);
      }
      delivered[static_cast<std::size_t>(r)] = out.delivered;
    }
  }
  return summarize_deliveries(delivered);
}

ThroughputEstimate monte_carlo_throughput_serial(const PolicyKind& policy,
                                                 const DecisionContext& context, int horizon,
                                                 int packets, const ChannelModel& channel,
                                                 std::int64_t replications, const RngSpec& rng) {
  if (replications < 1) throw std::domain_error("replications must be >= 1");
  const auto* learning = std::get_if<LearningPolicy>(&policy);
  std::vector<int> delivered;
  delivered.reserve(static_cast<std::size_t>(replications));
  for (std::int64_t r = 0; r < replications; ++r) {
    LearnerState learner = LearnerState::start(learning ? learning->eps_init : 0.5);
    const FrameTrace trace =
        simulate_frame(policy, context, horizon, packets, channel,
                       rng.child(static_cast<std::uint64_t>(r)), learning ? &learner : nullptr,
                       TraceDetail::kSummary);
    delivered.push_back(trace.delivered);
  }
  return summarize_deliveries(delivered);
}

void write_histogram_csv(std::ostream& out, const ThroughputEstimate& estimate) {
  out << "delivered,count\n";
  for (std::size_t d = 0; d < estimate.histogram.size(); ++d) {
    CsvRow(out) << d << estimate.histogram[d];
  }
}

std::vector<VarianceTradeoffRow> variance_tradeoff_run(std::span<const double> bounds,
                                                       const ChannelModel& channel, int horizon,
                                                       std::int64_t replications,
                                                       const RngSpec& rng) {
  std::vector<VarianceTradeoffRow> rows;
  rows.reserve(bounds.size());
  for (double bound : bounds) {
    const PolicyKind policy = VarianceConstrainedPolicy{bound};
    const DecisionContext context = make_context(policy, channel, horizon);
    const ThroughputEstimate est =
        monte_carlo_throughput(policy, context, horizon, horizon, channel, replications, rng);
    VarianceTradeoffRow row;
    row.variance_bound = bound;
    row.block_cap = max_block_for_variance(bound, channel, horizon);
    row.mean = est.mean;
    row.std_error = est.std_error;
    row.variance = est.variance;
    rows.push_back(row);
  }
  return rows;
}

std::vector<LearningFrame> run_learning(const LearningPolicy& policy, const ChannelModel& channel,
                                        int horizon, int frames, const RngSpec& rng,
                                        std::shared_ptr<TableCache> cache) {
  if (frames < 0) throw std::domain_error("frame count must be >= 0");
  const PolicyKind learning = policy;
  const DecisionContext ctx = make_context(learning, channel, horizon, std::move(cache));
  const PolicyKind optimal = OptimalPolicy{};
  const DecisionContext reference = make_context(optimal, channel, horizon);

  LearnerState learner = LearnerState::start(policy.eps_init, true);
  std::vector<LearningFrame> out;
  out.reserve(static_cast<std::size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    const RngSpec frame_rng = rng.child(static_cast<std::uint64_t>(f));
    FrameTrace trace = simulate_frame(learning, ctx, horizon, horizon, channel, frame_rng, &learner,
                                      TraceDetail::kSummary);
    const FrameTrace ref = simulate_frame(optimal, reference, horizon, horizon, channel, frame_rng,
                                          nullptr, TraceDetail::kSummary);
    LearningFrame row;
    row.frame = f;
    row.eps_hat = learner.eps_hat;
    row.delivered = trace.delivered;
    row.reference_delivered = ref.delivered;
    row.decisions = std::move(trace.decisions);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace ncsched

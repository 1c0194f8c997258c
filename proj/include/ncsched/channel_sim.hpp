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
#include <memory>
#include <span>
#include <vector>

#include "ncsched/coding_math.hpp"
#include "ncsched/policies.hpp"
#include "ncsched/rng.hpp"

namespace ncsched {

/// Slot-by-slot record of one simulated frame.
///
/// Receivers are counters: every coded packet a receiver gets is innovative
/// until it holds K of them. A block yields K packets if every receiver
/// completes it before the deadline and nothing otherwise.
struct FrameTrace {
  struct Decision {
    int state = 0;          // remaining slots when the block started
    int block = 0;
    int previous_block = 0; // learner's previous block (learning runs only)
    bool estimate_moving = false;
  };

  int horizon = 0;
  int receivers = 0;
  std::vector<Decision> decisions;
  /// Per transmitted slot: remaining slots at its start and the block index.
  std::vector<int> slot_state;
  std::vector<int> slot_block;
  /// Slot-major reception bits, `receivers` entries per transmitted slot.
  std::vector<std::uint8_t> received;

  int delivered = 0;
  int blocks_completed = 0;
  int blocks_abandoned = 0;
  int slots_used = 0;

  bool received_bit(int slot, int receiver) const {
    return received[static_cast<std::size_t>(slot) * static_cast<std::size_t>(receivers) +
                    static_cast<std::size_t>(receiver)] != 0;
  }
};

enum class TraceDetail { kSummary, kFull };

/// Simulates one frame of `horizon` slots with `packets` packets queued.
///
/// The policy is queried at block boundaries only. Reception of receiver i in
/// slot s is uniform(seed, stream, s, i) < 1 - e_i, so a frame is a pure
/// function of its RngSpec. Learning policies need `learner`, which receives
/// the per-slot success count.
FrameTrace simulate_frame(const PolicyKind& policy, const DecisionContext& context, int horizon,
                          int packets, const ChannelModel& channel, const RngSpec& rng,
                          LearnerState* learner = nullptr,
                          TraceDetail detail = TraceDetail::kFull);

/// Recomputes delivered packets from the decisions and reception bits alone.
int rescore_trace(const FrameTrace& trace);

/// `slot,state_t,block_id,receiver_id,received_bit`, one row per bit.
void write_trace_csv(std::ostream& out, const FrameTrace& trace);

struct ThroughputEstimate {
  std::int64_t replications = 0;
  double mean = 0.0;
  double std_error = 0.0;
  /// Unbiased sample variance of delivered packets per frame.
  double variance = 0.0;
  /// histogram[d] = frames that delivered exactly d packets.
  std::vector<std::int64_t> histogram;
};

/// Summary statistics over per-replication delivery counts.
ThroughputEstimate summarize_deliveries(std::span<const int> delivered);

/// Monte Carlo estimate of delivered packets per frame. Replication r uses
/// stream rng.child(r); replications run in parallel with OpenMP and the
/// result does not depend on the thread count.
ThroughputEstimate monte_carlo_throughput(const PolicyKind& policy, const DecisionContext& context,
                                          int horizon, int packets, const ChannelModel& channel,
                                          std::int64_t replications, const RngSpec& rng);

/// Reference implementation: one simulate_frame call per replication, in
/// order, on the calling thread. Produces the same estimate as the parallel
/// kernel.
ThroughputEstimate monte_carlo_throughput_serial(const PolicyKind& policy,
                                                 const DecisionContext& context, int horizon,
                                                 int packets, const ChannelModel& channel,
                                                 std::int64_t replications, const RngSpec& rng);

/// `delivered,count`.
void write_histogram_csv(std::ostream& out, const ThroughputEstimate& estimate);

struct VarianceTradeoffRow {
  double variance_bound = 0.0;
  int block_cap = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double variance = 0.0;
};

/// Sweeps variance-constrained policies over `bounds` (saturated traffic).
std::vector<VarianceTradeoffRow> variance_tradeoff_run(std::span<const double> bounds,
                                                       const ChannelModel& channel, int horizon,
                                                       std::int64_t replications,
                                                       const RngSpec& rng);

struct LearningFrame {
  int frame = 0;
  double eps_hat = 0.0;  // estimate at the end of the frame
  int delivered = 0;
  int reference_delivered = 0;  // Optimal policy with the true channel
  std::vector<FrameTrace::Decision> decisions;
};

/// Consecutive frames under the learning policy with the estimate carried
/// across frames; frame f uses stream rng.child(f). The reference run uses the
/// same streams with perfect channel knowledge.
std::vector<LearningFrame> run_learning(const LearningPolicy& policy, const ChannelModel& channel,
                                        int horizon, int frames, const RngSpec& rng,
                                        std::shared_ptr<TableCache> cache = nullptr);

}  // namespace ncsched

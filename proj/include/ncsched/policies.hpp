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
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "ncsched/dp_solver.hpp"
#include "ncsched/errors.hpp"

namespace ncsched {

struct OptimalPolicy {
  bool operator==(const OptimalPolicy&) const = default;
};
struct GreedyPolicy {
  bool operator==(const GreedyPolicy&) const = default;
};
struct ConservativePolicy {
  bool operator==(const ConservativePolicy&) const = default;
};
struct RetransmissionPolicy {
  bool operator==(const RetransmissionPolicy&) const = default;
};
/// Optimal policy restricted to blocks whose completion-time second moment
/// stays below `variance_bound` (slots^2).
struct VarianceConstrainedPolicy {
  double variance_bound = 1e9;
  bool operator==(const VarianceConstrainedPolicy&) const = default;
};
/// Joint channel learning and block-size adaptation.
struct LearningPolicy {
  double delta = 0.01;
  double eps_init = 0.5;
  bool operator==(const LearningPolicy&) const = default;
};

using PolicyKind = std::variant<OptimalPolicy, GreedyPolicy, ConservativePolicy,
                                RetransmissionPolicy, VarianceConstrainedPolicy, LearningPolicy>;

/// Lower-case identifier: optimal, greedy, conservative, retransmission,
/// variance, learning.
std::string policy_name(const PolicyKind& policy);

/// Builds a policy from its identifier; parameters take their defaults.
PolicyKind policy_from_name(std::string_view name);

/// Throws ConfigError when a parameter is out of range.
void validate_policy(const PolicyKind& policy);

/// Running erasure estimate fed by per-slot receiver feedback.
struct LearnerState {
  double eps_hat = 0.5;
  /// Estimate before the most recent observation.
  double eps_hat_prev = 0.5;
  /// Block size of the previous decision; 0 before the first one.
  int last_block = 0;
  /// Slots folded into the estimate over the whole run.
  std::int64_t slots_observed = 0;
  /// Weight samples by total slots observed (multi-frame runs) instead of by
  /// position in the current frame only.
  bool carry_across_frames = true;

  static LearnerState start(double eps_init, bool carry_across_frames = true);
};

/// Folds the loss ratio 1 - n_t/N of one slot into the running average.
///
/// Within a frame the sample at position `slots_into_frame` (0 for the
/// first slot) gets weight 1/(slots_into_frame + 1). When
/// `carry_across_frames` is set, the position is counted over the whole run,
/// so the estimate is the mean of every sample seen so far.
LearnerState learner_observe_slot(LearnerState learner, int successes, int receivers,
                                  int slots_into_frame, int horizon);

/// Optimal tables keyed by (quantized erasure estimate, N, horizon).
/// Thread safe; tables are immutable once inserted.
class TableCache {
 public:
  static constexpr double kGrid = 1e-3;

  std::shared_ptr<const PolicyTable> optimal(double erasure, int receivers, int horizon);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::tuple<long, int, int>, std::shared_ptr<const PolicyTable>> tables_;
};

/// Block size for the learning policy given the current estimate.
/// The very first decision of a run is 1.
int learner_decide(const LearnerState& learner, int slots, TableCache& cache, double delta,
                   int receivers, int horizon);

/// Precomputed data a policy reads at decision time.
struct DecisionContext {
  int horizon = 0;
  int receivers = 0;
  /// Optimal, Greedy and VarianceConstrained read this table.
  std::shared_ptr<const PolicyTable> table;
  /// Conservative choice per remaining-slot state.
  std::vector<ConservativeChoice> conservative;
  /// Learning solves tables on demand through this cache.
  std::shared_ptr<TableCache> cache;
};

DecisionContext make_context(const PolicyKind& policy, const ChannelModel& channel, int horizon,
                             std::shared_ptr<TableCache> cache = nullptr);

/// Block size for state t with `backlog` undelivered packets:
/// min(policy choice, backlog, t), and 0 when backlog is 0.
/// Learning decisions record the returned block in `learner`.
int decide(const PolicyKind& policy, int slots, int backlog, const DecisionContext& context,
           LearnerState* learner = nullptr);

/// Unclipped block size per state t = 0..horizon for a policy that does not
/// learn (saturated traffic). Throws ConfigError for LearningPolicy.
std::vector<int> decision_rule(const PolicyKind& policy, const DecisionContext& context);

}  // namespace ncsched

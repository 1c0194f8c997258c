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

#include "ncsched/policies.hpp"

#include <algorithm>
#include <cmath>

namespace ncsched {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

const PolicyTable& require_table(const DecisionContext& context, int slots) {
  if (!context.table) throw ConfigError("policy", "table-backed policy used without a solved table");
  if (slots > context.table->horizon) {
    throw ConfigError("horizon", "decision state beyond the solved table horizon");
  }
  return *context.table;
}

int unclipped_choice(const PolicyKind& policy, int slots, const DecisionContext& context) {
  return std::visit(
      Overloaded{
          [&](const OptimalPolicy&) {
            return require_table(context, slots).k_star[static_cast<std::size_t>(slots)];
          },
          [&](const GreedyPolicy&) {
            return require_table(context, slots).k_greedy[static_cast<std::size_t>(slots)];
          },
          [&](const VarianceConstrainedPolicy&) {
            return require_table(context, slots).k_star[static_cast<std::size_t>(slots)];
          },
          [&](const ConservativePolicy&) {
            if (static_cast<std::size_t>(slots) >= context.conservative.size()) {
              throw ConfigError("policy", "conservative policy used without its block table");
            }
            return context.conservative[static_cast<std::size_t>(slots)].block;
          },
          [](const RetransmissionPolicy&) { return 1; },
          [](const LearningPolicy&) -> int {
            throw ConfigError("policy", "learning policy has no fixed decision rule");
          },
      },
      policy);
}

}  // namespace

std::string policy_name(const PolicyKind& policy) {
  return std::visit(Overloaded{
                        [](const OptimalPolicy&) { return "optimal"; },
                        [](const GreedyPolicy&) { return "greedy"; },
                        [](const ConservativePolicy&) { return "conservative"; },
                        [](const RetransmissionPolicy&) { return "retransmission"; },
                        [](const VarianceConstrainedPolicy&) { return "variance"; },
                        [](const LearningPolicy&) { return "learning"; },
                    },
                    policy);
}

PolicyKind policy_from_name(std::string_view name) {
  if (name == "optimal") return OptimalPolicy{};
  if (name == "greedy") return GreedyPolicy{};
  if (name == "conservative") return ConservativePolicy{};
  if (name == "retransmission") return RetransmissionPolicy{};
  if (name == "variance") return VarianceConstrainedPolicy{};
  if (name == "learning") return LearningPolicy{};
  throw ConfigError("policy.kind", "unknown policy '" + std::string(name) + "'");
}

void validate_policy(const PolicyKind& policy) {
  if (const auto* v = std::get_if<VarianceConstrainedPolicy>(&policy)) {
    if (!(v->variance_bound > 0.0)) {
      throw ConfigError("policy.variance_bound", "must be positive");
    }
  }
  if (const auto* l = std::get_if<LearningPolicy>(&policy)) {
    if (!(l->delta >= 0.0)) throw ConfigError("policy.delta", "must be >= 0");
    if (!(l->eps_init >= 0.0 && l->eps_init <= 1.0)) {
      throw ConfigError("policy.eps_init", "must lie in [0, 1]");
    }
  }
}

LearnerState LearnerState::start(double eps_init, bool carry_across_frames) {
  if (!(eps_init >= 0.0 && eps_init <= 1.0)) {
    throw std::domain_error("initial erasure estimate must lie in [0, 1]");
  }
  LearnerState s;
  s.eps_hat = eps_init;
  s.eps_hat_prev = eps_init;
  s.carry_across_frames = carry_across_frames;
  return s;
}

LearnerState learner_observe_slot(LearnerState learner, int successes, int receivers,
                                  int slots_into_frame, int horizon) {
  if (receivers < 1) throw std::domain_error("receiver count must be >= 1");
  if (successes < 0 || successes > receivers) {
    throw std::domain_error("success count must lie in 0..N");
  }
  if (slots_into_frame < 0 || slots_into_frame >= horizon) {
    throw std::domain_error("slot position must lie in 0..T-1");
  }
  const double sample = 1.0 - static_cast<double>(successes) / receivers;
  // Weight 1/(T - t + 1), where T - t samples are already in the average.
  const double seen = learner.carry_across_frames ? static_cast<double>(learner.slots_observed)
                                                  : static_cast<double>(slots_into_frame);
  learner.eps_hat_prev = learner.eps_hat;
  learner.eps_hat = (seen * learner.eps_hat + sample) / (seen + 1.0);
  ++learner.slots_observed;
  return learner;
}

std::shared_ptr<const PolicyTable> TableCache::optimal(double erasure, int receivers,
                                                       int horizon) {
  const long cell = std::lround(std::clamp(erasure, 0.0, 1.0) / kGrid);
  const auto key = std::make_tuple(cell, receivers, horizon);
  {
    std::lock_guard lock(mutex_);
    if (auto it = tables_.find(key); it != tables_.end()) return it->second;
  }
  auto table = std::make_shared<const PolicyTable>(
      solve_mbia(horizon, ChannelModel::homogeneous(static_cast<double>(cell) * kGrid, receivers)));
  std::lock_guard lock(mutex_);
  return tables_.try_emplace(key, std::move(table)).first->second;
}

std::size_t TableCache::size() const {
  std::lock_guard lock(mutex_);
  return tables_.size();
}

int learner_decide(const LearnerState& learner, int slots, TableCache& cache, double delta,
                   int receivers, int horizon) {
  if (slots < 1) throw std::domain_error("learner_decide needs t >= 1");
  if (learner.last_block == 0) return 1;
  const auto table = cache.optimal(learner.eps_hat, receivers, std::max(horizon, slots));
  const int target = table->k_star[static_cast<std::size_t>(slots)];
  if (std::abs(learner.eps_hat - learner.eps_hat_prev) > delta) {
    // Estimate still moving: grow by at most one block.
    return target >= learner.last_block + 1 ? learner.last_block + 1 : learner.last_block;
  }
  return target;
}

DecisionContext make_context(const PolicyKind& policy, const ChannelModel& channel, int horizon,
                             std::shared_ptr<TableCache> cache) {
  validate_policy(policy);
  DecisionContext context;
  context.horizon = horizon;
  context.receivers = channel.receivers();
  std::visit(Overloaded{
                 [&](const OptimalPolicy&) {
                   context.table = std::make_shared<const PolicyTable>(solve_mbia(horizon, channel));
                 },
                 [&](const GreedyPolicy&) {
                   context.table = std::make_shared<const PolicyTable>(solve_mbia(horizon, channel));
                 },
                 [&](const VarianceConstrainedPolicy& v) {
                   context.table = std::make_shared<const PolicyTable>(
                       solve_mbia(horizon, channel, variance_caps(v.variance_bound, channel, horizon)));
                 },
                 [&](const ConservativePolicy&) {
                   context.conservative.resize(static_cast<std::size_t>(horizon) + 1);
                   context.conservative[0] = {0, false};
                   for (int t = 1; t <= horizon; ++t) {
                     context.conservative[static_cast<std::size_t>(t)] =
                         conservative_block_size(t, channel);
                   }
                 },
                 [](const RetransmissionPolicy&) {},
                 [&](const LearningPolicy&) {
                   context.cache = cache ? std::move(cache) : std::make_shared<TableCache>();
                 },
             },
             policy);
  return context;
}

int decide(const PolicyKind& policy, int slots, int backlog, const DecisionContext& context,
           LearnerState* learner) {
  if (slots < 1) throw std::domain_error("decide needs t >= 1");
  if (backlog < 0) throw std::domain_error("backlog must be >= 0");
  if (backlog == 0) return 0;
  int choice = 0;
  if (const auto* l = std::get_if<LearningPolicy>(&policy)) {
    if (!learner) throw ConfigError("policy", "learning policy needs a learner state");
    if (!context.cache) throw ConfigError("policy", "learning policy needs a table cache");
    choice = learner_decide(*learner, slots, *context.cache, l->delta, context.receivers,
                            context.horizon);
  } else {
    choice = unclipped_choice(policy, slots, context);
  }
  const int block = std::min({choice, backlog, slots});
  if (learner && block > 0) learner->last_block = block;
  return block;
}

std::vector<int> decision_rule(const PolicyKind& policy, const DecisionContext& context) {
  std::vector<int> rule(static_cast<std::size_t>(context.horizon) + 1, 0);
  for (int t = 1; t <= context.horizon; ++t) {
    rule[static_cast<std::size_t>(t)] = std::min(unclipped_choice(policy, t, context), t);
  }
  return rule;
}

}  // namespace ncsched

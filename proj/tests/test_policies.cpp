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

#include <doctest.h>

#include <cmath>
#include <random>

#include "ncsched/policies.hpp"

using namespace ncsched;

TEST_CASE("policy names round-trip") {
  for (const char* name : {"optimal", "greedy", "conservative", "retransmission", "variance", "learning"}) {
    CHECK(policy_name(policy_from_name(name)) == name);
  }
  CHECK_THROWS_AS(policy_from_name("fastest"), ConfigError);
  CHECK_THROWS_AS(validate_policy(VarianceConstrainedPolicy{0.0}), ConfigError);
  CHECK_THROWS_AS(validate_policy(LearningPolicy{-0.1, 0.5}), ConfigError);
  CHECK_THROWS_AS(validate_policy(LearningPolicy{0.1, 1.5}), ConfigError);
  CHECK_NOTHROW(validate_policy(LearningPolicy{INFINITY, 0.5}));
}

TEST_CASE("decisions are clipped by backlog and slots") {
  const auto ch = ChannelModel::homogeneous(0.1, 2);
  const PolicyKind opt = OptimalPolicy{};
  const DecisionContext ctx = make_context(opt, ch, 20);
  REQUIRE(ctx.table->k_star[7] >= 3);
  CHECK(decide(opt, 7, 2, ctx) == 2);
  CHECK(decide(opt, 5, 0, ctx) == 0);
  CHECK(decide(RetransmissionPolicy{}, 9, 7, make_context(RetransmissionPolicy{}, ch, 9)) == 1);
  const auto half = ChannelModel::homogeneous(0.5, 1);
  CHECK(decide(opt, 3, 10, make_context(opt, half, 3)) == 1);
  CHECK_THROWS_AS(decide(opt, 21, 5, ctx), ConfigError);
  CHECK_THROWS_AS(decide(opt, 3, 5, DecisionContext{}), ConfigError);
  CHECK_THROWS_AS(decide(opt, 0, 5, ctx), std::domain_error);

  for (const PolicyKind& p : {PolicyKind{OptimalPolicy{}}, PolicyKind{GreedyPolicy{}},
                              PolicyKind{ConservativePolicy{}}, PolicyKind{RetransmissionPolicy{}},
                              PolicyKind{VarianceConstrainedPolicy{30.0}}}) {
    const DecisionContext c = make_context(p, ch, 20);
    for (int t = 1; t <= 20; ++t) {
      for (int m = 0; m <= 25; ++m) {
        const int d = decide(p, t, m, c);
        if (m == 0) {
          CHECK(d == 0);
        } else {
          CHECK(d >= 1);
          CHECK(d <= std::min(t, m));
        }
      }
    }
  }
}

TEST_CASE("table-backed rules read the solved table") {
  const auto ch = ChannelModel::homogeneous(0.2, 5);
  const PolicyKind opt = OptimalPolicy{};
  const PolicyKind greedy = GreedyPolicy{};
  const DecisionContext c = make_context(opt, ch, 30);
  const DecisionContext g = make_context(greedy, ch, 30);
  const auto rule = decision_rule(opt, c);
  const auto grule = decision_rule(greedy, g);
  for (int t = 1; t <= 30; ++t) {
    CHECK(rule[static_cast<std::size_t>(t)] == c.table->k_star[static_cast<std::size_t>(t)]);
    CHECK(grule[static_cast<std::size_t>(t)] == g.table->k_greedy[static_cast<std::size_t>(t)]);
    CHECK(decide(opt, t, 100, c) == c.table->k_star[static_cast<std::size_t>(t)]);
  }
  const PolicyKind cons = ConservativePolicy{};
  const DecisionContext cc = make_context(cons, ch, 30);
  for (int t = 1; t <= 30; ++t) {
    CHECK(decide(cons, t, 100, cc) == conservative_block_size(t, ch).block);
  }
  CHECK_THROWS_AS(decision_rule(LearningPolicy{}, c), ConfigError);
}

TEST_CASE("learner moving average") {
  LearnerState s = LearnerState::start(0.5);
  // All receivers got the slot: sample 0 replaces the prior.
  s = learner_observe_slot(s, 10, 10, 0, 10);
  CHECK(s.eps_hat == doctest::Approx(0.0));
  CHECK(s.eps_hat_prev == doctest::Approx(0.5));

  // One sample (0.5) already folded in, next sample 0.8: (1 * 0.5 + 0.8) / 2.
  LearnerState a;
  a.eps_hat = 0.5;
  a.slots_observed = 1;
  a = learner_observe_slot(a, 2, 10, 1, 10);
  CHECK(a.eps_hat == doctest::Approx(0.65));

  LearnerState c = LearnerState::start(0.9);
  for (int k = 0; k < 10; ++k) c = learner_observe_slot(c, 7, 10, k, 10);
  CHECK(c.eps_hat == doctest::Approx(0.3));

  CHECK_THROWS_AS(learner_observe_slot(c, 11, 10, 0, 10), std::domain_error);
  CHECK_THROWS_AS(learner_observe_slot(c, -1, 10, 0, 10), std::domain_error);
  CHECK_THROWS_AS(LearnerState::start(1.5), std::domain_error);
}

TEST_CASE("per-frame weighting restarts with each frame") {
  LearnerState s = LearnerState::start(0.5, false);
  for (int k = 0; k < 10; ++k) s = learner_observe_slot(s, 0, 4, k, 10);
  CHECK(s.eps_hat == doctest::Approx(1.0));
  s = learner_observe_slot(s, 4, 4, 0, 10);
  CHECK(s.eps_hat == doctest::Approx(0.0));
}

TEST_CASE("learner decisions follow the increment rule") {
  TableCache cache;
  const int n = 5;
  const int horizon = 30;
  const auto table = cache.optimal(0.1, n, horizon);
  LearnerState s;
  s.eps_hat = 0.1;

  s.last_block = 0;
  CHECK(learner_decide(s, 20, cache, 0.01, n, horizon) == 1);

  const int t = 25;
  const int target = table->k_star[t];
  REQUIRE(target >= 4);
  s.last_block = 2;
  s.eps_hat_prev = 0.1;
  CHECK(learner_decide(s, t, cache, 0.01, n, horizon) == target);
  s.eps_hat_prev = 0.2;
  CHECK(learner_decide(s, t, cache, 0.01, n, horizon) == 3);
  s.last_block = target;
  CHECK(learner_decide(s, t, cache, 0.01, n, horizon) == target);
  s.last_block = target + 2;
  CHECK(learner_decide(s, t, cache, 0.01, n, horizon) == target + 2);
  CHECK(cache.size() == 1);
}

TEST_CASE("table cache quantizes the estimate") {
  TableCache cache;
  const auto a = cache.optimal(0.3001, 4, 10);
  const auto b = cache.optimal(0.2999, 4, 10);
  CHECK(a == b);
  CHECK(cache.size() == 1);
  cache.optimal(0.302, 4, 10);
  CHECK(cache.size() == 2);
}

TEST_CASE("estimator concentration over 10^4 slots") {
  const double eps = 0.3;
  const int n = 10;
  std::mt19937_64 gen(7);
  std::binomial_distribution<int> succ(n, 1 - eps);
  LearnerState s = LearnerState::start(0.5);
  const int frames = 1000;
  const int horizon = 10;
  for (int f = 0; f < frames; ++f) {
    for (int k = 0; k < horizon; ++k) s = learner_observe_slot(s, succ(gen), n, k, horizon);
  }
  CHECK(std::abs(s.eps_hat - eps) <= 3 * std::sqrt(eps * (1 - eps) / (n * frames * horizon)));
}

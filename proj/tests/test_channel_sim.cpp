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
#include <sstream>

#include "ncsched/channel_sim.hpp"

using namespace ncsched;

namespace {

const PolicyKind kOptimal = OptimalPolicy{};

}  // namespace

TEST_CASE("lossless channel completes every block in K slots") {
  const auto ch = ChannelModel::homogeneous(0.0, 4);
  const DecisionContext ctx = make_context(kOptimal, ch, 5);
  const FrameTrace tr = simulate_frame(kOptimal, ctx, 5, 10, ch, RngSpec{1, 0});
  int slots = 0;
  int planned = 0;
  for (const auto& d : tr.decisions) {
    CHECK(d.block == ctx.table->k_star[static_cast<std::size_t>(d.state)]);
    slots += d.block;
    planned += d.block;
  }
  CHECK(slots == 5);
  CHECK(tr.delivered == planned);
  CHECK(tr.delivered == 5);
  CHECK(tr.blocks_abandoned == 0);
}

TEST_CASE("dead channel delivers nothing") {
  const auto ch = ChannelModel::homogeneous(1.0, 3);
  for (const PolicyKind& p : {PolicyKind{OptimalPolicy{}}, PolicyKind{RetransmissionPolicy{}},
                              PolicyKind{GreedyPolicy{}}}) {
    const DecisionContext ctx = make_context(p, ch, 10);
    const FrameTrace tr = simulate_frame(p, ctx, 10, 10, ch, RngSpec{2, 0});
    CHECK(tr.delivered == 0);
    CHECK(tr.slots_used == 10);
  }
}

TEST_CASE("trace replay reproduces the delivered count") {
  const auto ch = ChannelModel({0.2, 0.4, 0.3});
  for (const PolicyKind& p : {PolicyKind{OptimalPolicy{}}, PolicyKind{GreedyPolicy{}},
                              PolicyKind{RetransmissionPolicy{}}}) {
    const DecisionContext ctx = make_context(p, ch, 15);
    for (std::uint64_t r = 0; r < 200; ++r) {
      const FrameTrace tr = simulate_frame(p, ctx, 15, 9, ch, RngSpec{3, r});
      REQUIRE(rescore_trace(tr) == tr.delivered);
      REQUIRE(tr.received.size() == static_cast<std::size_t>(tr.slots_used) * 3);
      int sum = 0;
      for (const auto& d : tr.decisions) sum += d.block;
      CHECK(tr.delivered <= std::min(sum, 9));
    }
  }
}

TEST_CASE("per-receiver reception marginals match the channel") {
  const auto ch = ChannelModel({0.1, 0.5, 0.8});
  const PolicyKind retx = RetransmissionPolicy{};
  const DecisionContext ctx = make_context(retx, ch, 20);
  std::vector<double> got(3, 0.0);
  double slots = 0;
  for (std::uint64_t r = 0; r < 5000; ++r) {
    const FrameTrace tr = simulate_frame(retx, ctx, 20, 20, ch, RngSpec{4, r});
    for (int s = 0; s < tr.slots_used; ++s) {
      for (int i = 0; i < 3; ++i) got[static_cast<std::size_t>(i)] += tr.received_bit(s, i);
    }
    slots += tr.slots_used;
  }
  for (int i = 0; i < 3; ++i) {
    const double p = 1 - ch.erasures()[static_cast<std::size_t>(i)];
    CHECK(std::abs(got[static_cast<std::size_t>(i)] / slots - p) < 4 * std::sqrt(p * (1 - p) / slots));
  }
}

TEST_CASE("trace CSV layout") {
  const auto ch = ChannelModel::homogeneous(0.3, 2);
  const DecisionContext ctx = make_context(kOptimal, ch, 3);
  const FrameTrace tr = simulate_frame(kOptimal, ctx, 3, 3, ch, RngSpec{5, 0});
  std::ostringstream out;
  write_trace_csv(out, tr);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "slot,state_t,block_id,receiver_id,received_bit");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == tr.slots_used * 2);
}

TEST_CASE("parallel Monte Carlo equals the serial reference") {
  const auto ch = ChannelModel::homogeneous(0.3, 4);
  for (const PolicyKind& p : {PolicyKind{OptimalPolicy{}}, PolicyKind{ConservativePolicy{}},
                              PolicyKind{LearningPolicy{0.01, 0.5}}}) {
    const DecisionContext ctx = make_context(p, ch, 12);
    const auto a = monte_carlo_throughput(p, ctx, 12, 8, ch, 3000, RngSpec{6, 1});
    const auto b = monte_carlo_throughput_serial(p, ctx, 12, 8, ch, 3000, RngSpec{6, 1});
    CHECK(a.mean == b.mean);
    CHECK(a.variance == b.variance);
    CHECK(a.histogram == b.histogram);
  }
}

TEST_CASE("single replication is reproducible") {
  const auto ch = ChannelModel::homogeneous(0.4, 6);
  const DecisionContext ctx = make_context(kOptimal, ch, 10);
  const auto a = monte_carlo_throughput(kOptimal, ctx, 10, 10, ch, 1, RngSpec{99, 0});
  const auto b = monte_carlo_throughput(kOptimal, ctx, 10, 10, ch, 1, RngSpec{99, 0});
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == 0.0);
  std::ostringstream out;
  write_histogram_csv(out, a);
  CHECK(out.str().rfind("delivered,count\n", 0) == 0);
}

TEST_CASE("three-slot instance matches its DP value") {
  const auto ch = ChannelModel::homogeneous(0.5, 1);
  const DecisionContext ctx = make_context(kOptimal, ch, 3);
  const auto est = monte_carlo_throughput(kOptimal, ctx, 3, 10, ch, 1000000, RngSpec{7, 0});
  CHECK(std::abs(est.mean - 1.5) < 0.01);
}

TEST_CASE("policy ordering at a good channel") {
  const auto ch = ChannelModel::homogeneous(0.2, 10);
  auto run = [&](const PolicyKind& p) {
    return monte_carlo_throughput(p, make_context(p, ch, 10), 10, 10, ch, 100000, RngSpec{8, 0});
  };
  const auto opt = run(OptimalPolicy{});
  const auto greedy = run(GreedyPolicy{});
  const auto cons = run(ConservativePolicy{});
  const auto retx = run(RetransmissionPolicy{});
  CHECK(opt.mean - retx.mean > 5 * std::hypot(opt.std_error, retx.std_error));
  CHECK(greedy.mean >= cons.mean - 2 * std::hypot(greedy.std_error, cons.std_error));
}

TEST_CASE("variance-constrained tradeoff") {
  const std::vector<double> bounds = {2.0, 8.0, 20.0, 50.0, 120.0, 1e9};
  const auto rows = variance_tradeoff_run(bounds, ChannelModel::homogeneous(0.1, 10), 10, 100000,
                                          RngSpec{9, 0});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].block_cap >= rows[i - 1].block_cap);
    CHECK(rows[i].mean >= rows[i - 1].mean - 3 * std::hypot(rows[i].std_error, rows[i - 1].std_error));
  }
  // An inactive bound reproduces the unconstrained optimum.
  const auto ch = ChannelModel::homogeneous(0.1, 10);
  const auto opt = monte_carlo_throughput(kOptimal, make_context(kOptimal, ch, 10), 10, 10, ch,
                                          100000, RngSpec{9, 0});
  CHECK(rows.back().mean == opt.mean);

  // A bound that still costs throughput at erasure 0.1 leaves a bad channel
  // untouched.
  CHECK(rows[3].mean < opt.mean - 5 * opt.std_error);
  const auto bad = ChannelModel::homogeneous(0.5, 10);
  const auto tight = variance_tradeoff_run(std::vector<double>{120.0, 1e9}, bad, 10, 100000,
                                           RngSpec{10, 0});
  CHECK(std::abs(tight[0].mean - tight[1].mean) <
        2 * std::hypot(tight[0].std_error, tight[1].std_error) + 1e-12);
}

TEST_CASE("learning run") {
  const auto ch = ChannelModel::homogeneous(0.3, 10);
  const auto frames = run_learning(LearningPolicy{0.01, 0.5}, ch, 10, 100, RngSpec{11, 0});
  REQUIRE(frames.size() == 100);
  CHECK(std::abs(frames[9].eps_hat - 0.3) <= 0.05);
  CHECK(frames[0].decisions.front().block == 1);
  for (const auto& f : frames) {
    for (const auto& d : f.decisions) {
      if (d.estimate_moving && d.previous_block > 0) CHECK(d.block <= d.previous_block + 1);
    }
  }
  // Determinism.
  const auto again = run_learning(LearningPolicy{0.01, 0.5}, ch, 10, 100, RngSpec{11, 0});
  for (std::size_t i = 0; i < frames.size(); ++i) CHECK(frames[i].delivered == again[i].delivered);
}

TEST_CASE("delta zero takes the increment branch whenever the estimate moves") {
  const auto ch = ChannelModel::homogeneous(0.2, 10);
  const auto frames = run_learning(LearningPolicy{0.0, 0.2}, ch, 30, 5, RngSpec{12, 0});
  int moving = 0;
  for (const auto& f : frames) {
    for (const auto& d : f.decisions) {
      if (!d.estimate_moving || d.previous_block == 0) continue;
      ++moving;
      CHECK(d.block <= d.previous_block + 1);
    }
  }
  CHECK(moving > 0);
}

TEST_CASE("noiseless estimate reduces learning to the optimal rule") {
  // Lossless channel: every sample is 0, so the estimate is exact after the
  // first slot and never moves again.
  const auto ch = ChannelModel::homogeneous(0.0, 5);
  const int horizon = 12;
  const auto frames = run_learning(LearningPolicy{0.0, 0.0}, ch, horizon, 3, RngSpec{13, 0});
  const PolicyTable table = solve_mbia(horizon, ch);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& ds = frames[f].decisions;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (f == 0 && i == 0) {
        CHECK(ds[i].block == 1);
        continue;
      }
      CHECK(ds[i].block == table.k_star[static_cast<std::size_t>(ds[i].state)]);
    }
  }
}

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


// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when any
// criterion fails.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ncsched/channel_sim.hpp"
#include "ncsched/coding_math.hpp"
#include "ncsched/dp_solver.hpp"
#include "ncsched/multiflow.hpp"
#include "ncsched/policies.hpp"
#include "oracles.hpp"

using namespace ncsched;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), pattern, args...);
  return buf;
}

const std::vector<double> kEpsGrid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
const std::vector<int> kReceivers = {1, 2, 5, 10};

Outcome oracle_equivalence() {
  const auto start = Clock::now();
  int mismatches = 0;
  double worst = 0.0;
  int solved = 0;
  for (double e : kEpsGrid) {
    for (int n : kReceivers) {
      const auto ch = ChannelModel::homogeneous(e, n);
      for (int t = 0; t <= 25; ++t) {
        const PolicyTable fast = solve_mbia(t, ch);
        const PolicyTable slow = solve_bruteforce(t, ch);
        ++solved;
        for (int s = 0; s <= t; ++s) {
          const auto i = static_cast<std::size_t>(s);
          worst = std::max(worst, std::abs(fast.value[i] - slow.value[i]));
          if (fast.k_star[i] != slow.k_star[i]) ++mismatches;
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {mismatches == 0 && worst <= 1e-10 && elapsed < 60.0,
          fmt("%d tables, max |dV| = %.3g, K* mismatches = %d, %.1f s", solved, worst, mismatches,
              elapsed)};
}

Outcome hand_instance() {
  const PolicyTable p = solve_mbia(3, ChannelModel::homogeneous(0.5, 1));
  const bool ok = p.value[3] == 1.5 && p.k_star == std::vector<int>{0, 1, 1, 1} && p.k_greedy[3] == 2;
  return {ok, fmt("V3 = %.17g, K* = [%d,%d,%d,%d], greedy K3 = %d", p.value[3], p.k_star[0],
                  p.k_star[1], p.k_star[2], p.k_star[3], p.k_greedy[3])};
}

Outcome structure() {
  int violations = 0;
  int tables = 0;
  for (double e : kEpsGrid) {
    for (int n : kReceivers) {
      const auto ch = ChannelModel::homogeneous(e, n);
      const int horizon = 60;
      const PolicyTable p = solve_mbia(horizon, ch);
      ++tables;
      if (!check_structure(p).ok()) ++violations;
      if (p.k_star[1] != 1 || p.k_star[2] != 1) ++violations;
      if (n == 1) {
        for (int t = 1; t <= horizon; ++t) violations += p.k_star[static_cast<std::size_t>(t)] != 1;
      }
      const DecodingTable dt = DecodingTable::build(ch, horizon);
      for (int t = 1; t <= horizon; ++t) {
        // Decoding probability decreasing in K; immediate reward unimodal in K.
        bool falling = false;
        for (int k = 1; k <= t; ++k) {
          if (dt(k, t) > dt(k - 1, t) + 1e-14) ++violations;
          const double r = k * dt(k, t);
          const double prev = (k - 1) * dt(k - 1, t);
          if (r < prev - 1e-12) falling = true;
          if (falling && r > prev + 1e-12) ++violations;
        }
      }
    }
  }
  return {violations == 0, fmt("%d tables (T = 60), %d violations", tables, violations)};
}

Outcome threshold() {
  const double e21 = retransmission_threshold(2, 1);
  int order = 0;
  int k_star = 0;
  std::vector<std::vector<double>> eps(31, std::vector<double>(11, 0.0));
  for (int t = 2; t <= 30; ++t) {
    for (int n = 1; n <= 10; ++n) eps[static_cast<std::size_t>(t)][static_cast<std::size_t>(n)] =
        retransmission_threshold(t, n);
  }
  for (int t = 2; t <= 30; ++t) {
    for (int n = 1; n <= 10; ++n) {
      const double v = eps[static_cast<std::size_t>(t)][static_cast<std::size_t>(n)];
      if (t > 2 && !(v > eps[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(n)])) ++order;
      if (n > 1 && !(v < eps[static_cast<std::size_t>(t)][static_cast<std::size_t>(n - 1)])) ++order;
      for (double above : {v + 1e-6, v + 0.5 * (1.0 - v)}) {
        if (above >= 1.0) continue;
        const PolicyTable p = solve_mbia(t, ChannelModel::homogeneous(above, n));
        for (int j = 1; j <= t; ++j) k_star += p.k_star[static_cast<std::size_t>(j)] != 1;
      }
    }
  }
  return {std::abs(e21 - 1.0 / 3.0) <= 1e-9 && order == 0 && k_star == 0,
          fmt("eps*(2,1) = %.12f, monotonicity violations = %d, K* != 1 above threshold = %d", e21,
              order, k_star)};
}

Outcome complexity() {
  double worst = 0.0;
  for (double e : {0.1, 0.3, 0.6}) {
    for (int n : {1, 5, 10}) {
      std::vector<double> x;
      std::vector<double> y;
      for (int t : {50, 100, 200, 400}) {
        const PolicyTable p = solve_mbia(t, ChannelModel::homogeneous(e, n));
        x.push_back(std::log(static_cast<double>(t)));
        y.push_back(std::log(static_cast<double>(p.stats.action_evals + p.stats.greedy_evals)));
      }
      const double mx = (x[0] + x[1] + x[2] + x[3]) / 4;
      const double my = (y[0] + y[1] + y[2] + y[3]) / 4;
      double sxy = 0.0;
      double sxx = 0.0;
      for (std::size_t i = 0; i < 4; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
      }
      worst = std::max(worst, sxy / sxx);
    }
  }
  return {worst <= 2.2, fmt("largest fitted exponent %.3f over 9 channels", worst)};
}

Outcome simulator_consistency() {
  const auto start = Clock::now();
  const PolicyKind opt = OptimalPolicy{};
  double worst_z = 0.0;
  int cells = 0;
  int failures = 0;
  for (double e : {0.2, 0.5}) {
    for (int n : {1, 5, 10}) {
      const auto ch = ChannelModel::homogeneous(e, n);
      const PolicyTable bf = solve_bruteforce(10, ch);
      for (int t = 1; t <= 10; ++t) {
        const DecisionContext ctx = make_context(opt, ch, t);
        const auto est = monte_carlo_throughput(opt, ctx, t, t, ch, 1000000,
                                                RngSpec{2026, static_cast<std::uint64_t>(cells)});
        const double z = std::abs(est.mean - bf.value[static_cast<std::size_t>(t)]) / est.std_error;
        worst_z = std::max(worst_z, z);
        failures += z > 4.0;
        ++cells;
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {failures == 0 && elapsed < 300.0,
          fmt("%d cells at 1e6 replications, max |z| = %.2f, %.1f s", cells, worst_z, elapsed)};
}

Outcome policy_ordering() {
  const std::vector<PolicyKind> policies = {OptimalPolicy{}, GreedyPolicy{}, ConservativePolicy{},
                                            RetransmissionPolicy{}};
  std::string detail;
  int failures = 0;
  std::uint64_t stream = 0;
  for (double e : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.9}) {
    const auto ch = ChannelModel::homogeneous(e, 10);
    std::vector<ThroughputEstimate> est;
    for (const auto& p : policies) {
      est.push_back(monte_carlo_throughput(p, make_context(p, ch, 10), 10, 10, ch, 100000,
                                           RngSpec{77, stream}));
    }
    ++stream;
    auto tol = [&](std::size_t a, std::size_t b) {
      return 2.0 * std::hypot(est[a].std_error, est[b].std_error);
    };
    if (e < 0.8) {
      for (std::size_t i = 1; i < est.size(); ++i) failures += est[i].mean > est[i - 1].mean + tol(i - 1, i);
    } else {
      for (std::size_t i = 0; i < est.size(); ++i) {
        for (std::size_t j = i + 1; j < est.size(); ++j) {
          failures += std::abs(est[i].mean - est[j].mean) > tol(i, j);
        }
      }
    }
    detail += fmt(" e=%.1f:%.3f/%.3f/%.3f/%.3f", e, est[0].mean, est[1].mean, est[2].mean, est[3].mean);
  }
  return {failures == 0, fmt("%d failures; opt/greedy/cons/retx", failures) + detail};
}

Outcome learning() {
  const auto ch = ChannelModel::homogeneous(0.3, 10);
  const int frames_per_run = 100;
  double worst_err = 0.0;
  double worst_ratio = 1.0;
  int oversized = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto frames = run_learning(LearningPolicy{0.01, 0.5}, ch, 10, frames_per_run, RngSpec{seed, 0});
    worst_err = std::max(worst_err, std::abs(frames[9].eps_hat - 0.3));
    double got = 0.0;
    double want = 0.0;
    for (const auto& f : frames) {
      if (f.frame >= frames_per_run / 2) {
        got += f.delivered;
        want += f.reference_delivered;
      }
      for (const auto& d : f.decisions) {
        if (d.estimate_moving && d.previous_block > 0 && d.block > d.previous_block + 1) ++oversized;
      }
    }
    worst_ratio = std::min(worst_ratio, got / want);
  }
  return {worst_err <= 0.05 && worst_ratio >= 0.95 && oversized == 0,
          fmt("5 seeds: max |eps_hat - 0.3| after 10 frames = %.4f, min steady-state ratio = %.4f, "
              "oversized steps = %d",
              worst_err, worst_ratio, oversized)};
}

std::vector<FlowSpec> reference_flows(double lambda) {
  std::vector<FlowSpec> flows(2);
  for (int f = 0; f < 2; ++f) {
    flows[static_cast<std::size_t>(f)].id = f;
    flows[static_cast<std::size_t>(f)].lambda = lambda;
  }
  return flows;
}

Outcome multiflow() {
  const int horizon = 10;
  std::string detail;
  bool ok = true;

  // Feasible range.
  double worst_ratio = 1.0;
  double worst_slope = -1e9;
  for (double lambda : {1.0, 1.5}) {
    const auto flows = reference_flows(lambda);
    const auto tr = run_online(flows, horizon, 100000, 0.1, RngSpec{1, 0});
    for (const auto& f : tr.flows) {
      worst_ratio = std::min(worst_ratio, f.delivery_ratio);
      worst_slope = std::max(worst_slope, f.deficit_slope);
    }
    ok = ok && is_stable(tr, 1e-3);
  }
  ok = ok && worst_ratio >= 0.78;
  detail += fmt("lambda 1.0/1.5: min ratio %.4f, max slope %.2e;", worst_ratio, worst_slope);

  // Past the knee.
  double min_slope = 1e9;
  for (double lambda : {2.5, 3.0}) {
    const auto tr = run_online(reference_flows(lambda), horizon, 100000, 0.1, RngSpec{1, 1});
    for (const auto& f : tr.flows) min_slope = std::min(min_slope, f.deficit_slope);
  }
  ok = ok && min_slope > 0.0;
  detail += fmt(" lambda 2.5/3.0: min slope %.3e;", min_slope);

  // Gap to the static dual optimum, averaged over seeds.
  const auto flows = reference_flows(1.5);
  const double reference = static_dual_iteration(flows, horizon, 0.001, 20000).weighted_optimum;
  std::vector<double> gaps;
  for (double rho : {1.0, 0.1, 0.01}) {
    double sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      sum += reference - run_online(flows, horizon, 100000, rho, RngSpec{seed, 0}).weighted_throughput;
    }
    gaps.push_back(sum / 3.0);
  }
  ok = ok && gaps[0] > gaps[1] && gaps[1] > gaps[2];
  detail += fmt(" static optimum %.5f, gap at rho 1/0.1/0.01 = %.5f/%.5f/%.5f", reference, gaps[0],
                gaps[1], gaps[2]);
  return {ok, detail};
}

Outcome rate_region() {
  const auto flows = reference_flows(3.0);
  const std::vector<double> grid = {0.1, 0.25, 0.4, 0.55, 0.7, 0.85};
  const auto pts = rate_region_sweep(flows, grid, 10, 0.1, 20000, RngSpec{3, 0});
  int nc = 0;
  int retx = 0;
  int retx_only = 0;
  int nc_only = 0;
  for (const auto& p : pts) {
    nc += p.stable_nc;
    retx += p.stable_retx;
    retx_only += p.stable_retx && !p.stable_nc;
    nc_only += p.stable_nc && !p.stable_retx;
  }
  return {retx_only == 0 && nc_only >= 1,
          fmt("36 points: NC feasible %d, retransmission feasible %d, NC-only %d, retx-only %d", nc,
              retx, nc_only, retx_only)};
}

Outcome allocation() {
  std::mt19937_64 gen(20261016);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int flows = 1 + static_cast<int>(gen() % 3);
    const int horizon = static_cast<int>(gen() % 13);
    std::vector<ServiceCurve> curves(static_cast<std::size_t>(flows));
    std::vector<double> w;
    std::vector<double> nu;
    for (auto& c : curves) {
      c.c.push_back(0.0);
      for (int s = 1; s <= horizon; ++s) c.c.push_back(c.c.back() + (gen() % 4 == 0 ? 0.0 : u(gen)));
      w.push_back(0.1 + u(gen));
      nu.push_back(gen() % 3 == 0 ? 0.0 : 20 * u(gen));
    }
    const double rho = 0.05 + u(gen);
    auto gain = [&](int f, int s) {
      const auto i = static_cast<std::size_t>(f);
      return (w[i] / rho + nu[i]) * curves[i].c[static_cast<std::size_t>(s)];
    };
    mismatches += allocate_slots(curves, w, nu, rho, horizon) !=
                  oracle::enumerate_allocation(flows, horizon, gain);
  }
  return {mismatches == 0, fmt("1000 instances, %d mismatches", mismatches)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"AC1 oracle equivalence", oracle_equivalence},
      {"AC2 hand-derived instance", hand_instance},
      {"AC3 structural properties", structure},
      {"AC4 retransmission threshold", threshold},
      {"AC5 solver complexity", complexity},
      {"AC6 simulator-DP consistency", simulator_consistency},
      {"AC7 policy ordering", policy_ordering},
      {"AC8 channel learning", learning},
      {"AC9 multi-flow scheduler", multiflow},
      {"AC10 rate region", rate_region},
      {"AC11 slot allocation", allocation},
  };
  std::printf("threads: %d\n", omp_get_max_threads());
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.name, seconds_since(start),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed,
              std::size(criteria));
  return failed == 0 ? 0 : 1;
}

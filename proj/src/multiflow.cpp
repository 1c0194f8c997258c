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

#include "ncsched/multiflow.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ncsched/channel_sim.hpp"
#include "ncsched/csv.hpp"
#include "ncsched/dp_solver.hpp"
#include "ncsched/errors.hpp"
#include "ncsched/policies.hpp"

namespace ncsched {

namespace {

constexpr double kTieTol = 1e-12;

int auto_trials(const FlowSpec& flow, int horizon) {
  if (flow.arrivals.trials > 0) return flow.arrivals.trials;
  return std::max(horizon, static_cast<int>(std::ceil(flow.lambda)));
}

PolicyKind intra_policy(IntraFlowPolicy policy) {
  if (policy == IntraFlowPolicy::kRetransmission) return RetransmissionPolicy{};
  return OptimalPolicy{};
}

}  // namespace

void validate_flow(const FlowSpec& flow, int horizon) {
  if (!(flow.lambda >= 0.0)) throw ConfigError("flows.lambda", "must be >= 0");
  if (!(flow.q >= 0.0 && flow.q <= 1.0)) throw ConfigError("flows.q", "must lie in [0, 1]");
  if (!(flow.w > 0.0)) throw ConfigError("flows.w", "must be positive");
  if (flow.arrivals.trials < 0) throw ConfigError("flows.trials", "must be >= 0");
  if (flow.arrivals.kind == ArrivalKind::kBinomial && flow.lambda > auto_trials(flow, horizon)) {
    throw ConfigError("flows.trials", "binomial arrivals need trials >= lambda");
  }
}

int sample_arrivals(const FlowSpec& flow, int horizon, std::mt19937_64& engine) {
  if (flow.lambda <= 0.0) return 0;
  if (flow.arrivals.kind == ArrivalKind::kPoisson) {
    return std::poisson_distribution<int>(flow.lambda)(engine);
  }
  const int n = auto_trials(flow, horizon);
  return std::binomial_distribution<int>(n, std::min(1.0, flow.lambda / n))(engine);
}

std::vector<double> arrival_pmf(const FlowSpec& flow, int horizon) {
  if (horizon < 0) throw std::domain_error("horizon must be >= 0");
  std::vector<double> pmf(static_cast<std::size_t>(horizon) + 1, 0.0);
  if (flow.lambda <= 0.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  double below = 0.0;
  for (int m = 0; m < horizon; ++m) {
    double lp = 0.0;
    if (flow.arrivals.kind == ArrivalKind::kPoisson) {
      lp = m * std::log(flow.lambda) - flow.lambda - std::lgamma(m + 1.0);
    } else {
      const int trials = auto_trials(flow, horizon);
      const double p = std::min(1.0, flow.lambda / trials);
      if (m > trials) break;
      if (p >= 1.0) {
        pmf[static_cast<std::size_t>(m)] = m == trials ? 1.0 : 0.0;
        below += pmf[static_cast<std::size_t>(m)];
        continue;
      }
      lp = std::lgamma(trials + 1.0) - std::lgamma(m + 1.0) - std::lgamma(trials - m + 1.0) +
           m * std::log(p) + (trials - m) * std::log1p(-p);
    }
    pmf[static_cast<std::size_t>(m)] = std::exp(lp);
    below += pmf[static_cast<std::size_t>(m)];
  }
  pmf[static_cast<std::size_t>(horizon)] = std::max(0.0, 1.0 - below);
  return pmf;
}

ServiceCurve service_curve(const FlowSpec& flow, int horizon, IntraFlowPolicy policy) {
  if (horizon < 1) throw std::domain_error("service curve needs T >= 1");
  ServiceCurve curve;
  curve.flow_id = flow.id;
  const DecodingTable table = DecodingTable::build(flow.channel, horizon);
  if (policy == IntraFlowPolicy::kOptimal) {
    curve.c = solve_mbia(table).value;
  } else {
    std::vector<int> ones(static_cast<std::size_t>(horizon) + 1, 1);
    ones[0] = 0;
    curve.c = evaluate_policy(table, ones);
  }
  return curve;
}

double ServiceTable::operator()(int slots, int backlog) const {
  if (slots < 0 || slots > horizon_) throw std::out_of_range("slot count outside the service table");
  if (backlog < 0) throw std::domain_error("backlog must be >= 0");
  const auto cols = static_cast<std::size_t>(horizon_) + 1;
  const auto m = static_cast<std::size_t>(std::min(backlog, horizon_));
  return value_[static_cast<std::size_t>(slots) * cols + m];
}

ServiceCurve ServiceTable::curve(int backlog) const {
  ServiceCurve c;
  c.flow_id = flow_id_;
  c.c.resize(static_cast<std::size_t>(horizon_) + 1);
  for (int s = 0; s <= horizon_; ++s) c.c[static_cast<std::size_t>(s)] = (*this)(s, backlog);
  return c;
}

ServiceTable service_table(const FlowSpec& flow, int horizon, IntraFlowPolicy policy) {
  if (horizon < 1) throw std::domain_error("service table needs T >= 1");
  const DecodingTable table = DecodingTable::build(flow.channel, horizon);
  std::vector<int> rule(static_cast<std::size_t>(horizon) + 1, 1);
  if (policy == IntraFlowPolicy::kOptimal) rule = solve_mbia(table).k_star;

  // E(t, m) = sum_j q(j) (K + E(j, m - K)) with K = min(rule_t, m).
  const auto cols = static_cast<std::size_t>(horizon) + 1;
  std::vector<double> e(cols * cols, 0.0);
  for (int t = 1; t <= horizon; ++t) {
    for (int m = 1; m <= horizon; ++m) {
      const int k = std::min(rule[static_cast<std::size_t>(t)], m);
      double acc = 0.0;
      for (int j = 0; j <= t - k; ++j) {
        const double q = table(k, t - j) - table(k, t - j - 1);
        acc += q * (k + e[static_cast<std::size_t>(j) * cols + static_cast<std::size_t>(m - k)]);
      }
      e[static_cast<std::size_t>(t) * cols + static_cast<std::size_t>(m)] = acc;
    }
  }
  return ServiceTable(flow.id, horizon, std::move(e));
}

void DeficitState::remember() {
  if (history_capacity == 0) return;
  history.push_back(nu_hat);
  while (history.size() > history_capacity) history.pop_front();
}

std::vector<int> allocate_slots(std::span<const ServiceCurve> curves,
                                std::span<const double> weights, std::span<const double> nu_hat,
                                double rho, int horizon) {
  if (!(rho > 0.0)) throw std::domain_error("step size rho must be positive");
  if (horizon < 0) throw std::domain_error("horizon must be >= 0");
  const std::size_t flows = curves.size();
  if (weights.size() != flows || nu_hat.size() != flows) {
    throw std::invalid_argument("curves, weights and deficits must have one entry per flow");
  }
  if (flows == 0) return {};
  const auto cols = static_cast<std::size_t>(horizon) + 1;

  auto gain = [&](std::size_t f, int s) {
    const auto& c = curves[f].c;
    const auto idx = std::min(static_cast<std::size_t>(s), c.size() - 1);
    return (weights[f] / rho + nu_hat[f]) * c[idx];
  };

  // best[f][r]: max objective of flows f.. with r slots left.
  std::vector<double> best((flows + 1) * cols, 0.0);
  for (std::size_t f = flows; f-- > 0;) {
    for (int r = 0; r <= horizon; ++r) {
      double top = gain(f, 0) + best[(f + 1) * cols + static_cast<std::size_t>(r)];
      for (int s = 1; s <= r; ++s) {
        top = std::max(top, gain(f, s) + best[(f + 1) * cols + static_cast<std::size_t>(r - s)]);
      }
      best[f * cols + static_cast<std::size_t>(r)] = top;
    }
  }

  std::vector<int> schedule(flows, 0);
  int left = horizon;
  for (std::size_t f = 0; f < flows; ++f) {
    const double target = best[f * cols + static_cast<std::size_t>(left)];
    const double slack = kTieTol * std::max(1.0, std::abs(target));
    for (int s = 0; s <= left; ++s) {
      if (gain(f, s) + best[(f + 1) * cols + static_cast<std::size_t>(left - s)] >= target - slack) {
        schedule[f] = s;
        break;
      }
    }
    left -= schedule[f];
  }
  return schedule;
}

int thinned_arrivals(int arrivals, double q, std::mt19937_64& engine) {
  if (!(q >= 0.0 && q <= 1.0)) throw std::domain_error("delivery ratio must lie in [0, 1]");
  if (arrivals < 0) throw std::domain_error("arrival count must be >= 0");
  if (arrivals == 0 || q == 0.0) return 0;
  if (q == 1.0) return arrivals;
  return std::binomial_distribution<int>(arrivals, q)(engine);
}

double update_deficit(double nu_hat, double a_hat, double c_hat) {
  return std::max(0.0, nu_hat + a_hat - c_hat);
}

StaticDualResult static_dual_iteration(std::span<const FlowSpec> flows, int horizon, double rho,
                                       int iterations, IntraFlowPolicy policy,
                                       ServiceModel service) {
  if (!(rho > 0.0)) throw std::domain_error("step size rho must be positive");
  if (iterations < 1) throw std::domain_error("iterations must be >= 1");
  const std::size_t n = flows.size();
  const auto levels = static_cast<std::size_t>(horizon) + 1;
  std::vector<ServiceTable> tables;
  std::vector<std::vector<double>> pmfs;
  std::vector<double> weights;
  for (const auto& f : flows) {
    validate_flow(f, horizon);
    tables.push_back(service_table(f, horizon, policy));
    pmfs.push_back(arrival_pmf(f, horizon));
    weights.push_back(f.w);
  }

  // Arrival scenarios: every clamped vector for kBacklogAware, else one
  // saturated scenario.
  struct Scenario {
    double prob;
    std::vector<ServiceCurve> curves;
  };
  std::vector<Scenario> scenarios;
  if (service == ServiceModel::kSaturated || n == 0) {
    Scenario sc{1.0, {}};
    for (const auto& t : tables) sc.curves.push_back(t.curve(horizon));
    scenarios.push_back(std::move(sc));
  } else {
    double count = 1.0;
    for (std::size_t f = 0; f < n; ++f) count *= static_cast<double>(levels);
    if (count > 1e5) throw ConfigError("flows", "too many flows for the exact static iteration");
    std::vector<int> a(n, 0);
    for (;;) {
      Scenario sc{1.0, {}};
      for (std::size_t f = 0; f < n; ++f) {
        sc.prob *= pmfs[f][static_cast<std::size_t>(a[f])];
        sc.curves.push_back(tables[f].curve(a[f]));
      }
      if (sc.prob > 0.0) scenarios.push_back(std::move(sc));
      std::size_t f = 0;
      while (f < n && ++a[f] > horizon) a[f++] = 0;
      if (f == n) break;
    }
  }

  StaticDualResult out;
  out.nu_hat.assign(n, 0.0);
  out.mu.assign(n, 0.0);
  out.mean_mu.assign(n, 0.0);
  out.nu_trajectory.reserve(static_cast<std::size_t>(iterations) * n);
  for (int k = 0; k < iterations; ++k) {
    std::fill(out.mu.begin(), out.mu.end(), 0.0);
    for (const auto& sc : scenarios) {
      out.schedule = allocate_slots(sc.curves, weights, out.nu_hat, rho, horizon);
      for (std::size_t f = 0; f < n; ++f) {
        out.mu[f] += sc.prob * sc.curves[f].c[static_cast<std::size_t>(out.schedule[f])];
      }
    }
    for (std::size_t f = 0; f < n; ++f) {
      out.mean_mu[f] += out.mu[f];
      out.nu_hat[f] = update_deficit(out.nu_hat[f], flows[f].lambda * flows[f].q, out.mu[f]);
      out.nu_trajectory.push_back(out.nu_hat[f]);
    }
  }
  for (std::size_t f = 0; f < n; ++f) {
    out.mean_mu[f] /= iterations;
    out.weighted_optimum += flows[f].w * out.mean_mu[f];
  }
  return out;
}

double tail_slope(std::span<const double> series) {
  const std::size_t start = series.size() / 2;
  const std::size_t m = series.size() - start;
  if (m < 2) return 0.0;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += static_cast<double>(i);
    my += series[start + i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dx = static_cast<double>(i) - mx;
    sxy += dx * (series[start + i] - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

MultiflowTrace run_online(std::span<const FlowSpec> flows, int horizon, int frames, double rho,
                          const RngSpec& rng, const OnlineOptions& options) {
  if (frames < 0) throw std::domain_error("frame count must be >= 0");
  if (!(rho > 0.0)) throw std::domain_error("step size rho must be positive");
  const std::size_t n = flows.size();
  const PolicyKind policy = intra_policy(options.policy);

  std::vector<ServiceTable> tables;
  std::vector<ServiceCurve> curves;
  std::vector<double> weights;
  std::vector<DecisionContext> contexts;
  for (const auto& f : flows) {
    validate_flow(f, horizon);
    tables.push_back(service_table(f, horizon, options.policy));
    curves.push_back(tables.back().curve(horizon));
    weights.push_back(f.w);
    contexts.push_back(make_context(policy, f.channel, horizon));
  }

  MultiflowTrace trace;
  trace.frames = frames;
  trace.flows.assign(n, FlowSummary{});
  trace.deficits.reserve(static_cast<std::size_t>(frames) * n);
  if (options.record_rows) trace.rows.reserve(static_cast<std::size_t>(frames) * n);

  DeficitState deficits(n);
  std::vector<int> arrivals(n);
  std::vector<std::mt19937_64> engines;
  engines.reserve(n);
  for (int k = 0; k < frames; ++k) {
    const RngSpec frame_rng = rng.child(static_cast<std::uint64_t>(k));
    engines.clear();
    for (std::size_t f = 0; f < n; ++f) {
      engines.push_back(make_engine(frame_rng.child(2 * f + 1)));
      arrivals[f] = sample_arrivals(flows[f], horizon, engines[f]);
      if (options.service == ServiceModel::kBacklogAware) curves[f] = tables[f].curve(arrivals[f]);
    }
    const std::vector<int> schedule = allocate_slots(curves, weights, deficits.nu_hat, rho, horizon);
    for (std::size_t f = 0; f < n; ++f) {
      const FrameTrace ft = simulate_frame(policy, contexts[f], schedule[f], arrivals[f],
                                           flows[f].channel, frame_rng.child(2 * f), nullptr,
                                           TraceDetail::kSummary);
      const int thinned = thinned_arrivals(arrivals[f], flows[f].q, engines[f]);
      deficits.nu_hat[f] = update_deficit(deficits.nu_hat[f], thinned, ft.delivered);

      FlowSummary& sum = trace.flows[f];
      sum.arrivals += arrivals[f];
      sum.thinned += thinned;
      sum.delivered += ft.delivered;
      trace.deficits.push_back(deficits.nu_hat[f]);
      if (options.record_rows) {
        trace.rows.push_back({k, flows[f].id, schedule[f], arrivals[f], ft.delivered,
                              deficits.nu_hat[f]});
      }
    }
  }

  std::vector<double> series(static_cast<std::size_t>(frames));
  const std::size_t tail = std::max<std::size_t>(1, static_cast<std::size_t>(frames) / 10);
  for (std::size_t f = 0; f < n; ++f) {
    FlowSummary& sum = trace.flows[f];
    if (frames > 0) {
      sum.mean_delivered = static_cast<double>(sum.delivered) / frames;
      for (std::size_t k = 0; k < series.size(); ++k) series[k] = trace.deficits[k * n + f];
      sum.deficit_slope = tail_slope(series);
      double acc = 0.0;
      const std::size_t from = series.size() - std::min(tail, series.size());
      for (std::size_t k = from; k < series.size(); ++k) acc += series[k];
      sum.tail_mean_deficit = acc / static_cast<double>(series.size() - from);
    }
    sum.delivery_ratio =
        sum.arrivals > 0 ? static_cast<double>(sum.delivered) / static_cast<double>(sum.arrivals)
                         : 1.0;
    trace.weighted_throughput += flows[f].w * sum.mean_delivered;
  }
  return trace;
}

bool is_stable(const MultiflowTrace& trace, double threshold) {
  return std::all_of(trace.flows.begin(), trace.flows.end(),
                     [threshold](const FlowSummary& f) { return f.deficit_slope <= threshold; });
}

std::vector<RegionPoint> rate_region_sweep(std::span<const FlowSpec> base,
                                           std::span<const double> q_grid, int horizon,
                                           double rho, int frames, const RngSpec& rng,
                                           double slope_threshold, ServiceModel service) {
  if (base.size() != 2) throw ConfigError("flows", "rate region sweep needs exactly two flows");
  const std::size_t g = q_grid.size();
  std::vector<RegionPoint> points(g * g);
  const std::vector<FlowSpec> flows_base(base.begin(), base.end());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t idx = 0; idx < g * g; ++idx) {
    std::vector<FlowSpec> flows = flows_base;
    flows[0].q = q_grid[idx / g];
    flows[1].q = q_grid[idx % g];
    RegionPoint p;
    p.q_x = flows[0].q;
    p.q_y = flows[1].q;
    OnlineOptions opts;
    opts.service = service;
    opts.policy = IntraFlowPolicy::kOptimal;
    p.stable_nc = is_stable(run_online(flows, horizon, frames, rho, rng, opts), slope_threshold);
    opts.policy = IntraFlowPolicy::kRetransmission;
    p.stable_retx = is_stable(run_online(flows, horizon, frames, rho, rng, opts), slope_threshold);
    points[idx] = p;
  }
  return points;
}

std::vector<ArrivalSweepPoint> arrival_rate_sweep(std::span<const FlowSpec> base,
                                                  std::span<const double> lambdas, int horizon,
                                                  double rho, int frames, const RngSpec& rng,
                                                  double slope_threshold,
                                                  const OnlineOptions& options) {
  std::vector<ArrivalSweepPoint> points(lambdas.size());
  const std::vector<FlowSpec> flows_base(base.begin(), base.end());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    std::vector<FlowSpec> flows = flows_base;
    for (auto& f : flows) f.lambda = lambdas[i];
    OnlineOptions opts = options;
    opts.record_rows = false;
    const MultiflowTrace trace = run_online(flows, horizon, frames, rho, rng, opts);
    ArrivalSweepPoint p;
    p.lambda = lambdas[i];
    for (const auto& f : trace.flows) {
      p.mean_deficit += f.tail_mean_deficit;
      p.max_slope = std::max(p.max_slope, f.deficit_slope);
    }
    if (!trace.flows.empty()) p.mean_deficit /= static_cast<double>(trace.flows.size());
    p.stable = p.max_slope <= slope_threshold;
    points[i] = p;
  }
  return points;
}

void write_multiflow_csv(std::ostream& out, const MultiflowTrace& trace) {
  out << "frame,flow,s_star,arrivals,delivered,nu_hat\n";
  for (const auto& r : trace.rows) {
    CsvRow(out) << r.frame << r.flow << r.s_star << r.arrivals << r.delivered << r.nu_hat;
  }
}

void write_region_csv(std::ostream& out, std::span<const RegionPoint> points) {
  out << "grid_x,grid_y,stable_nc,stable_retx\n";
  for (const auto& p : points) {
    CsvRow(out) << p.q_x << p.q_y << static_cast<int>(p.stable_nc) << static_cast<int>(p.stable_retx);
  }
}

}  // namespace ncsched

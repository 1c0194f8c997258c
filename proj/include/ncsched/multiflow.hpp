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
#include <deque>
#include <iosfwd>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "ncsched/coding_math.hpp"
#include "ncsched/rng.hpp"

namespace ncsched {

enum class ArrivalKind { kBinomial, kPoisson };

/// Per-frame arrival distribution with mean `lambda`. Binomial arrivals use
/// `trials` Bernoulli packets per frame (0 picks max(T, ceil(lambda))).
struct ArrivalModel {
  ArrivalKind kind = ArrivalKind::kBinomial;
  int trials = 0;
  bool operator==(const ArrivalModel&) const = default;
};

struct FlowSpec {
  int id = 0;
  double lambda = 3.0;  // mean arrivals per frame
  double q = 0.8;       // required delivery ratio
  double w = 1.0;       // throughput weight
  ChannelModel channel = ChannelModel::homogeneous(0.3, 5);
  ArrivalModel arrivals;
  bool operator==(const FlowSpec&) const = default;
};

/// Throws ConfigError on out-of-range flow parameters.
void validate_flow(const FlowSpec& flow, int horizon);

int sample_arrivals(const FlowSpec& flow, int horizon, std::mt19937_64& engine);

/// pmf[m] = Pr(a = m) for m < T; pmf[T] = Pr(a >= T).
std::vector<double> arrival_pmf(const FlowSpec& flow, int horizon);

/// Curves the allocator maximizes over. kSaturated uses c_f(s) = V_s every
/// frame; kBacklogAware uses c_f(s; a_f) for the frame's arrivals.
enum class ServiceModel { kSaturated, kBacklogAware };

/// Coding policy used inside each flow's slot allocation.
enum class IntraFlowPolicy { kOptimal, kRetransmission };

/// c(s): expected packets a saturated flow delivers in s slots, s = 0..T.
struct ServiceCurve {
  int flow_id = 0;
  std::vector<double> c;
};

/// c(s) = V_s of the flow's optimal table, or of plain retransmission.
ServiceCurve service_curve(const FlowSpec& flow, int horizon,
                           IntraFlowPolicy policy = IntraFlowPolicy::kOptimal);

/// Expected packets delivered in s slots with m packets queued, when the
/// intra-flow policy's block is clipped to the backlog (as the simulator does).
/// Equals the saturated curve for m >= s.
class ServiceTable {
 public:
  ServiceTable() = default;
  ServiceTable(int flow_id, int horizon, std::vector<double> value)
      : flow_id_(flow_id), horizon_(horizon), value_(std::move(value)) {}

  int flow_id() const { return flow_id_; }
  int horizon() const { return horizon_; }
  double operator()(int slots, int backlog) const;
  /// c(.; backlog) for s = 0..T.
  ServiceCurve curve(int backlog) const;

 private:
  int flow_id_ = 0;
  int horizon_ = 0;
  std::vector<double> value_;  // (T + 1) x (T + 1), slot-major
};

ServiceTable service_table(const FlowSpec& flow, int horizon,
                           IntraFlowPolicy policy = IntraFlowPolicy::kOptimal);

/// Virtual queues tracking delivery-ratio debt, one per flow.
struct DeficitState {
  std::vector<double> nu_hat;
  /// Most recent deficit vectors, newest last; empty when capacity is 0.
  std::deque<std::vector<double>> history;
  std::size_t history_capacity = 0;

  explicit DeficitState(std::size_t flows = 0, std::size_t capacity = 0)
      : nu_hat(flows, 0.0), history_capacity(capacity) {}

  void remember();
};

/// Schedule s maximizing sum_f (w_f / rho + nu_f) c_f(s_f) subject to
/// sum_f s_f <= T, by dynamic programming over flows. Among maximizers the
/// lexicographically smallest (s_0, s_1, ...) is returned; objective values
/// within 1e-12 relative count as equal.
std::vector<int> allocate_slots(std::span<const ServiceCurve> curves,
                                std::span<const double> weights, std::span<const double> nu_hat,
                                double rho, int horizon);

/// Binomial(arrivals, q) draw: arrivals that count toward the ratio target.
int thinned_arrivals(int arrivals, double q, std::mt19937_64& engine);

/// max(0, nu + a_hat - c_hat).
double update_deficit(double nu_hat, double a_hat, double c_hat);

struct StaticDualResult {
  std::vector<int> schedule;           // last iterate (saturated model only)
  std::vector<double> mu;              // c_f(s_f) of the last iterate
  std::vector<double> nu_hat;          // last multipliers (scaled by 1/rho)
  std::vector<double> mean_mu;         // time average of mu over all iterations
  double weighted_optimum = 0.0;       // sum_f w_f mean_mu_f
  /// nu_hat per iteration, iteration-major (iterations x flows).
  std::vector<double> nu_trajectory;
};

/// Deterministic dual iteration driven by the mean targets lambda_f q_f.
/// With kBacklogAware, mu_f is the expectation of c_f(s_f(a); a_f) over all
/// arrival vectors a (each clamped at T), with s(a) the allocation for a.
StaticDualResult static_dual_iteration(std::span<const FlowSpec> flows, int horizon, double rho,
                                       int iterations,
                                       IntraFlowPolicy policy = IntraFlowPolicy::kOptimal,
                                       ServiceModel service = ServiceModel::kBacklogAware);

struct MultiflowRow {
  int frame = 0;
  int flow = 0;
  int s_star = 0;
  int arrivals = 0;
  int delivered = 0;
  double nu_hat = 0.0;  // after this frame's update
};

struct FlowSummary {
  std::int64_t arrivals = 0;
  std::int64_t thinned = 0;
  std::int64_t delivered = 0;
  double mean_delivered = 0.0;    // per frame
  double delivery_ratio = 0.0;    // delivered / arrivals
  double deficit_slope = 0.0;     // least-squares slope over the last half
  double tail_mean_deficit = 0.0; // mean nu_hat over the last 10% of frames
};

struct MultiflowTrace {
  int frames = 0;
  std::vector<MultiflowRow> rows;     // empty unless requested
  std::vector<FlowSummary> flows;
  /// nu_hat after each frame, frame-major (frames x flows).
  std::vector<double> deficits;
  double weighted_throughput = 0.0;   // sum_f w_f delivered_f / frames
};

struct OnlineOptions {
  IntraFlowPolicy policy = IntraFlowPolicy::kOptimal;
  ServiceModel service = ServiceModel::kBacklogAware;
  bool record_rows = false;
};

/// Online scheduler: per frame draw arrivals, allocate slots from the current
/// deficits, deliver each flow's packets in its slots (undelivered packets
/// are dropped at frame end), thin arrivals and update the deficits. Arrivals
/// and channel draws of flow f in frame k come from streams keyed by (k, f), so
/// runs that differ only in rho or intra-flow policy see the same randomness.
MultiflowTrace run_online(std::span<const FlowSpec> flows, int horizon, int frames, double rho,
                          const RngSpec& rng, const OnlineOptions& options = {});

/// Least-squares slope of the second half of `series`.
double tail_slope(std::span<const double> series);

/// Stable when no flow's deficit slope exceeds `threshold` per frame.
bool is_stable(const MultiflowTrace& trace, double threshold);

struct RegionPoint {
  double q_x = 0.0;
  double q_y = 0.0;
  bool stable_nc = false;
  bool stable_retx = false;
};

/// Classifies each (q_0, q_1) grid point for a two-flow template, once with
/// network coding inside flows and once with plain retransmission. Grid
/// points run in parallel.
std::vector<RegionPoint> rate_region_sweep(std::span<const FlowSpec> base,
                                           std::span<const double> q_grid, int horizon,
                                           double rho, int frames, const RngSpec& rng,
                                           double slope_threshold = 1e-3,
                                           ServiceModel service = ServiceModel::kBacklogAware);

struct ArrivalSweepPoint {
  double lambda = 0.0;
  double mean_deficit = 0.0;   // tail mean of sum_f nu_hat / F
  double max_slope = 0.0;
  bool stable = false;
};

/// Runs the online scheduler with every flow's lambda set to each grid value.
std::vector<ArrivalSweepPoint> arrival_rate_sweep(std::span<const FlowSpec> base,
                                                  std::span<const double> lambdas, int horizon,
                                                  double rho, int frames, const RngSpec& rng,
                                                  double slope_threshold = 1e-3,
                                                  const OnlineOptions& options = {});

/// `frame,flow,s_star,arrivals,delivered,nu_hat`.
void write_multiflow_csv(std::ostream& out, const MultiflowTrace& trace);
/// `grid_x,grid_y,stable_nc,stable_retx`.
void write_region_csv(std::ostream& out, std::span<const RegionPoint> points);

}  // namespace ncsched

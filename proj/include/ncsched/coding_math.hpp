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

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ncsched {

/// Raised when a completion-time moment is requested for a channel on which
/// some receiver can never finish (erasure probability 1), or when the
/// truncated series fails to converge within the iteration cap.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Default truncation tolerance for the infinite completion-time series.
inline constexpr double kDefaultSeriesTol = 1e-9;

/// Per-receiver i.i.d. Bernoulli erasure channel.
///
/// Receivers with equal erasure probabilities are grouped so that products
/// over receivers cost one `pow` per distinct probability; a homogeneous
/// channel therefore evaluates as P^N exactly like the general form.
class ChannelModel {
 public:
  /// Throws std::domain_error if the list is empty or any entry lies outside
  /// [0, 1].
  explicit ChannelModel(std::vector<double> erasures);

  static ChannelModel homogeneous(double erasure, int receivers);

  std::span<const double> erasures() const { return erasures_; }
  int receivers() const { return static_cast<int>(erasures_.size()); }
  bool is_homogeneous() const { return groups_.size() == 1; }
  double worst_erasure() const;
  double mean_erasure() const;

  /// Distinct erasure probabilities with their multiplicities.
  std::span<const std::pair<double, int>> groups() const { return groups_; }

  bool operator==(const ChannelModel& other) const { return erasures_ == other.erasures_; }

 private:
  std::vector<double> erasures_;
  std::vector<std::pair<double, int>> groups_;
};

/// Probability that one receiver with erasure probability `erasure` collects
/// `block` successes within `slots` slots (negative-binomial CDF).
double decode_prob_single(int block, int slots, double erasure);

/// Probability that every receiver of `channel` decodes a block of size
/// `block` within `slots` slots.
double decode_prob(int block, int slots, const ChannelModel& channel);

/// Closed-form gap P̂(K,T) - P̂(K-1,T) = -C(T,K-1) e^(T-K+1) (1-e)^(K-1) for a
/// single receiver. Used as a cross-check of the running-term sum.
double decode_prob_single_step(int block, int slots, double erasure);

/// Immutable table of P(K, t) for 0 <= K <= t <= horizon.
///
/// Rows are filled independently (one running-term pass per block size), in
/// parallel with OpenMP. `build_serial` evaluates every entry through
/// decode_prob and is kept as the reference implementation.
class DecodingTable {
 public:
  static DecodingTable build(const ChannelModel& channel, int horizon);
  static DecodingTable build_serial(const ChannelModel& channel, int horizon);

  int horizon() const { return horizon_; }
  const ChannelModel& channel() const { return channel_; }

  /// P(K, t); 1 for K == 0, 0 for K > t or t < 0.
  double operator()(int block, int slots) const {
    if (block == 0) return 1.0;
    if (slots < block || slots < 0) return 0.0;
    return values_[static_cast<std::size_t>(block) * stride_ + static_cast<std::size_t>(slots)];
  }

  double reward(int block, int slots) const { return block * (*this)(block, slots); }

 private:
  DecodingTable(ChannelModel channel, int horizon);

  ChannelModel channel_;
  int horizon_;
  std::size_t stride_;
  std::vector<double> values_;
};

/// Distribution of the number of slots left when a block completes.
struct CompletionPmf {
  int block = 0;
  int horizon = 0;
  /// mass[j]: probability the block finishes with exactly j slots remaining.
  std::vector<double> mass;
  /// Probability the block is not decoded by the deadline.
  double fail = 1.0;
};

/// q[j] = P(K, t-j) - P(K, t-j-1) for j = 0..t-K. Requires 1 <= K <= t.
CompletionPmf completion_pmf(int block, int slots, const ChannelModel& channel);

/// R_t(K) = K * P(K, t). Requires 0 <= K <= t.
double immediate_reward(int block, int slots, const ChannelModel& channel);

/// Expected number of slots to deliver a block of size `block` to every
/// receiver with unlimited time.
///
/// The tail series sum_{t>=K} (1 - P(K,t)) is summed until a term drops
/// below `tol` while the term ratio is below one; the remainder is then
/// bounded by the geometric series with the last observed ratio (the ratio of
/// negative-binomial tails decreases toward the worst erasure probability, so
/// this over-estimates the remainder by at most a small factor).
double expected_completion_time(int block, const ChannelModel& channel,
                                double tol = kDefaultSeriesTol);

/// Second moment E[tau^2] of the block completion time, truncated with the
/// same rule as expected_completion_time. Independent of the deadline.
double completion_second_moment(int block, const ChannelModel& channel,
                                double tol = kDefaultSeriesTol);

/// Largest K <= ceiling with completion_second_moment(K) < variance_bound, or
/// 0 when K = 1 already violates the bound.
int max_block_for_variance(double variance_bound, const ChannelModel& channel, int ceiling,
                           double tol = kDefaultSeriesTol);

}  // namespace ncsched

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

#include "ncsched/coding_math.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace ncsched {

namespace {

constexpr long kMaxSeriesTerms = 50'000'000;
// Below this log-magnitude the starting term (1-e)^K underflows a double.
constexpr double kLogUnderflow = -700.0;

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error(std::string(what) + " must lie in [0, 1], got " + std::to_string(p));
  }
}

// Negative-binomial CDF for one receiver, advanced one slot at a time.
//
// term(tau) = C(tau-1, K-1) e^(tau-K) (1-e)^K, term(tau+1) = term(tau) * e * tau / (tau-K+1).
// When (1-e)^K underflows the recurrence is carried in log space instead.
class NegBinomialCdf {
 public:
  NegBinomialCdf(int block, double erasure) : block_(block), erasure_(erasure), slots_(block) {
    const double log_start = block * std::log1p(-erasure);
    if (erasure == 1.0) {
      term_ = 0.0;
    } else if (log_start < kLogUnderflow) {
      log_mode_ = true;
      log_term_ = log_start;
      log_erasure_ = std::log(erasure);
      term_ = std::exp(log_term_);
    } else {
      term_ = std::exp(log_start);
    }
    sum_ = term_;
  }

  int slots() const { return slots_; }
  double value() const { return std::min(sum_, 1.0); }

  void advance() {
    const double tau = slots_;
    const double grow = tau / (tau - block_ + 1.0);
    if (log_mode_) {
      log_term_ += log_erasure_ + std::log(grow);
      term_ = std::exp(log_term_);
    } else {
      term_ *= erasure_ * grow;
    }
    sum_ += term_;
    ++slots_;
  }

 private:
  int block_;
  double erasure_;
  int slots_;
  double term_ = 0.0;
  double sum_ = 0.0;
  bool log_mode_ = false;
  double log_term_ = 0.0;
  double log_erasure_ = 0.0;
};

// P(K, t) over all receivers for t = K, K+1, ...
class BroadcastCdf {
 public:
  BroadcastCdf(int block, const ChannelModel& channel) {
    for (const auto& [eps, count] : channel.groups()) {
      cdfs_.emplace_back(block, eps);
      counts_.push_back(count);
    }
  }

  double value() const {
    double p = 1.0;
    for (std::size_t g = 0; g < cdfs_.size(); ++g) p *= std::pow(cdfs_[g].value(), counts_[g]);
    return p;
  }

  void advance() {
    for (auto& c : cdfs_) c.advance();
  }

 private:
  std::vector<NegBinomialCdf> cdfs_;
  std::vector<int> counts_;
};

void check_moment_args(int block, const ChannelModel& channel, double tol) {
  if (block < 1) throw std::domain_error("block size must be >= 1");
  if (!(tol > 0.0)) throw std::domain_error("series tolerance must be positive");
  if (channel.worst_erasure() == 1.0) {
    throw DivergenceError("completion time diverges: a receiver has erasure probability 1");
  }
}

// Sums weight(t) * (1 - P(K, t)) over t >= K with the truncation rule shared
// by both moments.
template <typename Weight>
double tail_series(int block, const ChannelModel& channel, double tol, Weight weight) {
  BroadcastCdf cdf(block, channel);
  double total = 0.0;
  double prev = 0.0;
  for (long n = 0; n < kMaxSeriesTerms; ++n) {
    const int t = block + static_cast<int>(n);
    const double term = weight(t) * (1.0 - cdf.value());
    if (term <= 0.0) return total;
    total += term;
    if (n > 0 && term < tol) {
      const double ratio = term / prev;
      if (ratio < 1.0) return total + term * ratio / (1.0 - ratio);
    }
    prev = term;
    cdf.advance();
  }
  throw DivergenceError("completion-time series did not converge within the term cap");
}

}  // namespace

ChannelModel::ChannelModel(std::vector<double> erasures) : erasures_(std::move(erasures)) {
  if (erasures_.empty()) throw std::domain_error("channel needs at least one receiver");
  std::map<double, int> counts;
  for (double e : erasures_) {
    check_probability(e, "erasure probability");
    ++counts[e];
  }
  groups_.assign(counts.begin(), counts.end());
}

ChannelModel ChannelModel::homogeneous(double erasure, int receivers) {
  if (receivers < 1) throw std::domain_error("receiver count must be >= 1");
  return ChannelModel(std::vector<double>(static_cast<std::size_t>(receivers), erasure));
}

double ChannelModel::worst_erasure() const {
  return *std::max_element(erasures_.begin(), erasures_.end());
}

double ChannelModel::mean_erasure() const {
  return std::accumulate(erasures_.begin(), erasures_.end(), 0.0) /
         static_cast<double>(erasures_.size());
}

double decode_prob_single(int block, int slots, double erasure) {
  check_probability(erasure, "erasure probability");
  if (block < 0 || slots < 0) throw std::domain_error("block size and slots must be >= 0");
  if (block == 0) return 1.0;
  if (block > slots) return 0.0;
  NegBinomialCdf cdf(block, erasure);
  while (cdf.slots() < slots) cdf.advance();
  return cdf.value();
}

double decode_prob(int block, int slots, const ChannelModel& channel) {
  if (block < 0 || slots < 0) throw std::domain_error("block size and slots must be >= 0");
  if (block == 0) return 1.0;
  if (block > slots) return 0.0;
  double p = 1.0;
  for (const auto& [eps, count] : channel.groups()) {
    p *= std::pow(decode_prob_single(block, slots, eps), count);
  }
  return p;
}

double decode_prob_single_step(int block, int slots, double erasure) {
  check_probability(erasure, "erasure probability");
  if (block < 1 || slots < 0) throw std::domain_error("step needs block >= 1 and slots >= 0");
  const int k = block - 1;
  if (k > slots) return 0.0;
  const int failures = slots - k;
  if (erasure == 0.0) return failures == 0 ? -1.0 : 0.0;
  if (erasure == 1.0) return k == 0 ? -1.0 : 0.0;
  const double log_choose =
      std::lgamma(slots + 1.0) - std::lgamma(k + 1.0) - std::lgamma(failures + 1.0);
  return -std::exp(log_choose + failures * std::log(erasure) + k * std::log1p(-erasure));
}

DecodingTable::DecodingTable(ChannelModel channel, int horizon)
    : channel_(std::move(channel)),
      horizon_(horizon),
      stride_(static_cast<std::size_t>(horizon) + 1),
      values_(stride_ * stride_, 0.0) {
  if (horizon < 0) throw std::domain_error("horizon must be >= 0");
}

DecodingTable DecodingTable::build(const ChannelModel& channel, int horizon) {
  DecodingTable table(channel, horizon);
  const auto groups = channel.groups();
  const std::size_t stride = table.stride_;
  double* out = table.values_.data();
#pragma omp parallel for schedule(dynamic, 4)
  for (int k = 1; k <= horizon; ++k) {
    double* row = out + static_cast<std::size_t>(k) * stride;
    for (std::size_t t = static_cast<std::size_t>(k); t < stride; ++t) row[t] = 1.0;
    for (const auto& [eps, count] : groups) {
      NegBinomialCdf cdf(k, eps);
      for (int t = k; t <= horizon; ++t) {
        if (t > k) cdf.advance();
        row[t] *= std::pow(cdf.value(), count);
      }
    }
  }
  return table;
}

DecodingTable DecodingTable::build_serial(const ChannelModel& channel, int horizon) {
  DecodingTable table(channel, horizon);
  for (int k = 1; k <= horizon; ++k) {
    for (int t = k; t <= horizon; ++t) {
      table.values_[static_cast<std::size_t>(k) * table.stride_ + static_cast<std::size_t>(t)] =
          decode_prob(k, t, channel);
    }
  }
  return table;
}

CompletionPmf completion_pmf(int block, int slots, const ChannelModel& channel) {
  if (block < 1 || block > slots) {
    throw std::domain_error("completion_pmf needs 1 <= K <= t");
  }
  CompletionPmf pmf;
  pmf.block = block;
  pmf.horizon = slots;
  pmf.mass.resize(static_cast<std::size_t>(slots - block) + 1);
  for (int j = 0; j <= slots - block; ++j) {
    pmf.mass[static_cast<std::size_t>(j)] =
        decode_prob(block, slots - j, channel) - decode_prob(block, slots - j - 1, channel);
  }
  pmf.fail = 1.0 - decode_prob(block, slots, channel);
  return pmf;
}

double immediate_reward(int block, int slots, const ChannelModel& channel) {
  if (block < 0 || block > slots) throw std::domain_error("immediate_reward needs 0 <= K <= t");
  if (block == 0) return 0.0;
  return block * decode_prob(block, slots, channel);
}

double expected_completion_time(int block, const ChannelModel& channel, double tol) {
  check_moment_args(block, channel, tol);
  return block + tail_series(block, channel, tol, [](int) { return 1.0; });
}

double completion_second_moment(int block, const ChannelModel& channel, double tol) {
  check_moment_args(block, channel, tol);
  // E[tau^2] = sum_{i>=0} (2i+1) P(tau > i); the first K terms are certain.
  const double head = static_cast<double>(block) * block;
  return head + tail_series(block, channel, tol, [](int t) { return 2.0 * t + 1.0; });
}

int max_block_for_variance(double variance_bound, const ChannelModel& channel, int ceiling,
                           double tol) {
  if (!(variance_bound > 0.0)) throw std::domain_error("variance bound must be positive");
  int best = 0;
  for (int k = 1; k <= ceiling; ++k) {
    if (completion_second_moment(k, channel, tol) < variance_bound) {
      best = k;
    } else {
      break;
    }
  }
  return best;
}

}  // namespace ncsched

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

// Test-side reference implementations. None of these call into the library's
// numerical code: decoding probabilities come from the binomial tail instead
// of the negative-binomial running sum, the DP is an exhaustive Bellman sweep
// in long double, and allocations are found by full enumeration.

#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace oracle {

// P(Binomial(T, 1 - e) >= K): K successes within T slots.
inline long double decode_single(int k, int t, long double e) {
  if (k <= 0) return 1.0L;
  if (k > t) return 0.0L;
  long double sum = 0.0L;
  for (int j = k; j <= t; ++j) {
    const long double logc = std::lgamma(static_cast<long double>(t) + 1) -
                             std::lgamma(static_cast<long double>(j) + 1) -
                             std::lgamma(static_cast<long double>(t - j) + 1);
    long double term = 0.0L;
    if (e == 0.0L) {
      term = j == t ? 1.0L : 0.0L;
    } else if (e == 1.0L) {
      term = 0.0L;
    } else {
      term = std::exp(logc + j * std::log1p(-e) + (t - j) * std::log(e));
    }
    sum += term;
  }
  return std::min(sum, 1.0L);
}

inline long double decode(int k, int t, std::span<const double> erasures) {
  long double p = 1.0L;
  for (double e : erasures) p *= decode_single(k, t, e);
  return p;
}

struct Table {
  std::vector<int> k_star;
  std::vector<long double> value;
  std::vector<int> k_greedy;
};

// Exhaustive backward induction over every K in 1..t. Smallest K wins among
// values within 1e-12 relative.
inline Table solve(int horizon, std::span<const double> erasures) {
  Table out;
  out.k_star.assign(static_cast<std::size_t>(horizon) + 1, 0);
  out.k_greedy.assign(static_cast<std::size_t>(horizon) + 1, 0);
  out.value.assign(static_cast<std::size_t>(horizon) + 1, 0.0L);
  for (int t = 1; t <= horizon; ++t) {
    long double best = -1.0L;
    long double best_r = -1.0L;
    for (int k = 1; k <= t; ++k) {
      long double v = 0.0L;
      for (int j = 0; j <= t - k; ++j) {
        const long double q = decode(k, t - j, erasures) - decode(k, t - j - 1, erasures);
        v += q * (k + out.value[static_cast<std::size_t>(j)]);
      }
      if (v > best * (1.0L + 1e-12L) + 1e-300L) {
        best = v;
        out.k_star[static_cast<std::size_t>(t)] = k;
      }
      const long double r = k * decode(k, t, erasures);
      if (r > best_r * (1.0L + 1e-12L) + 1e-300L) {
        best_r = r;
        out.k_greedy[static_cast<std::size_t>(t)] = k;
      }
    }
    out.value[static_cast<std::size_t>(t)] = best;
  }
  return out;
}

// Lexicographically smallest maximizer of sum_f g_f(s_f) over s_f >= 0,
// sum s_f <= T, by full enumeration. Values within 1e-12 relative tie.
inline std::vector<int> enumerate_allocation(int flows, int horizon,
                                             const std::function<double(int, int)>& gain) {
  std::vector<int> s(static_cast<std::size_t>(flows), 0);
  std::vector<int> best_s;
  double best = -1e300;
  std::function<void(int, int)> rec = [&](int f, int left) {
    if (f == flows) {
      double v = 0.0;
      for (int i = 0; i < flows; ++i) v += gain(i, s[static_cast<std::size_t>(i)]);
      if (best_s.empty() || v > best + 1e-12 * std::max(1.0, std::abs(best))) {
        best = v;
        best_s = s;
      }
      return;
    }
    for (int x = 0; x <= left; ++x) {
      s[static_cast<std::size_t>(f)] = x;
      rec(f + 1, left - x);
    }
    s[static_cast<std::size_t>(f)] = 0;
  };
  rec(0, horizon);
  return best_s;
}

// Erasure above which R_t(1) >= R_t(2) with N identical receivers, located by
// a 1e-3 grid scan from the top followed by bisection.
inline double threshold(int t, int receivers) {
  auto g = [&](long double e) {
    const long double p1 = std::pow(decode_single(1, t, e), receivers);
    const long double p2 = std::pow(decode_single(2, t, e), receivers);
    return p1 - 2.0L * p2;
  };
  long double hi = 1.0L - 1e-9L;
  long double lo = hi;
  while (lo > 0.0L && g(lo) >= 0.0L) lo -= 1e-3L;
  if (lo <= 0.0L) return 0.0;
  hi = lo + 1e-3L;
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    (g(mid) >= 0.0L ? hi : lo) = mid;
  }
  return static_cast<double>(0.5L * (lo + hi));
}

}  // namespace oracle

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
#include <random>

namespace ncsched {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

/// (seed, stream) identifies one independent random stream. Draws are a pure
/// function of (seed, stream, counter), so results do not depend on how
/// replications are scheduled across threads.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  /// Child stream, e.g. one replication or one (frame, flow) pair.
  RngSpec child(std::uint64_t index) const { return {seed, combine(stream, index)}; }

  std::uint64_t key() const { return combine(seed, stream); }

  bool operator==(const RngSpec&) const = default;
};

/// Counter-based uniform generator over a fixed key.
class CounterRng {
 public:
  explicit CounterRng(const RngSpec& spec) : key_(spec.key()) {}

  std::uint64_t bits(std::uint64_t hi, std::uint64_t lo) const {
    return mix64(key_ ^ mix64(hi * 0xd1342543de82ef95ULL + lo));
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t hi, std::uint64_t lo) const {
    return static_cast<double>(bits(hi, lo) >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
};

/// Sequential engine for the few draws that need library distributions
/// (binomial arrivals, thinning). Seeded from a counter-derived key.
inline std::mt19937_64 make_engine(const RngSpec& spec) { return std::mt19937_64(spec.key()); }

}  // namespace ncsched

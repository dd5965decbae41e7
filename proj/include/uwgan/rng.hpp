// Copyright 2026 The uwgan Authors
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

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "uwgan/common.hpp"

namespace uwgan {

// Counter-based generator: splitmix64 finalizer over a (seed, stream,
// counter) key, with Box-Muller for normal draws. Stateless, so parallel
// per-voxel streams and checkpoint resume stay deterministic. The algorithm
// name recorded in run metadata is "splitmix64-boxmuller".
inline constexpr const char* kRngName = "splitmix64-boxmuller";

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream)
      : key_(splitmix64(seed ^ splitmix64(stream))) {}

  // Uniform in [0, 1).
  double uniform() { return to_unit(next()); }

  // Uniform in (0, 1], useful for log().
  double uniform_open0() { return 1.0 - uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open0();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      std::swap(first[i - 1], first[below(i)]);
    }
  }

  // One normal draw keyed by an absolute index; independent of call order.
  static double normal_at(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index) {
    const std::uint64_t key = splitmix64(seed ^ splitmix64(stream));
    const double u1 = 1.0 - to_unit(splitmix64(key + 2 * index));
    const double u2 = to_unit(splitmix64(key + 2 * index + 1));
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Second member of the normal pair at the same index.
  static double normal_at2(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t index) {
    const std::uint64_t key = splitmix64(seed ^ splitmix64(stream));
    const double u1 = 1.0 - to_unit(splitmix64(key + 2 * index));
    const double u2 = to_unit(splitmix64(key + 2 * index + 1));
    return std::sqrt(-2.0 * std::log(u1)) *
           std::sin(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t next() { return splitmix64(key_ + ++counter_); }

  static double to_unit(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace uwgan

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

#include "uwgan/rng.hpp"
#include "uwgan/volume.hpp"

namespace uwgan {

// Rician corruption: sigma = delta * intensity_max of the target volume.
struct RicianSpec {
  double delta = 0.0;
  std::uint64_t seed = 0;
};

// Additive Gaussian noise calibrated to a target SNR in dB.
struct SnrSpec {
  double snr_db = 30.0;
  std::uint64_t seed = 0;
};

namespace detail {
inline constexpr std::uint64_t kRicianStream = 0x52494349414eULL;   // "RICIAN"
inline constexpr std::uint64_t kGaussianStream = 0x474155535349ULL; // "GAUSSI"
}  // namespace detail

// v -> sqrt((v + n1)^2 + n2^2), n1, n2 ~ N(0, sigma^2) keyed per voxel.
inline Volume4D add_rician(const Volume4D& vol, const RicianSpec& spec) {
  UWGAN_REQUIRE(spec.delta > 0.0, "rician delta must be > 0");
  vol.validate();
  const double sigma = spec.delta * static_cast<double>(vol.intensity_max);
  Volume4D out = vol;
  for (size_t i = 0; i < out.data.size(); ++i) {
    const double n1 = sigma * Rng::normal_at(spec.seed, detail::kRicianStream, i);
    const double n2 = sigma * Rng::normal_at2(spec.seed, detail::kRicianStream, i);
    const double v = static_cast<double>(vol.data[i]);
    out.data[i] = static_cast<float>(std::sqrt((v + n1) * (v + n1) + n2 * n2));
  }
  out.recompute_intensity_max();
  return out;
}

inline double rms(const Volume4D& vol) {
  double acc = 0.0;
  for (float v : vol.data) acc += static_cast<double>(v) * v;
  return std::sqrt(acc / static_cast<double>(vol.data.size()));
}

inline Volume4D add_gaussian_snr(const Volume4D& vol, const SnrSpec& spec) {
  vol.validate();
  const double signal_rms = rms(vol);
  UWGAN_REQUIRE(signal_rms > 0.0, "all-zero signal: SNR undefined");
  const double sigma = signal_rms / std::pow(10.0, spec.snr_db / 20.0);
  Volume4D out = vol;
  for (size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = static_cast<float>(
        static_cast<double>(vol.data[i]) +
        sigma * Rng::normal_at(spec.seed, detail::kGaussianStream, i));
  }
  out.recompute_intensity_max();
  return out;
}

}  // namespace uwgan

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
#include <map>
#include <string>
#include <vector>

#include "uwgan/noise.hpp"
#include "uwgan/volume.hpp"

namespace uwgan {

// One activation site: a Gaussian bump centered at a voxel. Control regions
// carry amplitude 0 (scored against, never activated).
struct RoiCenter {
  std::string name;
  std::array<int64_t, 3> center{0, 0, 0};
  double amplitude = 1.0;
};

// Double-gamma hemodynamic response, parameterized by the response and
// undershoot peak times (gamma modes) and dispersions (gamma scales). The
// defaults are a fast rodent-like response; all values are overridable.
struct HrfSpec {
  double peak_seconds = 2.8;
  double undershoot_seconds = 7.0;
  double peak_dispersion = 0.8;
  double undershoot_dispersion = 1.2;
  double undershoot_ratio = 0.1;
  double kernel_seconds = 20.0;

  void validate() const {
    UWGAN_REQUIRE(peak_dispersion > 0.0 && undershoot_dispersion > 0.0,
                  "hrf dispersions must be positive");
    UWGAN_REQUIRE(peak_seconds > 0.0 && undershoot_seconds > 0.0,
                  "hrf peak times must be positive");
    UWGAN_REQUIRE(undershoot_ratio >= 0.0, "hrf undershoot ratio must be >= 0");
    UWGAN_REQUIRE(kernel_seconds >= peak_seconds,
                  "hrf kernel must cover the peak");
  }
};

struct PhantomSpec {
  std::array<int64_t, 3> dims{48, 48, 24};
  double tr_seconds = 3.0;
  double on_seconds = 30.0;
  double off_seconds = 60.0;
  int64_t cycles = 10;
  double spatial_sigma_voxels = 4.0;
  double peak_fraction = 0.10;
  double baseline = 100.0;
  std::vector<RoiCenter> rois;  // empty -> default_rois()
  HrfSpec hrf;
  double snr_db = 30.0;  // +inf skips the noise stage
  std::uint64_t seed = 1;

  // Three activated sites plus two amplitude-0 controls, spaced at least
  // 3 sigma apart and a full truth radius inside the default grid.
  static std::vector<RoiCenter> default_rois() {
    return {
        {"superior_colliculus", {12, 12, 12}, 1.0},
        {"visual_cortex_1", {36, 12, 12}, 1.0},
        {"visual_cortex_2", {24, 36, 12}, 1.0},
        // Control centers are kept >= 5 sigma from every activated bump so
        // their radius-4 scoring balls see no meaningful activation tail.
        {"anterior_pretectal_nucleus", {6, 42, 18}, 0.0},
        {"parietal_cortex", {42, 42, 6}, 0.0},
    };
  }

  std::vector<RoiCenter> effective_rois() const {
    return rois.empty() ? default_rois() : rois;
  }

  int64_t frames() const {
    const double cycle = on_seconds + off_seconds;
    const double f = static_cast<double>(cycles) * cycle / tr_seconds;
    const auto n = static_cast<int64_t>(std::llround(f));
    UWGAN_REQUIRE(std::abs(f - static_cast<double>(n)) < 1e-9,
                  "cycle length must be a whole number of frames");
    return n;
  }

  void validate() const {
    hrf.validate();
    UWGAN_REQUIRE(dims[0] > 0 && dims[1] > 0 && dims[2] > 0,
                  "phantom grid dims must be positive");
    UWGAN_REQUIRE(tr_seconds > 0.0 && cycles > 0 && on_seconds >= 0.0 &&
                      off_seconds >= 0.0,
                  "phantom timing must be positive");
    UWGAN_REQUIRE(spatial_sigma_voxels > 0.0, "spatial sigma must be > 0");
    UWGAN_REQUIRE(baseline > 0.0, "baseline must be > 0");
    frames();
    for (const auto& r : effective_rois()) {
      UWGAN_REQUIRE(r.amplitude >= 0.0, "roi amplitude must be >= 0");
      for (int a = 0; a < 3; ++a)
        UWGAN_REQUIRE(r.center[a] >= 0 && r.center[a] < dims[a],
                      "roi center outside grid: " + r.name);
    }
  }
};

struct GroundTruth {
  Volume3D mask;  // 1 inside a radius-4 ball around any activated center
  std::map<std::string, int64_t> roi_voxels;
};

inline constexpr double kTruthRadiusVoxels = 4.0;

// Unnormalized gamma density with mode at `peak` and scale `dispersion`.
namespace detail {
inline double gamma_bump(double t, double peak, double dispersion) {
  if (t <= 0.0) return 0.0;
  const double k = 1.0 + peak / dispersion;  // mode = (k-1)*scale = peak
  return std::pow(t, k - 1.0) * std::exp(-t / dispersion);
}
}  // namespace detail

// Kernel sampled at tr spacing, peak-normalized to 1.
inline std::vector<double> hrf_kernel(const HrfSpec& spec, double tr) {
  spec.validate();
  UWGAN_REQUIRE(tr > 0.0, "hrf sampling interval must be > 0");
  const auto len = static_cast<int64_t>(std::floor(spec.kernel_seconds / tr)) + 1;
  std::vector<double> k(static_cast<size_t>(len));
  const double p1 = detail::gamma_bump(spec.peak_seconds, spec.peak_seconds,
                                       spec.peak_dispersion);
  const double p2 =
      detail::gamma_bump(spec.undershoot_seconds, spec.undershoot_seconds,
                         spec.undershoot_dispersion);
  double peak = 0.0, integral = 0.0;
  for (int64_t i = 0; i < len; ++i) {
    const double t = static_cast<double>(i) * tr;
    k[i] = detail::gamma_bump(t, spec.peak_seconds, spec.peak_dispersion) / p1 -
           spec.undershoot_ratio *
               detail::gamma_bump(t, spec.undershoot_seconds,
                                  spec.undershoot_dispersion) /
               p2;
    peak = std::max(peak, k[i]);
    integral += k[i];
  }
  UWGAN_REQUIRE(peak > 0.0 && integral > 0.0,
                "hrf kernel must integrate to a positive value");
  for (double& v : k) v /= peak;
  return k;
}

// Boxcar (1 on, 0 off) convolved with the HRF, truncated to the frame count
// and max-normalized to 1 (all-off designs stay all-zero).
inline std::vector<double> design_timecourse(const PhantomSpec& spec) {
  spec.validate();
  const int64_t n = spec.frames();
  const double cycle = spec.on_seconds + spec.off_seconds;
  std::vector<double> boxcar(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    const double t = std::fmod(static_cast<double>(i) * spec.tr_seconds, cycle);
    boxcar[i] = t < spec.on_seconds ? 1.0 : 0.0;
  }
  const std::vector<double> k = hrf_kernel(spec.hrf, spec.tr_seconds);
  std::vector<double> tc(static_cast<size_t>(n), 0.0);
  for (int64_t i = 0; i < n; ++i)
    for (size_t j = 0; j < k.size() && static_cast<int64_t>(j) <= i; ++j)
      tc[i] += boxcar[i - static_cast<int64_t>(j)] * k[j];
  double mx = 0.0;
  for (double v : tc) mx = std::max(mx, v);
  if (mx > 0.0)
    for (double& v : tc) v /= mx;
  return tc;
}

// Noise-free value = baseline * (1 + peak_fraction * tc(t) * sum of Gaussian
// bumps); Gaussian noise at snr_db added afterwards (skipped when infinite).
inline std::pair<Volume4D, GroundTruth> generate_phantom(
    const PhantomSpec& spec) {
  spec.validate();
  const auto rois = spec.effective_rois();
  const std::vector<double> tc = design_timecourse(spec);
  const int64_t m = spec.dims[0], n = spec.dims[1], q = spec.dims[2];
  const int64_t frames = spec.frames();

  // Spatial activation field (summed over ROIs), computed once.
  std::vector<double> field(static_cast<size_t>(m * n * q), 0.0);
  const double two_sigma_sq =
      2.0 * spec.spatial_sigma_voxels * spec.spatial_sigma_voxels;
  GroundTruth truth;
  truth.mask = Volume3D::make({m, n, q});
  for (const auto& r : rois) truth.roi_voxels[r.name] = 0;
  for (int64_t z = 0; z < q; ++z)
    for (int64_t y = 0; y < n; ++y)
      for (int64_t x = 0; x < m; ++x) {
        const int64_t i = x + m * (y + n * z);
        for (const auto& r : rois) {
          const double dx = static_cast<double>(x - r.center[0]);
          const double dy = static_cast<double>(y - r.center[1]);
          const double dz = static_cast<double>(z - r.center[2]);
          const double d2 = dx * dx + dy * dy + dz * dz;
          if (r.amplitude > 0.0) {
            field[i] += r.amplitude * std::exp(-d2 / two_sigma_sq);
            if (d2 <= kTruthRadiusVoxels * kTruthRadiusVoxels) {
              truth.mask.data[i] = 1.0f;
              ++truth.roi_voxels[r.name];
            }
          }
        }
      }

  Volume4D vol = Volume4D::make({m, n, q, frames}, {1.0, 1.0, 1.0},
                                spec.tr_seconds);
  for (int64_t f = 0; f < frames; ++f) {
    float* dst = vol.data.data() + f * m * n * q;
    const double mod = spec.peak_fraction * tc[f];
    for (int64_t i = 0; i < m * n * q; ++i)
      dst[i] = static_cast<float>(spec.baseline * (1.0 + mod * field[i]));
  }
  vol.recompute_intensity_max();
  if (!std::isinf(spec.snr_db))
    vol = add_gaussian_snr(vol, SnrSpec{spec.snr_db, spec.seed});
  return {std::move(vol), std::move(truth)};
}

}  // namespace uwgan

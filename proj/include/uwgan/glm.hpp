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

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "uwgan/phantom.hpp"
#include "uwgan/volume.hpp"

namespace uwgan {

// Two-column voxelwise design: the HRF-convolved task regressor plus an
// intercept.
struct DesignMatrix {
  std::vector<double> task;

  int64_t rows() const { return static_cast<int64_t>(task.size()); }

  void validate() const {
    UWGAN_REQUIRE(rows() > 2, "design needs more rows than columns");
    const double first = task.front();
    bool varies = false;
    for (double v : task) varies = varies || v != first;
    UWGAN_REQUIRE(varies, "task regressor is constant (rank-deficient design)");
  }

  static DesignMatrix from_phantom(const PhantomSpec& spec) {
    return DesignMatrix{design_timecourse(spec)};
  }
};

struct RoiScore {
  std::string name;
  double pct_significant = 0.0;
  double pct_ground_truth = 0.0;
  double deviation = 0.0;  // pct_significant - pct_ground_truth
};

struct GlmReport {
  Volume3D t_map;
  double threshold = 0.0;
  Volume3D significant_mask;
  std::vector<RoiScore> rois;
  double weighted_deviation = 0.0;
};

// Voxelwise OLS t-map: beta = (X'X)^-1 X'y, t = c'beta / sqrt(var * c'(X'X)^-1 c)
// with var = RSS/(n-2). Perfect fits (RSS = 0) get a signed infinity sentinel
// (zero when the contrast of a perfect fit is itself zero).
inline Volume3D fit_glm(const Volume4D& vol, const DesignMatrix& design,
                        std::array<double, 2> contrast = {1.0, 0.0}) {
  vol.validate();
  design.validate();
  const int64_t n = design.rows();
  UWGAN_REQUIRE(vol.dims[3] == n, "frame count does not match design rows");

  // X'X for X = [task, 1].
  double stt = 0.0, st = 0.0;
  for (double v : design.task) {
    stt += v * v;
    st += v;
  }
  const double nn = static_cast<double>(n);
  const double det = stt * nn - st * st;
  UWGAN_REQUIRE(det > 1e-12 * stt * nn, "rank-deficient design");
  // inv(X'X) = [[nn, -st], [-st, stt]] / det
  const double i00 = nn / det, i01 = -st / det, i11 = stt / det;
  const double c0 = contrast[0], c1 = contrast[1];
  const double cic = c0 * c0 * i00 + 2.0 * c0 * c1 * i01 + c1 * c1 * i11;

  const int64_t vox = vol.dims[0] * vol.dims[1] * vol.dims[2];
  Volume3D t_map = Volume3D::make({vol.dims[0], vol.dims[1], vol.dims[2]});
  for (int64_t p = 0; p < vox; ++p) {
    double sty = 0.0, sy = 0.0;
    for (int64_t f = 0; f < n; ++f) {
      const double y = vol.data[p + f * vox];
      sty += design.task[f] * y;
      sy += y;
    }
    const double b0 = i00 * sty + i01 * sy;   // task slope
    const double b1 = i01 * sty + i11 * sy;   // intercept
    double rss = 0.0;
    for (int64_t f = 0; f < n; ++f) {
      const double r = vol.data[p + f * vox] - b0 * design.task[f] - b1;
      rss += r * r;
    }
    const double cb = c0 * b0 + c1 * b1;
    const double var = rss / (nn - 2.0);
    double t;
    if (var <= 0.0) {
      t = cb > 0.0 ? std::numeric_limits<double>::infinity()
                   : (cb < 0.0 ? -std::numeric_limits<double>::infinity() : 0.0);
    } else {
      t = cb / std::sqrt(var * cic);
    }
    t_map.data[p] = static_cast<float>(t);
  }
  return t_map;
}

// One-sided uncorrected voxel threshold: t > quantile(1 - alpha) at the given
// degrees of freedom.
inline double t_threshold(double alpha, int64_t dof) {
  UWGAN_REQUIRE(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
  UWGAN_REQUIRE(dof >= 1, "degrees of freedom must be >= 1");
  boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, 1.0 - alpha);
}

inline Volume3D threshold_map(const Volume3D& t_map, double alpha, int64_t dof) {
  const double thr = t_threshold(alpha, dof);
  Volume3D mask = Volume3D::make(t_map.dims);
  for (size_t i = 0; i < t_map.data.size(); ++i)
    mask.data[i] = t_map.data[i] > thr ? 1.0f : 0.0f;
  return mask;
}

namespace detail {
// Enumerates the voxels of a ball of `radius` around `center`, clipped to the
// grid, invoking fn(linear_index).
template <typename Fn>
void for_ball(const std::array<int64_t, 3>& dims,
              const std::array<int64_t, 3>& center, double radius, Fn&& fn) {
  const auto r = static_cast<int64_t>(std::floor(radius));
  for (int64_t dz = -r; dz <= r; ++dz)
    for (int64_t dy = -r; dy <= r; ++dy)
      for (int64_t dx = -r; dx <= r; ++dx) {
        if (static_cast<double>(dx * dx + dy * dy + dz * dz) > radius * radius)
          continue;
        const int64_t x = center[0] + dx, y = center[1] + dy,
                      z = center[2] + dz;
        if (x < 0 || x >= dims[0] || y < 0 || y >= dims[1] || z < 0 ||
            z >= dims[2])
          continue;
        fn(x + dims[0] * (y + dims[1] * z));
      }
}
}  // namespace detail

// ROI-level detection scores: per ROI the detected and ground-truth voxel
// percentages within a radius-4 ball, and their absolute deviations weighted
// by each ROI's share of the total ground truth.
inline GlmReport score_rois(const Volume3D& mask, const GroundTruth& truth,
                            const std::vector<RoiCenter>& rois,
                            double radius = kTruthRadiusVoxels) {
  UWGAN_REQUIRE(mask.dims == truth.mask.dims, "mask/truth grid mismatch");
  GlmReport report;
  report.significant_mask = mask;
  double truth_total = 0.0;
  for (float v : truth.mask.data) truth_total += v;
  double weighted = 0.0;
  for (const auto& r : rois) {
    int64_t roi_vox = 0, sig = 0, tru = 0;
    detail::for_ball(mask.dims, r.center, radius, [&](int64_t i) {
      ++roi_vox;
      if (mask.data[i] > 0.5f) ++sig;
      if (truth.mask.data[i] > 0.5f) ++tru;
    });
    UWGAN_REQUIRE(roi_vox > 0, "roi has no voxels inside the grid: " + r.name);
    RoiScore s;
    s.name = r.name;
    s.pct_significant = 100.0 * static_cast<double>(sig) / roi_vox;
    s.pct_ground_truth = 100.0 * static_cast<double>(tru) / roi_vox;
    s.deviation = s.pct_significant - s.pct_ground_truth;
    if (truth_total > 0.0)
      weighted += (static_cast<double>(tru) / truth_total) * std::abs(s.deviation);
    report.rois.push_back(std::move(s));
  }
  report.weighted_deviation = weighted;
  return report;
}

// Dice coefficient restricted to the union of the given ROI balls (activation
// detectability is judged where activation is plausibly expected, not over
// the whole grid).
inline double dice_over_rois(const Volume3D& mask, const Volume3D& truth,
                             const std::vector<RoiCenter>& rois,
                             double radius = kTruthRadiusVoxels) {
  UWGAN_REQUIRE(mask.dims == truth.dims, "mask/truth grid mismatch");
  std::vector<char> in_union(mask.data.size(), 0);
  for (const auto& r : rois)
    detail::for_ball(mask.dims, r.center, radius,
                     [&](int64_t i) { in_union[static_cast<size_t>(i)] = 1; });
  int64_t a = 0, b = 0, both = 0;
  for (size_t i = 0; i < mask.data.size(); ++i) {
    if (!in_union[i]) continue;
    const bool ma = mask.data[i] > 0.5f, tb = truth.data[i] > 0.5f;
    a += ma;
    b += tb;
    both += ma && tb;
  }
  if (a + b == 0) return 1.0;  // both empty: perfect agreement
  return 2.0 * static_cast<double>(both) / static_cast<double>(a + b);
}

}  // namespace uwgan

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
#include <limits>
#include <vector>

#include "uwgan/volume.hpp"

namespace uwgan {

struct QualityReport {
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct CohortStats {
  double mean = 0.0;
  double stddev = 0.0;
};

inline CohortStats cohort_stats(const std::vector<double>& xs) {
  CohortStats s;
  if (xs.empty()) return s;
  double acc = 0.0;
  for (double x : xs) acc += x;
  s.mean = acc / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1))
                           : 0.0;
  return s;
}

// 10*log10(V * Max^2 / ||clean - test||^2) with Max the maximum intensity over
// both volumes; identical volumes give the +inf sentinel.
inline double psnr(const Volume4D& clean, const Volume4D& test) {
  UWGAN_REQUIRE(clean.dims == test.dims, "psnr: dims mismatch");
  double max_i = -std::numeric_limits<double>::infinity();
  double sq = 0.0;
  for (size_t i = 0; i < clean.data.size(); ++i) {
    max_i = std::max({max_i, static_cast<double>(clean.data[i]),
                      static_cast<double>(test.data[i])});
    const double d = static_cast<double>(clean.data[i]) - test.data[i];
    sq += d * d;
  }
  if (sq == 0.0) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(clean.data.size());
  return 10.0 * std::log10(n * max_i * max_i / sq);
}

// Global-statistics SSIM; c1 = (0.01 L)^2, c2 = (0.03 L)^2 with L the shared
// maximum intensity.
inline double ssim(const Volume4D& clean, const Volume4D& test) {
  UWGAN_REQUIRE(clean.dims == test.dims, "ssim: dims mismatch");
  const double n = static_cast<double>(clean.data.size());
  double m1 = 0.0, m2 = 0.0, max_i = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < clean.data.size(); ++i) {
    m1 += clean.data[i];
    m2 += test.data[i];
    max_i = std::max({max_i, static_cast<double>(clean.data[i]),
                      static_cast<double>(test.data[i])});
  }
  m1 /= n;
  m2 /= n;
  double v1 = 0.0, v2 = 0.0, cov = 0.0;
  for (size_t i = 0; i < clean.data.size(); ++i) {
    const double d1 = clean.data[i] - m1;
    const double d2 = test.data[i] - m2;
    v1 += d1 * d1;
    v2 += d2 * d2;
    cov += d1 * d2;
  }
  v1 /= n;
  v2 /= n;
  cov /= n;
  const double c1 = (0.01 * max_i) * (0.01 * max_i);
  const double c2 = (0.03 * max_i) * (0.03 * max_i);
  return ((2.0 * m1 * m2 + c1) * (2.0 * cov + c2)) /
         ((m1 * m1 + m2 * m2 + c1) * (v1 + v2 + c2));
}

// Windowed SSIM variant: mean of the global formula over non-overlapping
// cubic windows of the merged (x,y,z*t) grid, using shared constants.
inline double ssim_windowed(const Volume4D& clean, const Volume4D& test,
                            int64_t window = 8) {
  UWGAN_REQUIRE(clean.dims == test.dims, "ssim: dims mismatch");
  UWGAN_REQUIRE(window >= 1, "window must be >= 1");
  double max_i = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < clean.data.size(); ++i)
    max_i = std::max({max_i, static_cast<double>(clean.data[i]),
                      static_cast<double>(test.data[i])});
  const double c1 = (0.01 * max_i) * (0.01 * max_i);
  const double c2 = (0.03 * max_i) * (0.03 * max_i);
  const int64_t m = clean.dims[0], nn = clean.dims[1],
                L = clean.dims[2] * clean.dims[3];
  double acc = 0.0;
  int64_t count = 0;
  for (int64_t z0 = 0; z0 < L; z0 += window)
    for (int64_t y0 = 0; y0 < nn; y0 += window)
      for (int64_t x0 = 0; x0 < m; x0 += window) {
        double s1 = 0, s2 = 0, q1 = 0, q2 = 0, q12 = 0;
        int64_t k = 0;
        for (int64_t z = z0; z < std::min(z0 + window, L); ++z)
          for (int64_t y = y0; y < std::min(y0 + window, nn); ++y)
            for (int64_t x = x0; x < std::min(x0 + window, m); ++x, ++k) {
              const int64_t i = x + m * (y + nn * z);
              const double a = clean.data[i], b = test.data[i];
              s1 += a;
              s2 += b;
              q1 += a * a;
              q2 += b * b;
              q12 += a * b;
            }
        const double kk = static_cast<double>(k);
        const double mu1 = s1 / kk, mu2 = s2 / kk;
        const double var1 = q1 / kk - mu1 * mu1;
        const double var2 = q2 / kk - mu2 * mu2;
        const double cov = q12 / kk - mu1 * mu2;
        acc += ((2 * mu1 * mu2 + c1) * (2 * cov + c2)) /
               ((mu1 * mu1 + mu2 * mu2 + c1) * (var1 + var2 + c2));
        ++count;
      }
  return acc / static_cast<double>(count);
}

inline QualityReport quality(const Volume4D& clean, const Volume4D& test) {
  return QualityReport{psnr(clean, test), ssim(clean, test)};
}

// Per-frame metrics: each timepoint scored as its own 3D volume.
inline std::vector<QualityReport> quality_per_frame(const Volume4D& clean,
                                                    const Volume4D& test) {
  UWGAN_REQUIRE(clean.dims == test.dims, "quality: dims mismatch");
  std::vector<QualityReport> out;
  const int64_t frame_len = clean.dims[0] * clean.dims[1] * clean.dims[2];
  for (int64_t f = 0; f < clean.dims[3]; ++f) {
    Volume4D a = Volume4D::make({clean.dims[0], clean.dims[1], clean.dims[2], 1},
                                clean.voxel_mm, clean.tr_seconds);
    Volume4D b = a;
    std::copy_n(clean.data.begin() + f * frame_len, frame_len, a.data.begin());
    std::copy_n(test.data.begin() + f * frame_len, frame_len, b.data.begin());
    a.recompute_intensity_max();
    b.recompute_intensity_max();
    out.push_back(quality(a, b));
  }
  return out;
}

}  // namespace uwgan

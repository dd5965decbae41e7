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

#include <string>
#include <vector>

#include "uwgan/volume.hpp"

namespace uwgan {

// The two 4D data configurations: merge a (m,n,q,t) volume into a 3D stack
// either frame-by-frame (slice-based, xyz) or per-slice time series
// (time-based, xyt).
enum class ConfigMode { SliceBased, TimeBased };

inline std::string to_string(ConfigMode m) {
  return m == ConfigMode::SliceBased ? "xyz" : "xyt";
}

inline ConfigMode config_mode_from_string(const std::string& s) {
  if (s == "xyz" || s == "slice-based") return ConfigMode::SliceBased;
  if (s == "xyt" || s == "time-based") return ConfigMode::TimeBased;
  fail("unknown config mode '" + s + "' (want xyz or xyt)");
}

struct PatchGrid {
  ConfigMode mode = ConfigMode::SliceBased;
  std::array<int64_t, 4> source_dims{0, 0, 0, 0};
  std::array<int64_t, 3> merged_dims{0, 0, 0};
  int64_t patch_size = 32;
  int64_t stride = 32;
  std::array<int64_t, 3> counts{0, 0, 0};
  int64_t pad_z = 0;

  int64_t total() const { return counts[0] * counts[1] * counts[2]; }
};

struct PatchSet {
  PatchGrid grid;
  std::vector<Volume3D> patches;  // row-major over (cx, cy, cz)
};

// Slice-based: merged z index = frame*q + slice. Time-based: slice*t + frame.
inline Volume3D merge(const Volume4D& vol, ConfigMode mode) {
  vol.validate();
  const int64_t m = vol.dims[0], n = vol.dims[1], q = vol.dims[2],
                t = vol.dims[3];
  Volume3D out = Volume3D::make({m, n, q * t});
  const int64_t plane = m * n;
  for (int64_t frame = 0; frame < t; ++frame) {
    for (int64_t slice = 0; slice < q; ++slice) {
      const int64_t zi = (mode == ConfigMode::SliceBased) ? frame * q + slice
                                                          : slice * t + frame;
      const float* src = vol.data.data() + plane * (slice + q * frame);
      std::copy(src, src + plane, out.data.data() + plane * zi);
    }
  }
  return out;
}

inline Volume4D unmerge(const Volume3D& merged, ConfigMode mode,
                        std::array<int64_t, 4> source_dims,
                        std::array<double, 3> voxel_mm = {1.0, 1.0, 1.0},
                        double tr_seconds = 1.0) {
  const int64_t m = source_dims[0], n = source_dims[1], q = source_dims[2],
                t = source_dims[3];
  UWGAN_REQUIRE(merged.dims[0] == m && merged.dims[1] == n &&
                    merged.dims[2] == q * t,
                "unmerge: merged dims " + std::to_string(merged.dims[2]) +
                    " != q*t = " + std::to_string(q * t));
  Volume4D out = Volume4D::make(source_dims, voxel_mm, tr_seconds);
  const int64_t plane = m * n;
  for (int64_t frame = 0; frame < t; ++frame) {
    for (int64_t slice = 0; slice < q; ++slice) {
      const int64_t zi = (mode == ConfigMode::SliceBased) ? frame * q + slice
                                                          : slice * t + frame;
      const float* src = merged.data.data() + plane * zi;
      std::copy(src, src + plane, out.data.data() + plane * (slice + q * frame));
    }
  }
  out.recompute_intensity_max();
  return out;
}

// Non-overlapping cubic tiling; the third axis is zero-padded at the high end
// up to a whole number of patches.
inline PatchSet extract_patches(const Volume3D& merged, int64_t patch_size,
                                int64_t stride, ConfigMode mode,
                                std::array<int64_t, 4> source_dims) {
  UWGAN_REQUIRE(patch_size >= 1 && stride >= 1,
                "patch size and stride must be positive");
  const int64_t m = merged.dims[0], n = merged.dims[1], L = merged.dims[2];
  UWGAN_REQUIRE(patch_size <= m && patch_size <= n,
                "patch size exceeds in-plane dims");
  PatchGrid grid;
  grid.mode = mode;
  grid.source_dims = source_dims;
  grid.merged_dims = merged.dims;
  grid.patch_size = patch_size;
  grid.stride = stride;
  grid.counts = {(m + stride - 1) / stride, (n + stride - 1) / stride,
                 (L + stride - 1) / stride};
  const int64_t padded = (grid.counts[2] - 1) * stride + patch_size;
  grid.pad_z = padded > L ? padded - L : 0;

  PatchSet set;
  set.grid = grid;
  set.patches.reserve(static_cast<size_t>(grid.total()));
  const int64_t s = patch_size;
  for (int64_t ix = 0; ix < grid.counts[0]; ++ix)
    for (int64_t iy = 0; iy < grid.counts[1]; ++iy)
      for (int64_t iz = 0; iz < grid.counts[2]; ++iz) {
        Volume3D p = Volume3D::make({s, s, s});
        const int64_t cols = std::min(s, m - ix * stride);
        for (int64_t z = 0; z < s; ++z) {
          const int64_t gz = iz * stride + z;
          if (gz >= L) continue;  // zero pad
          for (int64_t y = 0; y < s; ++y) {
            const int64_t gy = iy * stride + y;
            if (gy >= n) continue;
            const float* src = merged.data.data() + merged.index(ix * stride, gy, gz);
            std::copy(src, src + cols, p.data.data() + p.index(0, y, z));
          }
        }
        set.patches.push_back(std::move(p));
      }
  return set;
}

inline Volume3D reassemble(const PatchSet& set) {
  const PatchGrid& g = set.grid;
  UWGAN_REQUIRE(static_cast<int64_t>(set.patches.size()) == g.total(),
                "patch count inconsistent with grid");
  UWGAN_REQUIRE(g.stride == g.patch_size,
                "reassembly requires non-overlapping tiling");
  const int64_t s = g.patch_size;
  Volume3D out = Volume3D::make(g.merged_dims);
  const int64_t L = g.merged_dims[2];
  size_t idx = 0;
  for (int64_t ix = 0; ix < g.counts[0]; ++ix)
    for (int64_t iy = 0; iy < g.counts[1]; ++iy)
      for (int64_t iz = 0; iz < g.counts[2]; ++iz, ++idx) {
        const Volume3D& p = set.patches[idx];
        UWGAN_REQUIRE(p.dims[0] == s && p.dims[1] == s && p.dims[2] == s,
                      "patch dims inconsistent with grid");
        for (int64_t z = 0; z < s; ++z) {
          const int64_t gz = iz * g.stride + z;
          if (gz >= L) continue;  // discard padding
          for (int64_t y = 0; y < s; ++y) {
            const int64_t gy = iy * g.stride + y;
            if (gy >= g.merged_dims[1]) continue;
            const int64_t gx = ix * g.stride;
            const int64_t cols = std::min(s, g.merged_dims[0] - gx);
            const float* src = p.data.data() + p.index(0, y, z);
            std::copy(src, src + cols, out.data.data() + out.index(gx, gy, gz));
          }
        }
      }
  return out;
}

}  // namespace uwgan

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

#include <catch_amalgamated.hpp>

#include "helpers.hpp"
#include "uwgan/patching.hpp"

using namespace uwgan;
using uwgan::testing::random_volume;
using uwgan::testing::random_volume3;

TEST_CASE("merge dims and degenerate q=t=1 case") {
  Volume4D v = random_volume({4, 4, 1, 1}, 1);
  Volume3D a = merge(v, ConfigMode::SliceBased);
  Volume3D b = merge(v, ConfigMode::TimeBased);
  REQUIRE(a.dims == std::array<int64_t, 3>{4, 4, 1});
  REQUIRE(a.data == b.data);
  REQUIRE(a.data == v.data);
}

TEST_CASE("merge axis-ordering formulas (brute-force index oracle)") {
  Volume4D v = random_volume({2, 2, 2, 3}, 2);
  Volume3D sb = merge(v, ConfigMode::SliceBased);
  Volume3D tb = merge(v, ConfigMode::TimeBased);
  const int64_t q = 2, t = 3;
  for (int64_t frame = 0; frame < t; ++frame)
    for (int64_t slice = 0; slice < q; ++slice)
      for (int64_t y = 0; y < 2; ++y)
        for (int64_t x = 0; x < 2; ++x) {
          const float val = v.at(x, y, slice, frame);
          REQUIRE(sb.at(x, y, frame * q + slice) == val);
          REQUIRE(tb.at(x, y, slice * t + frame) == val);
        }
  // The two configurations are axis-3 permutations of one another.
  std::vector<float> a = sb.data, b = tb.data;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  REQUIRE(a == b);
  REQUIRE(sb.data != tb.data);
}

TEST_CASE("unmerge round trips both modes and rejects bad dims") {
  Volume4D v = random_volume({8, 8, 3, 5}, 3, 5.0);
  for (ConfigMode mode : {ConfigMode::SliceBased, ConfigMode::TimeBased}) {
    Volume4D back = unmerge(merge(v, mode), mode, v.dims, v.voxel_mm,
                            v.tr_seconds);
    REQUIRE(back.data == v.data);
  }
  // Wrong mode on q != t data is not the identity.
  Volume4D wrong = unmerge(merge(v, ConfigMode::SliceBased),
                           ConfigMode::TimeBased, v.dims);
  REQUIRE(wrong.data != v.data);

  Volume3D bad = Volume3D::make({8, 8, 14});
  REQUIRE_THROWS_WITH(unmerge(bad, ConfigMode::SliceBased, {8, 8, 3, 5}),
                      Catch::Matchers::ContainsSubstring("14"));
}

TEST_CASE("paper-scale merged volume tiles into 3x3x207 = 1863 patches") {
  Volume3D merged = Volume3D::make({96, 96, 6600});
  PatchSet set = extract_patches(merged, 32, 32, ConfigMode::SliceBased,
                                 {96, 96, 22, 300});
  REQUIRE(set.grid.counts == std::array<int64_t, 3>{3, 3, 207});
  REQUIRE(set.grid.total() == 1863);
  REQUIRE(set.grid.pad_z == 24);
  REQUIRE(set.patches.size() == 1863);
}

TEST_CASE("single-patch identity tiling") {
  Volume3D v = random_volume3({32, 32, 32}, 4);
  PatchSet set = extract_patches(v, 32, 32, ConfigMode::SliceBased,
                                 {32, 32, 32, 1});
  REQUIRE(set.patches.size() == 1);
  REQUIRE(set.patches[0].data == v.data);
}

TEST_CASE("padded grid counts and round trip with nonzero pad") {
  Volume3D v = random_volume3({64, 64, 80}, 5);
  PatchSet set = extract_patches(v, 32, 32, ConfigMode::SliceBased,
                                 {64, 64, 80, 1});
  REQUIRE(set.grid.counts == std::array<int64_t, 3>{2, 2, 3});
  REQUIRE(set.patches.size() == 12);
  REQUIRE(set.grid.pad_z == 16);
  Volume3D back = reassemble(set);
  REQUIRE(back.data == v.data);
}

TEST_CASE("reassembly rejects a missing patch") {
  Volume3D v = random_volume3({32, 32, 64}, 6);
  PatchSet set = extract_patches(v, 32, 32, ConfigMode::SliceBased,
                                 {32, 32, 64, 1});
  set.patches.pop_back();
  REQUIRE_THROWS_WITH(reassemble(set),
                      Catch::Matchers::ContainsSubstring("count"));
}

TEST_CASE("patch size larger than in-plane dims is unsupported") {
  Volume3D v = random_volume3({16, 16, 64}, 7);
  REQUIRE_THROWS(extract_patches(v, 32, 32, ConfigMode::SliceBased,
                                 {16, 16, 64, 1}));
}

TEST_CASE("patch-count formula matches brute-force enumeration") {
  for (int64_t m = 1; m <= 10; m += 3)
    for (int64_t n = 1; n <= 10; n += 3)
      for (int64_t L = 1; L <= 10; L += 3)
        for (int64_t s = 1; s <= 4; ++s) {
          if (s > m || s > n) continue;
          Volume3D v = random_volume3({m, n, L}, 8);
          PatchSet set = extract_patches(v, s, s, ConfigMode::SliceBased,
                                         {m, n, L, 1});
          auto brute = [s](int64_t dim) {
            int64_t count = 0;
            for (int64_t start = 0; start < dim; start += s) ++count;
            return count;
          };
          REQUIRE(set.grid.total() == brute(m) * brute(n) * brute(L));
          // Tiling completeness: total patch voxels = padded volume.
          REQUIRE(static_cast<int64_t>(set.patches.size()) * s * s * s ==
                  brute(m) * brute(n) * brute(L) * s * s * s);
          REQUIRE(reassemble(set).data == v.data);
        }
}

TEST_CASE("full 4D round trip through merge/extract/reassemble/unmerge") {
  Volume4D v = random_volume({16, 12, 3, 4}, 9, 2.0);
  for (ConfigMode mode : {ConfigMode::SliceBased, ConfigMode::TimeBased}) {
    Volume3D merged = merge(v, mode);
    PatchSet set = extract_patches(merged, 4, 4, mode, v.dims);
    Volume4D back = unmerge(reassemble(set), mode, v.dims, v.voxel_mm,
                            v.tr_seconds);
    REQUIRE(back.data == v.data);
  }
}

TEST_CASE("config mode names round trip") {
  REQUIRE(to_string(ConfigMode::SliceBased) == "xyz");
  REQUIRE(to_string(ConfigMode::TimeBased) == "xyt");
  REQUIRE(config_mode_from_string("xyz") == ConfigMode::SliceBased);
  REQUIRE(config_mode_from_string("time-based") == ConfigMode::TimeBased);
  REQUIRE_THROWS(config_mode_from_string("zyx"));
}

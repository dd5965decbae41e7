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
#include "uwgan/metrics.hpp"
#include "uwgan/noise.hpp"

using namespace uwgan;
using uwgan::testing::random_volume;

namespace {

// Independent scalar-loop reimplementations (the oracles): same definitions,
// written without reuse of the library internals.
double psnr_oracle(const Volume4D& a, const Volume4D& b) {
  long double mx = 0.0L, sq = 0.0L;
  for (size_t i = 0; i < a.data.size(); ++i) {
    if (a.data[i] > mx) mx = a.data[i];
    if (b.data[i] > mx) mx = b.data[i];
    const long double d = static_cast<long double>(a.data[i]) - b.data[i];
    sq += d * d;
  }
  return static_cast<double>(
      10.0L * std::log10(static_cast<long double>(a.data.size()) * mx * mx / sq));
}

double ssim_oracle(const Volume4D& a, const Volume4D& b) {
  const long double n = static_cast<long double>(a.data.size());
  long double mx = 0.0L, m1 = 0.0L, m2 = 0.0L;
  for (size_t i = 0; i < a.data.size(); ++i) {
    mx = std::max({mx, static_cast<long double>(a.data[i]),
                   static_cast<long double>(b.data[i])});
    m1 += a.data[i];
    m2 += b.data[i];
  }
  m1 /= n;
  m2 /= n;
  long double v1 = 0.0L, v2 = 0.0L, cov = 0.0L;
  for (size_t i = 0; i < a.data.size(); ++i) {
    v1 += (a.data[i] - m1) * (a.data[i] - m1);
    v2 += (b.data[i] - m2) * (b.data[i] - m2);
    cov += (a.data[i] - m1) * (b.data[i] - m2);
  }
  v1 /= n;
  v2 /= n;
  cov /= n;
  const long double c1 = (0.01L * mx) * (0.01L * mx);
  const long double c2 = (0.03L * mx) * (0.03L * mx);
  return static_cast<double>(((2.0L * m1 * m2 + c1) * (2.0L * cov + c2)) /
                             ((m1 * m1 + m2 * m2 + c1) * (v1 + v2 + c2)));
}

}  // namespace

TEST_CASE("psnr: Max 1, MSE 0.01 gives 20 dB") {
  Volume4D clean = Volume4D::make({10, 10, 10, 1});
  for (auto& v : clean.data) v = 1.0f;
  clean.recompute_intensity_max();
  Volume4D test = clean;
  for (auto& v : test.data) v = 0.9f;
  test.recompute_intensity_max();
  REQUIRE(psnr(clean, test) == Catch::Approx(20.0).margin(1e-5));
}

TEST_CASE("psnr of identical volumes is the +inf sentinel") {
  Volume4D v = random_volume({6, 6, 6, 2}, 1, 3.0);
  REQUIRE(std::isinf(psnr(v, v)));
  REQUIRE(psnr(v, v) > 0);
}

TEST_CASE("psnr and ssim match scalar-loop oracles on 50 random pairs") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    Volume4D a = random_volume({8, 7, 6, 3}, 2 * s + 1, 10.0, 2.0);
    Volume4D b = random_volume({8, 7, 6, 3}, 2 * s + 2, 10.0, 2.0);
    REQUIRE(psnr(a, b) == Catch::Approx(psnr_oracle(a, b)).margin(1e-6));
    REQUIRE(ssim(a, b) == Catch::Approx(ssim_oracle(a, b)).margin(1e-8));
  }
}

TEST_CASE("ssim of a volume with itself is exactly 1") {
  Volume4D v = random_volume({9, 8, 7, 2}, 3, 5.0);
  REQUIRE(ssim(v, v) == 1.0);
}

TEST_CASE("ssim constant-1 vs constant-0 substitution oracle") {
  Volume4D one = Volume4D::make({8, 8, 8, 1});
  for (auto& v : one.data) v = 1.0f;
  one.recompute_intensity_max();
  Volume4D zero = Volume4D::make({8, 8, 8, 1});
  // (0 + 1e-4)(0 + 9e-4) / ((1 + 1e-4)(0 + 9e-4)) = 1e-4 / 1.0001
  REQUIRE(ssim(one, zero) == Catch::Approx(1e-4 / 1.0001).margin(1e-9));
}

TEST_CASE("psnr and ssim are symmetric") {
  Volume4D a = random_volume({7, 7, 7, 2}, 4, 6.0);
  Volume4D b = random_volume({7, 7, 7, 2}, 5, 6.0);
  REQUIRE(psnr(a, b) == Catch::Approx(psnr(b, a)).margin(1e-12));
  REQUIRE(ssim(a, b) == Catch::Approx(ssim(b, a)).margin(1e-12));
}

TEST_CASE("psnr decreases monotonically over increasing noise levels") {
  Volume4D clean = random_volume({16, 16, 8, 4}, 6, 20.0, 2.0);
  double prev = std::numeric_limits<double>::infinity();
  int level = 0;
  for (double snr_db : {40.0, 34.0, 28.0, 22.0, 16.0}) {
    Volume4D noisy = add_gaussian_snr(clean, SnrSpec{snr_db, 99});
    const double p = psnr(clean, noisy);
    INFO("level " << level++ << " snr_db " << snr_db);
    REQUIRE(p < prev);
    prev = p;
  }
}

TEST_CASE("dims mismatch is an error") {
  Volume4D a = random_volume({4, 4, 4, 2}, 7);
  Volume4D b = random_volume({4, 4, 4, 3}, 8);
  REQUIRE_THROWS(psnr(a, b));
  REQUIRE_THROWS(ssim(a, b));
}

TEST_CASE("windowed ssim agrees with global ssim for a whole-volume window") {
  Volume4D a = random_volume({8, 8, 4, 2}, 9, 10.0);
  Volume4D b = random_volume({8, 8, 4, 2}, 10, 10.0);
  // One window covering everything reduces to the global statistic.
  REQUIRE(ssim_windowed(a, b, 8 * 8 * 8) ==
          Catch::Approx(ssim(a, b)).margin(1e-9));
  // Windowed value is a mean of per-window SSIMs, hence within [-1, 1].
  const double w = ssim_windowed(a, b, 4);
  REQUIRE(w >= -1.0);
  REQUIRE(w <= 1.0);
}

TEST_CASE("per-frame metrics score each timepoint separately") {
  Volume4D clean = random_volume({6, 6, 4, 3}, 11, 10.0);
  Volume4D test = clean;
  // Corrupt only frame 1.
  const int64_t frame_len = 6 * 6 * 4;
  for (int64_t i = 0; i < frame_len; ++i) test.data[frame_len + i] += 0.5f;
  test.recompute_intensity_max();
  auto reports = quality_per_frame(clean, test);
  REQUIRE(reports.size() == 3);
  REQUIRE(std::isinf(reports[0].psnr_db));
  REQUIRE(std::isfinite(reports[1].psnr_db));
  REQUIRE(std::isinf(reports[2].psnr_db));
}

TEST_CASE("cohort stats: mean and sample standard deviation") {
  CohortStats s = cohort_stats({1.0, 2.0, 3.0, 4.0});
  REQUIRE(s.mean == Catch::Approx(2.5));
  REQUIRE(s.stddev == Catch::Approx(std::sqrt(5.0 / 3.0)));
  REQUIRE(cohort_stats({7.0}).stddev == 0.0);
}

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

#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <zlib.h>

#include "uwgan/metrics.hpp"
#include "uwgan/training.hpp"

namespace uwgan {

// ---- CSV ----

inline void write_history_csv(const std::string& path,
                              const std::vector<StepRecord>& history) {
  std::ofstream f(path);
  UWGAN_REQUIRE(f.good(), "cannot open for writing: " + path);
  f << "step,L_MSE,L_Per,L_adv,L_D,GP\n";
  f << std::setprecision(10);
  for (const auto& r : history)
    f << r.step << ',' << r.l_mse << ',' << r.l_per << ',' << r.l_adv << ','
      << r.l_d << ',' << r.gp << '\n';
  UWGAN_REQUIRE(f.good(), "write failed: " + path);
}

struct SubjectQuality {
  std::string subject;
  QualityReport report;
};

inline void write_quality_csv(const std::string& path,
                              const std::vector<SubjectQuality>& rows) {
  std::ofstream f(path);
  UWGAN_REQUIRE(f.good(), "cannot open for writing: " + path);
  f << "subject,psnr_db,ssim\n";
  f << std::setprecision(10);
  for (const auto& r : rows)
    f << r.subject << ',' << r.report.psnr_db << ',' << r.report.ssim << '\n';
  UWGAN_REQUIRE(f.good(), "write failed: " + path);
}

// ---- PNG (8-bit grayscale, zlib-deflated, filter 0) ----

namespace detail {

inline void png_chunk(std::ofstream& f, const char type[4],
                      const std::vector<unsigned char>& payload) {
  auto be32 = [&f](std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
    f.write(reinterpret_cast<const char*>(b), 4);
  };
  be32(static_cast<std::uint32_t>(payload.size()));
  f.write(type, 4);
  if (!payload.empty())
    f.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(type), 4);
  if (!payload.empty())
    crc = crc32(crc, payload.data(), static_cast<uInt>(payload.size()));
  be32(static_cast<std::uint32_t>(crc));
}

}  // namespace detail

inline void write_png_gray(const std::string& path, int64_t width,
                           int64_t height,
                           const std::vector<unsigned char>& pixels) {
  UWGAN_REQUIRE(width > 0 && height > 0 &&
                    static_cast<int64_t>(pixels.size()) == width * height,
                "png: pixel buffer does not match dims");
  std::ofstream f(path, std::ios::binary);
  UWGAN_REQUIRE(f.good(), "cannot open for writing: " + path);
  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a,
                                       '\n'};
  f.write(reinterpret_cast<const char*>(sig), 8);

  std::vector<unsigned char> ihdr(13, 0);
  auto put32 = [](unsigned char* p, std::uint32_t v) {
    p[0] = static_cast<unsigned char>(v >> 24);
    p[1] = static_cast<unsigned char>(v >> 16);
    p[2] = static_cast<unsigned char>(v >> 8);
    p[3] = static_cast<unsigned char>(v);
  };
  put32(ihdr.data(), static_cast<std::uint32_t>(width));
  put32(ihdr.data() + 4, static_cast<std::uint32_t>(height));
  ihdr[8] = 8;  // bit depth
  ihdr[9] = 0;  // grayscale
  detail::png_chunk(f, "IHDR", ihdr);

  std::vector<unsigned char> raw;
  raw.reserve(static_cast<size_t>((width + 1) * height));
  for (int64_t y = 0; y < height; ++y) {
    raw.push_back(0);  // filter: none
    raw.insert(raw.end(), pixels.begin() + y * width,
               pixels.begin() + (y + 1) * width);
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> deflated(bound);
  UWGAN_REQUIRE(compress2(deflated.data(), &bound, raw.data(),
                          static_cast<uLong>(raw.size()), 9) == Z_OK,
                "png: deflate failed");
  deflated.resize(bound);
  detail::png_chunk(f, "IDAT", deflated);
  detail::png_chunk(f, "IEND", {});
  UWGAN_REQUIRE(f.good(), "write failed: " + path);
}

// Side-by-side middle-z slices of several volumes at frame 0 plus the
// difference of the last two, on a shared intensity scale.
inline void write_slice_panel(const std::string& path,
                              const std::vector<const Volume4D*>& vols) {
  UWGAN_REQUIRE(!vols.empty(), "slice panel needs at least one volume");
  const auto dims = vols[0]->dims;
  for (const auto* v : vols)
    UWGAN_REQUIRE(v->dims == dims, "slice panel volumes must share dims");
  const int64_t m = dims[0], n = dims[1], z = dims[2] / 2;
  float lo = std::numeric_limits<float>::max(), hi = -lo;
  for (const auto* v : vols)
    for (int64_t y = 0; y < n; ++y)
      for (int64_t x = 0; x < m; ++x) {
        const float val = v->at(x, y, z, 0);
        lo = std::min(lo, val);
        hi = std::max(hi, val);
      }
  const float span = hi > lo ? hi - lo : 1.0f;
  const size_t count = vols.size() + (vols.size() >= 2 ? 1 : 0);
  const int64_t gap = 2;
  const int64_t width = static_cast<int64_t>(count) * (m + gap) - gap;
  std::vector<unsigned char> px(static_cast<size_t>(width * n), 255);
  auto paint = [&](size_t slot, auto&& value_at) {
    const int64_t x0 = static_cast<int64_t>(slot) * (m + gap);
    for (int64_t y = 0; y < n; ++y)
      for (int64_t x = 0; x < m; ++x) {
        const float v = (value_at(x, y) - lo) / span;
        px[static_cast<size_t>(y * width + x0 + x)] =
            static_cast<unsigned char>(std::clamp(v, 0.0f, 1.0f) * 255.0f);
      }
  };
  for (size_t k = 0; k < vols.size(); ++k)
    paint(k, [&, k](int64_t x, int64_t y) { return vols[k]->at(x, y, z, 0); });
  if (vols.size() >= 2) {
    const Volume4D* a = vols[vols.size() - 2];
    const Volume4D* b = vols[vols.size() - 1];
    paint(vols.size(), [&](int64_t x, int64_t y) {
      return lo + std::abs(a->at(x, y, z, 0) - b->at(x, y, z, 0));
    });
  }
  write_png_gray(path, width, n, px);
}

// ---- SVG bar chart ----

// One group per label, one bar per series; used for per-ROI deviations.
inline void write_svg_bars(
    const std::string& path, const std::vector<std::string>& labels,
    const std::vector<std::pair<std::string, std::vector<double>>>& series,
    const std::string& title) {
  UWGAN_REQUIRE(!labels.empty() && !series.empty(), "empty chart");
  for (const auto& s : series)
    UWGAN_REQUIRE(s.second.size() == labels.size(),
                  "series length does not match labels");
  double vmax = 1e-9;
  for (const auto& s : series)
    for (double v : s.second) vmax = std::max(vmax, std::abs(v));
  const int gw = 80, bar = static_cast<int>(60 / series.size());
  const int width = 60 + gw * static_cast<int>(labels.size());
  const int height = 220;
  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << height << "'>\n<text x='10' y='18' font-size='13'>"
      << title << "</text>\n";
  static const char* palette[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44"};
  for (size_t g = 0; g < labels.size(); ++g) {
    const int x0 = 40 + static_cast<int>(g) * gw;
    for (size_t s = 0; s < series.size(); ++s) {
      const double v = series[s].second[g];
      const int h = static_cast<int>(std::abs(v) / vmax * 140.0);
      svg << "<rect x='" << x0 + static_cast<int>(s) * bar << "' y='"
          << 170 - h << "' width='" << bar - 2 << "' height='" << h
          << "' fill='" << palette[s % 4] << "'/>\n";
    }
    svg << "<text x='" << x0 << "' y='190' font-size='9'>" << labels[g]
        << "</text>\n";
  }
  int ly = 205;
  int lx = 40;
  for (size_t s = 0; s < series.size(); ++s) {
    svg << "<rect x='" << lx << "' y='" << ly - 9 << "' width='9' height='9' fill='"
        << palette[s % 4] << "'/><text x='" << lx + 12 << "' y='" << ly
        << "' font-size='10'>" << series[s].first << "</text>\n";
    lx += 24 + static_cast<int>(series[s].first.size()) * 6;
  }
  svg << "</svg>\n";
  std::ofstream f(path);
  UWGAN_REQUIRE(f.good(), "cannot open for writing: " + path);
  f << svg.str();
  UWGAN_REQUIRE(f.good(), "write failed: " + path);
}

// ---- run manifest and summary ----

// Deterministic except for created_at.
inline nlohmann::json make_manifest(const nlohmann::json& config,
                                    std::uint64_t seed) {
  nlohmann::json m;
  m["artifact"] = "uwgan";
  m["version"] = "0.1.0";
  m["rng"] = kRngName;
  m["seed"] = seed;
  m["config"] = config;
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  m["created_at"] = buf;
  return m;
}

inline std::string format_mean_std(const CohortStats& s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << s.mean << " ± " << s.stddev;
  return os.str();
}

}  // namespace uwgan

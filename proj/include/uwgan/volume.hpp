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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwgan/common.hpp"

namespace uwgan {

// 4D scalar field (x fastest), float32 storage. Voxel (x,y,z,t) lives at
// x + m*(y + n*(z + q*t)).
struct Volume4D {
  std::array<int64_t, 4> dims{0, 0, 0, 0};  // m, n, q, t
  std::array<double, 3> voxel_mm{1.0, 1.0, 1.0};
  double tr_seconds = 1.0;
  std::vector<float> data;
  float intensity_max = 0.0f;

  int64_t numel() const { return dims[0] * dims[1] * dims[2] * dims[3]; }

  int64_t index(int64_t x, int64_t y, int64_t z, int64_t t) const {
    return x + dims[0] * (y + dims[1] * (z + dims[2] * t));
  }
  float& at(int64_t x, int64_t y, int64_t z, int64_t t) {
    return data[index(x, y, z, t)];
  }
  float at(int64_t x, int64_t y, int64_t z, int64_t t) const {
    return data[index(x, y, z, t)];
  }

  void recompute_intensity_max() {
    intensity_max = data.empty() ? 0.0f
                                 : *std::max_element(data.begin(), data.end());
  }

  void validate() const {
    for (int64_t d : dims) UWGAN_REQUIRE(d >= 1, "volume dims must be >= 1");
    for (double v : voxel_mm)
      UWGAN_REQUIRE(v > 0.0, "voxel size must be positive");
    UWGAN_REQUIRE(tr_seconds > 0.0, "TR must be positive");
    UWGAN_REQUIRE(static_cast<int64_t>(data.size()) == numel(),
                  "volume payload length does not match dims");
    for (float v : data)
      UWGAN_REQUIRE(std::isfinite(v), "volume contains non-finite data");
    float mx = data.empty() ? 0.0f : *std::max_element(data.begin(), data.end());
    UWGAN_REQUIRE(mx == intensity_max, "stale intensity_max");
  }

  static Volume4D make(std::array<int64_t, 4> dims,
                       std::array<double, 3> voxel_mm = {1.0, 1.0, 1.0},
                       double tr_seconds = 1.0) {
    Volume4D v;
    v.dims = dims;
    v.voxel_mm = voxel_mm;
    v.tr_seconds = tr_seconds;
    v.data.assign(static_cast<size_t>(v.numel()), 0.0f);
    return v;
  }
};

struct Volume3D {
  std::array<int64_t, 3> dims{0, 0, 0};  // a, b, c
  std::vector<float> data;

  int64_t numel() const { return dims[0] * dims[1] * dims[2]; }

  int64_t index(int64_t x, int64_t y, int64_t z) const {
    return x + dims[0] * (y + dims[1] * z);
  }
  float& at(int64_t x, int64_t y, int64_t z) { return data[index(x, y, z)]; }
  float at(int64_t x, int64_t y, int64_t z) const {
    return data[index(x, y, z)];
  }

  static Volume3D make(std::array<int64_t, 3> dims) {
    Volume3D v;
    v.dims = dims;
    v.data.assign(static_cast<size_t>(v.numel()), 0.0f);
    return v;
  }
};

namespace detail {

// NIfTI-1 single-file header; 348 bytes, little-endian, float32 payload.
#pragma pack(push, 1)
struct Nifti1Header {
  std::int32_t sizeof_hdr = 348;
  char data_type[10]{};
  char db_name[18]{};
  std::int32_t extents = 0;
  std::int16_t session_error = 0;
  char regular = 'r';
  char dim_info = 0;
  std::int16_t dim[8]{};
  float intent_p1 = 0, intent_p2 = 0, intent_p3 = 0;
  std::int16_t intent_code = 0;
  std::int16_t datatype = 16;  // float32
  std::int16_t bitpix = 32;
  std::int16_t slice_start = 0;
  float pixdim[8]{};
  float vox_offset = 352.0f;
  float scl_slope = 1.0f;
  float scl_inter = 0.0f;
  std::int16_t slice_end = 0;
  char slice_code = 0;
  char xyzt_units = 10;  // mm | sec
  float cal_max = 0, cal_min = 0;
  float slice_duration = 0;
  float toffset = 0;
  std::int32_t glmax = 0, glmin = 0;
  char descrip[80]{};
  char aux_file[24]{};
  std::int16_t qform_code = 0;
  std::int16_t sform_code = 0;
  float quatern_b = 0, quatern_c = 0, quatern_d = 0;
  float qoffset_x = 0, qoffset_y = 0, qoffset_z = 0;
  float srow_x[4]{}, srow_y[4]{}, srow_z[4]{};
  char intent_name[16]{};
  char magic[4]{'n', '+', '1', '\0'};
};
#pragma pack(pop)
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

inline bool has_suffix(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() &&
         s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

inline std::string sidecar_path(const std::string& path) {
  std::filesystem::path p(path);
  p.replace_extension(".json");
  return p.string();
}

}  // namespace detail

inline void save_volume(const Volume4D& vol, const std::string& path) {
  vol.validate();
  if (detail::has_suffix(path, ".nii")) {
    detail::Nifti1Header h;
    h.dim[0] = 4;
    for (int i = 0; i < 4; ++i) h.dim[i + 1] = static_cast<std::int16_t>(vol.dims[i]);
    for (int i = 5; i < 8; ++i) h.dim[i] = 1;
    h.pixdim[0] = 1.0f;
    for (int i = 0; i < 3; ++i) h.pixdim[i + 1] = static_cast<float>(vol.voxel_mm[i]);
    h.pixdim[4] = static_cast<float>(vol.tr_seconds);
    std::ofstream f(path, std::ios::binary);
    UWGAN_REQUIRE(f.good(), "cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(&h), sizeof(h));
    const char pad[4]{};
    f.write(pad, 4);  // header extension flag
    f.write(reinterpret_cast<const char*>(vol.data.data()),
            static_cast<std::streamsize>(vol.data.size() * sizeof(float)));
    UWGAN_REQUIRE(f.good(), "write failed: " + path);
    return;
  }
  // Raw float32 payload with JSON sidecar header.
  nlohmann::json j;
  j["dims"] = vol.dims;
  j["voxel_mm"] = vol.voxel_mm;
  j["tr_s"] = vol.tr_seconds;
  std::ofstream js(detail::sidecar_path(path));
  UWGAN_REQUIRE(js.good(), "cannot open for writing: " + detail::sidecar_path(path));
  js << j.dump(2) << "\n";
  std::ofstream f(path, std::ios::binary);
  UWGAN_REQUIRE(f.good(), "cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(vol.data.data()),
          static_cast<std::streamsize>(vol.data.size() * sizeof(float)));
  UWGAN_REQUIRE(f.good(), "write failed: " + path);
}

inline Volume4D load_volume(const std::string& path) {
  UWGAN_REQUIRE(std::filesystem::exists(path), "no such file: " + path);
  Volume4D vol;
  if (detail::has_suffix(path, ".nii")) {
    std::ifstream f(path, std::ios::binary);
    detail::Nifti1Header h;
    f.read(reinterpret_cast<char*>(&h), sizeof(h));
    UWGAN_REQUIRE(f.good() && h.sizeof_hdr == 348, "malformed NIfTI header: " + path);
    UWGAN_REQUIRE(std::strncmp(h.magic, "n+1", 3) == 0,
                  "not a single-file NIfTI-1 image: " + path);
    UWGAN_REQUIRE(h.datatype == 16, "unsupported NIfTI datatype (want float32)");
    UWGAN_REQUIRE(h.dim[0] == 3 || h.dim[0] == 4, "unsupported NIfTI rank");
    for (int i = 0; i < 4; ++i)
      vol.dims[i] = (i < h.dim[0]) ? h.dim[i + 1] : 1;
    for (int i = 0; i < 3; ++i)
      vol.voxel_mm[i] = h.pixdim[i + 1] > 0 ? h.pixdim[i + 1] : 1.0;
    vol.tr_seconds = h.pixdim[4] > 0 ? h.pixdim[4] : 1.0;
    f.seekg(static_cast<std::streamoff>(h.vox_offset));
    vol.data.assign(static_cast<size_t>(vol.numel()), 0.0f);
    f.read(reinterpret_cast<char*>(vol.data.data()),
           static_cast<std::streamsize>(vol.data.size() * sizeof(float)));
    UWGAN_REQUIRE(f.gcount() ==
                      static_cast<std::streamsize>(vol.data.size() * sizeof(float)),
                  "NIfTI payload shorter than declared dims: " + path);
  } else {
    const std::string side = detail::sidecar_path(path);
    UWGAN_REQUIRE(std::filesystem::exists(side), "missing sidecar header: " + side);
    nlohmann::json j;
    {
      std::ifstream js(side);
      try {
        js >> j;
      } catch (const nlohmann::json::exception& e) {
        fail("malformed sidecar header " + side + ": " + e.what());
      }
    }
    UWGAN_REQUIRE(j.contains("dims") && j["dims"].size() == 4,
                  "sidecar header missing 4D dims: " + side);
    for (int i = 0; i < 4; ++i) vol.dims[i] = j["dims"][i].get<int64_t>();
    if (j.contains("voxel_mm"))
      for (int i = 0; i < 3; ++i) vol.voxel_mm[i] = j["voxel_mm"][i].get<double>();
    if (j.contains("tr_s")) vol.tr_seconds = j["tr_s"].get<double>();
    const auto bytes = std::filesystem::file_size(path);
    UWGAN_REQUIRE(bytes == static_cast<std::uintmax_t>(vol.numel()) * sizeof(float),
                  "payload length does not match declared dims: " + path);
    std::ifstream f(path, std::ios::binary);
    vol.data.assign(static_cast<size_t>(vol.numel()), 0.0f);
    f.read(reinterpret_cast<char*>(vol.data.data()),
           static_cast<std::streamsize>(vol.data.size() * sizeof(float)));
    UWGAN_REQUIRE(f.good(), "read failed: " + path);
  }
  vol.recompute_intensity_max();
  vol.validate();
  return vol;
}

}  // namespace uwgan

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

#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "uwgan/nn.hpp"

namespace uwgan {

// Checkpoint file: 8-byte magic, u64 little-endian manifest length, JSON
// manifest, then the raw scalar payload in manifest order. Parameters carry
// their Adam moments so a resumed run follows the identical trajectory.
inline constexpr char kCheckpointMagic[9] = "UWGCKPT1";

namespace detail {

template <typename S>
nlohmann::json describe_set(const nn::ParameterSet<S>& ps) {
  nlohmann::json j;
  j["step"] = ps.step;
  j["params"] = nlohmann::json::array();
  for (const auto& p : ps.params())
    j["params"].push_back({{"name", p.name}, {"shape", p.var.value().shape}});
  j["buffers"] = nlohmann::json::array();
  for (const auto& b : ps.buffers())
    j["buffers"].push_back({{"name", b.name}, {"shape", b.tensor->shape}});
  return j;
}

template <typename S>
void write_set(std::ofstream& f, const nn::ParameterSet<S>& ps) {
  auto put = [&f](const Tensor<S>& t) {
    f.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(S)));
  };
  for (const auto& p : ps.params()) {
    put(p.var.value());
    put(p.adam_m);
    put(p.adam_v);
  }
  for (const auto& b : ps.buffers()) put(*b.tensor);
}

template <typename S>
void read_set(std::ifstream& f, const nlohmann::json& j,
              nn::ParameterSet<S>& ps, const std::string& path) {
  UWGAN_REQUIRE(j["params"].size() == ps.params().size() &&
                    j["buffers"].size() == ps.buffers().size(),
                "checkpoint layout does not match configured model: " + path);
  auto get = [&f, &path](Tensor<S>& t) {
    f.read(reinterpret_cast<char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(S)));
    UWGAN_REQUIRE(f.good(), "truncated checkpoint payload: " + path);
  };
  for (size_t i = 0; i < ps.params().size(); ++i) {
    auto& p = ps.params()[i];
    const auto& d = j["params"][i];
    UWGAN_REQUIRE(d["name"] == p.name &&
                      d["shape"].get<std::vector<int64_t>>() ==
                          p.var.value().shape,
                  "checkpoint parameter mismatch at '" + p.name + "': " + path);
    get(p.var.value());
    get(p.adam_m);
    get(p.adam_v);
  }
  for (size_t i = 0; i < ps.buffers().size(); ++i) {
    auto& b = ps.buffers()[i];
    const auto& d = j["buffers"][i];
    UWGAN_REQUIRE(d["name"] == b.name &&
                      d["shape"].get<std::vector<int64_t>>() == b.tensor->shape,
                  "checkpoint buffer mismatch at '" + b.name + "': " + path);
    get(*b.tensor);
  }
  ps.step = j["step"].get<int64_t>();
}

}  // namespace detail

template <typename S>
void save_checkpoint(const std::string& path, const nn::ParameterSet<S>& gen,
                     const nn::ParameterSet<S>& disc,
                     nlohmann::json extra = {}) {
  nlohmann::json manifest;
  manifest["rng"] = kRngName;
  manifest["scalar"] = sizeof(S) == 4 ? "f32" : "f64";
  manifest["generator"] = detail::describe_set(gen);
  manifest["discriminator"] = detail::describe_set(disc);
  manifest["extra"] = std::move(extra);
  const std::string m = manifest.dump();
  std::ofstream f(path, std::ios::binary);
  UWGAN_REQUIRE(f.good(), "cannot open for writing: " + path);
  f.write(kCheckpointMagic, 8);
  const std::uint64_t len = m.size();
  f.write(reinterpret_cast<const char*>(&len), 8);
  f.write(m.data(), static_cast<std::streamsize>(m.size()));
  detail::write_set(f, gen);
  detail::write_set(f, disc);
  UWGAN_REQUIRE(f.good(), "write failed: " + path);
}

// Restores into ParameterSets built from the same configuration; returns the
// manifest "extra" section.
template <typename S>
nlohmann::json load_checkpoint(const std::string& path,
                               nn::ParameterSet<S>& gen,
                               nn::ParameterSet<S>& disc) {
  std::ifstream f(path, std::ios::binary);
  UWGAN_REQUIRE(f.good(), "cannot open checkpoint: " + path);
  char magic[8];
  f.read(magic, 8);
  UWGAN_REQUIRE(f.good() && std::memcmp(magic, kCheckpointMagic, 8) == 0,
                "not a checkpoint file: " + path);
  std::uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), 8);
  std::string m(len, '\0');
  f.read(m.data(), static_cast<std::streamsize>(len));
  UWGAN_REQUIRE(f.good(), "truncated checkpoint manifest: " + path);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(m);
  } catch (const nlohmann::json::exception& e) {
    fail("malformed checkpoint manifest " + path + ": " + e.what());
  }
  const std::string want = sizeof(S) == 4 ? "f32" : "f64";
  UWGAN_REQUIRE(manifest["scalar"] == want,
                "checkpoint scalar type mismatch: " + path);
  detail::read_set(f, manifest["generator"], gen, path);
  detail::read_set(f, manifest["discriminator"], disc, path);
  return manifest["extra"];
}

}  // namespace uwgan

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

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "uwgan/autodiff.hpp"
#include "uwgan/rng.hpp"
#include "uwgan/volume.hpp"

namespace uwgan::testing {

inline Volume4D random_volume(std::array<int64_t, 4> dims, std::uint64_t seed,
                              double offset = 0.0, double scale = 1.0) {
  Volume4D v = Volume4D::make(dims);
  Rng rng(seed, 0xBEEF);
  for (auto& x : v.data)
    x = static_cast<float>(offset + scale * rng.normal());
  v.recompute_intensity_max();
  return v;
}

inline Volume3D random_volume3(std::array<int64_t, 3> dims,
                               std::uint64_t seed, double offset = 0.0,
                               double scale = 1.0) {
  Volume3D v = Volume3D::make(dims);
  Rng rng(seed, 0xBEEF);
  for (auto& x : v.data)
    x = static_cast<float>(offset + scale * rng.normal());
  return v;
}

template <typename S>
Tensor<S> random_tensor(std::vector<int64_t> shape, std::uint64_t seed,
                        S scale = S(1)) {
  Tensor<S> t(std::move(shape));
  Rng rng(seed, 0xF00D);
  for (auto& v : t.data) v = static_cast<S>(scale * rng.normal());
  return t;
}

// Scratch directory per test binary, cleaned on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("uwgan_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

// Central-finite-difference check of an analytic gradient for one leaf.
// loss() must rebuild the graph from the leaf's current values. Returns the
// largest relative error over the probed indices.
inline double gradcheck(const std::function<double()>& loss,
                        ad::Var<double> leaf,
                        const Tensor<double>& analytic,
                        const std::vector<int64_t>& indices,
                        double h = 1e-5) {
  double worst = 0.0;
  for (int64_t idx : indices) {
    double& slot = leaf.value().data[static_cast<size_t>(idx)];
    const double saved = slot;
    slot = saved + h;
    const double lp = loss();
    slot = saved - h;
    const double lm = loss();
    slot = saved;
    const double fd = (lp - lm) / (2.0 * h);
    const double an = analytic.data[static_cast<size_t>(idx)];
    const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
    worst = std::max(worst, std::abs(fd - an) / denom);
  }
  return worst;
}

// Deterministic sample of distinct indices in [0, n).
inline std::vector<int64_t> sample_indices(int64_t n, int64_t count,
                                           std::uint64_t seed) {
  std::vector<int64_t> all(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) all[static_cast<size_t>(i)] = i;
  Rng rng(seed, 0x1D);
  rng.shuffle(all.begin(), all.end());
  if (count < n) all.resize(static_cast<size_t>(count));
  return all;
}

}  // namespace uwgan::testing

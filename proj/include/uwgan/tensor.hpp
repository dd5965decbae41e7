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
#include <cmath>
#include <numeric>
#include <vector>

#include "uwgan/common.hpp"

namespace uwgan {

// Dense row-major tensor. The autodiff layer and the network code use the
// convention [N, C, D, H, W] for feature maps.
template <typename S>
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<S> data;

  Tensor() = default;
  explicit Tensor(std::vector<int64_t> sh) : shape(std::move(sh)) {
    data.assign(static_cast<size_t>(count(shape)), S(0));
  }
  Tensor(std::vector<int64_t> sh, std::vector<S> d)
      : shape(std::move(sh)), data(std::move(d)) {
    UWGAN_REQUIRE(static_cast<int64_t>(data.size()) == count(shape),
                  "tensor payload does not match shape");
  }

  static int64_t count(const std::vector<int64_t>& sh) {
    int64_t n = 1;
    for (int64_t d : sh) n *= d;
    return n;
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int64_t dim(size_t i) const { return shape[i]; }

  static Tensor zeros(std::vector<int64_t> sh) { return Tensor(std::move(sh)); }

  static Tensor full(std::vector<int64_t> sh, S v) {
    Tensor t(std::move(sh));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }

  static Tensor scalar(S v) { return full({1}, v); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (S v : data) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }
};

}  // namespace uwgan

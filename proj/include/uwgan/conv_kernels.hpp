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

#include <array>
#include <vector>

#include "uwgan/gemm.hpp"
#include "uwgan/tensor.hpp"

namespace uwgan {

// Per-axis (depth, height, width) convolution geometry.
struct ConvGeom {
  std::array<int64_t, 3> kernel{3, 3, 3};
  std::array<int64_t, 3> stride{1, 1, 1};
  std::array<int64_t, 3> pad{1, 1, 1};

  std::array<int64_t, 3> out_spatial(const std::array<int64_t, 3>& in) const {
    std::array<int64_t, 3> out{};
    for (int a = 0; a < 3; ++a) {
      const int64_t numer = in[a] + 2 * pad[a] - kernel[a];
      UWGAN_REQUIRE(numer >= 0, "convolution kernel larger than padded input");
      out[a] = numer / stride[a] + 1;
    }
    return out;
  }

  int64_t kernel_count() const { return kernel[0] * kernel[1] * kernel[2]; }
};

namespace detail {

template <typename S>
void im2col(const S* x, int64_t ci, const std::array<int64_t, 3>& in,
            const std::array<int64_t, 3>& out, const ConvGeom& g, S* col) {
  const int64_t ovox = out[0] * out[1] * out[2];
  const int64_t in_hw = in[1] * in[2];
  int64_t row = 0;
  for (int64_t c = 0; c < ci; ++c) {
    const S* xc = x + c * in[0] * in_hw;
    for (int64_t kd = 0; kd < g.kernel[0]; ++kd)
      for (int64_t kh = 0; kh < g.kernel[1]; ++kh)
        for (int64_t kw = 0; kw < g.kernel[2]; ++kw, ++row) {
          S* dst = col + row * ovox;
          for (int64_t od = 0; od < out[0]; ++od) {
            const int64_t id = od * g.stride[0] - g.pad[0] + kd;
            if (id < 0 || id >= in[0]) {
              for (int64_t i = 0; i < out[1] * out[2]; ++i) *dst++ = S(0);
              continue;
            }
            for (int64_t oh = 0; oh < out[1]; ++oh) {
              const int64_t ih = oh * g.stride[1] - g.pad[1] + kh;
              if (ih < 0 || ih >= in[1]) {
                for (int64_t i = 0; i < out[2]; ++i) *dst++ = S(0);
                continue;
              }
              const S* src = xc + id * in_hw + ih * in[2];
              for (int64_t ow = 0; ow < out[2]; ++ow) {
                const int64_t iw = ow * g.stride[2] - g.pad[2] + kw;
                *dst++ = (iw < 0 || iw >= in[2]) ? S(0) : src[iw];
              }
            }
          }
        }
  }
}

// Scatter-add transpose of im2col.
template <typename S>
void col2im(const S* col, int64_t ci, const std::array<int64_t, 3>& in,
            const std::array<int64_t, 3>& out, const ConvGeom& g, S* x) {
  const int64_t ovox = out[0] * out[1] * out[2];
  const int64_t in_hw = in[1] * in[2];
  int64_t row = 0;
  for (int64_t c = 0; c < ci; ++c) {
    S* xc = x + c * in[0] * in_hw;
    for (int64_t kd = 0; kd < g.kernel[0]; ++kd)
      for (int64_t kh = 0; kh < g.kernel[1]; ++kh)
        for (int64_t kw = 0; kw < g.kernel[2]; ++kw, ++row) {
          const S* src = col + row * ovox;
          for (int64_t od = 0; od < out[0]; ++od) {
            const int64_t id = od * g.stride[0] - g.pad[0] + kd;
            if (id < 0 || id >= in[0]) {
              src += out[1] * out[2];
              continue;
            }
            for (int64_t oh = 0; oh < out[1]; ++oh) {
              const int64_t ih = oh * g.stride[1] - g.pad[1] + kh;
              if (ih < 0 || ih >= in[1]) {
                src += out[2];
                continue;
              }
              S* dst = xc + id * in_hw + ih * in[2];
              for (int64_t ow = 0; ow < out[2]; ++ow, ++src) {
                const int64_t iw = ow * g.stride[2] - g.pad[2] + kw;
                if (iw >= 0 && iw < in[2]) dst[iw] += *src;
              }
            }
          }
        }
  }
}

}  // namespace detail

// y[n,co,o] = sum_{ci,k} x[n,ci,o*s-p+k] * w[co,ci,k]
template <typename S>
Tensor<S> conv3d_forward(const Tensor<S>& x, const Tensor<S>& w,
                         const ConvGeom& g) {
  UWGAN_REQUIRE(x.shape.size() == 5 && w.shape.size() == 5,
                "conv3d expects [N,C,D,H,W] input and [Co,Ci,kd,kh,kw] weight");
  UWGAN_REQUIRE(x.shape[1] == w.shape[1], "conv3d channel mismatch");
  const int64_t n = x.shape[0], ci = x.shape[1], co = w.shape[0];
  const std::array<int64_t, 3> in{x.shape[2], x.shape[3], x.shape[4]};
  const auto out = g.out_spatial(in);
  const int64_t ovox = out[0] * out[1] * out[2];
  const int64_t rows = ci * g.kernel_count();
  Tensor<S> y({n, co, out[0], out[1], out[2]});
  std::vector<S> col(static_cast<size_t>(rows * ovox));
  const int64_t in_vox = in[0] * in[1] * in[2];
  for (int64_t i = 0; i < n; ++i) {
    detail::im2col(x.data.data() + i * ci * in_vox, ci, in, out, g, col.data());
    gemm(false, false, co, ovox, rows, S(1), w.data.data(), rows, col.data(),
         ovox, S(0), y.data.data() + i * co * ovox, ovox);
  }
  return y;
}

// gw[co,ci,k] = sum_{n,o} gy[n,co,o] * x[n,ci,o*s-p+k]
template <typename S>
Tensor<S> conv3d_weight_grad(const Tensor<S>& x, const Tensor<S>& gy,
                             const ConvGeom& g,
                             const std::vector<int64_t>& w_shape) {
  const int64_t n = x.shape[0], ci = x.shape[1], co = gy.shape[1];
  const std::array<int64_t, 3> in{x.shape[2], x.shape[3], x.shape[4]};
  const std::array<int64_t, 3> out{gy.shape[2], gy.shape[3], gy.shape[4]};
  const int64_t ovox = out[0] * out[1] * out[2];
  const int64_t rows = ci * g.kernel_count();
  Tensor<S> gw(w_shape);
  std::vector<S> col(static_cast<size_t>(rows * ovox));
  const int64_t in_vox = in[0] * in[1] * in[2];
  for (int64_t i = 0; i < n; ++i) {
    detail::im2col(x.data.data() + i * ci * in_vox, ci, in, out, g, col.data());
    gemm(false, true, co, rows, ovox, S(1),
         gy.data.data() + i * co * ovox, ovox, col.data(), ovox, S(1),
         gw.data.data(), rows);
  }
  return gw;
}

// Adjoint of conv3d_forward in its input; also the forward pass of a
// transposed convolution. z plays the role of y, w is [Cz,Cout,k].
template <typename S>
Tensor<S> conv3d_input_grad(const Tensor<S>& z, const Tensor<S>& w,
                            const ConvGeom& g,
                            const std::array<int64_t, 3>& in_spatial) {
  const int64_t n = z.shape[0], co = z.shape[1], ci = w.shape[1];
  UWGAN_REQUIRE(z.shape[1] == w.shape[0], "conv3d_input_grad channel mismatch");
  const std::array<int64_t, 3> out{z.shape[2], z.shape[3], z.shape[4]};
  const int64_t ovox = out[0] * out[1] * out[2];
  const int64_t rows = ci * g.kernel_count();
  Tensor<S> x({n, ci, in_spatial[0], in_spatial[1], in_spatial[2]});
  std::vector<S> col(static_cast<size_t>(rows * ovox));
  const int64_t in_vox = in_spatial[0] * in_spatial[1] * in_spatial[2];
  for (int64_t i = 0; i < n; ++i) {
    gemm(true, false, rows, ovox, co, S(1), w.data.data(), rows,
         z.data.data() + i * co * ovox, ovox, S(0), col.data(), ovox);
    detail::col2im(col.data(), ci, in_spatial, out, g,
                   x.data.data() + i * ci * in_vox);
  }
  return x;
}

}  // namespace uwgan

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
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "uwgan/autodiff.hpp"
#include "uwgan/rng.hpp"

namespace uwgan::nn {

using ad::Var;

inline std::uint64_t name_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Trainable state of one network: named parameter leaves plus named buffers
// (running statistics, power-iteration vectors) and a step counter.
template <typename S>
class ParameterSet {
 public:
  struct Param {
    std::string name;
    Var<S> var;
    Tensor<S> adam_m, adam_v;
  };
  struct Buffer {
    std::string name;
    std::shared_ptr<Tensor<S>> tensor;
  };

  explicit ParameterSet(std::uint64_t seed = 0) : seed_(seed) {}

  // Gaussian init, std 0.02, keyed by parameter name so construction order
  // does not matter.
  Var<S> add_param(const std::string& name, std::vector<int64_t> shape,
                   bool zero_init = false, S init_std = S(0.02)) {
    Tensor<S> t(shape);
    if (!zero_init) {
      Rng rng(seed_, name_hash(name));
      for (auto& v : t.data) v = static_cast<S>(init_std * rng.normal());
    }
    return add_param_tensor(name, std::move(t));
  }

  Var<S> add_param_tensor(const std::string& name, Tensor<S> t) {
    for (const auto& p : params_)
      UWGAN_REQUIRE(p.name != name, "duplicate parameter name: " + name);
    Param p;
    p.name = name;
    p.adam_m = Tensor<S>::zeros(t.shape);
    p.adam_v = Tensor<S>::zeros(t.shape);
    p.var = Var<S>::leaf(std::move(t));
    params_.push_back(std::move(p));
    return params_.back().var;
  }

  std::shared_ptr<Tensor<S>> add_buffer(const std::string& name, Tensor<S> t) {
    auto sp = std::make_shared<Tensor<S>>(std::move(t));
    buffers_.push_back({name, sp});
    return sp;
  }

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  std::vector<Buffer>& buffers() { return buffers_; }
  const std::vector<Buffer>& buffers() const { return buffers_; }

  std::vector<Var<S>> param_vars() const {
    std::vector<Var<S>> vs;
    for (const auto& p : params_) vs.push_back(p.var);
    return vs;
  }

  int64_t total_parameters() const {
    int64_t n = 0;
    for (const auto& p : params_) n += p.var.value().numel();
    return n;
  }

  bool all_finite() const {
    for (const auto& p : params_)
      if (!p.var.value().all_finite()) return false;
    return true;
  }

  std::uint64_t seed() const { return seed_; }
  int64_t step = 0;

 private:
  std::uint64_t seed_;
  std::vector<Param> params_;
  std::vector<Buffer> buffers_;
};

template <typename S>
struct Adam {
  S lr = S(1e-4);
  S beta1 = S(0.5);
  S beta2 = S(0.9);
  S eps = S(1e-8);

  void step(ParameterSet<S>& ps, const std::vector<Var<S>>& grads) {
    UWGAN_REQUIRE(grads.size() == ps.params().size(), "adam: grad arity");
    ++ps.step;
    const S t = static_cast<S>(ps.step);
    const S c1 = S(1) - std::pow(beta1, t);
    const S c2 = S(1) - std::pow(beta2, t);
    for (size_t i = 0; i < grads.size(); ++i) {
      auto& p = ps.params()[i];
      const auto& g = grads[i].value().data;
      auto& w = p.var.value().data;
      for (size_t k = 0; k < w.size(); ++k) {
        p.adam_m.data[k] = beta1 * p.adam_m.data[k] + (S(1) - beta1) * g[k];
        p.adam_v.data[k] =
            beta2 * p.adam_v.data[k] + (S(1) - beta2) * g[k] * g[k];
        const S mhat = p.adam_m.data[k] / c1;
        const S vhat = p.adam_v.data[k] / c2;
        w[k] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }
};

template <typename S>
struct Conv3d {
  ConvGeom geom;
  Var<S> w, b;
  int64_t in_channels = 0, out_channels = 0;

  static Conv3d create(ParameterSet<S>& ps, const std::string& name,
                       int64_t in_ch, int64_t out_ch, ConvGeom geom) {
    Conv3d c;
    c.geom = geom;
    c.in_channels = in_ch;
    c.out_channels = out_ch;
    c.w = ps.add_param(name + ".w", {out_ch, in_ch, geom.kernel[0],
                                     geom.kernel[1], geom.kernel[2]});
    c.b = ps.add_param(name + ".b", {out_ch}, /*zero_init=*/true);
    return c;
  }

  Var<S> forward(const Var<S>& x) const {
    return ad::add_channel_bias(ad::conv3d(x, w, geom), b);
  }

  Var<S> forward_with(const Var<S>& weight, const Var<S>& x) const {
    return ad::add_channel_bias(ad::conv3d(x, weight, geom), b);
  }
};

template <typename S>
struct ConvTranspose3d {
  ConvGeom geom;
  Var<S> w, b;  // weight layout [in_ch, out_ch, kd, kh, kw]
  int64_t in_channels = 0, out_channels = 0;

  static ConvTranspose3d create(ParameterSet<S>& ps, const std::string& name,
                                int64_t in_ch, int64_t out_ch, ConvGeom geom) {
    ConvTranspose3d c;
    c.geom = geom;
    c.in_channels = in_ch;
    c.out_channels = out_ch;
    c.w = ps.add_param(name + ".w", {in_ch, out_ch, geom.kernel[0],
                                     geom.kernel[1], geom.kernel[2]});
    c.b = ps.add_param(name + ".b", {out_ch}, /*zero_init=*/true);
    return c;
  }

  std::array<int64_t, 3> out_spatial(const std::vector<int64_t>& in_shape) const {
    std::array<int64_t, 3> out{};
    for (int a = 0; a < 3; ++a)
      out[a] = (in_shape[2 + a] - 1) * geom.stride[a] - 2 * geom.pad[a] +
               geom.kernel[a];
    return out;
  }

  Var<S> forward(const Var<S>& x) const {
    return forward_with(w, x);
  }

  Var<S> forward_with(const Var<S>& weight, const Var<S>& x) const {
    return ad::add_channel_bias(
        ad::conv3d_transpose(x, weight, geom, out_spatial(x.shape())), b);
  }
};

template <typename S>
struct BatchNorm3d {
  Var<S> gamma, beta;
  std::shared_ptr<Tensor<S>> running_mean, running_var;
  S momentum = S(0.1);
  S eps = S(1e-5);

  static BatchNorm3d create(ParameterSet<S>& ps, const std::string& name,
                            int64_t channels) {
    BatchNorm3d bn;
    bn.gamma = ps.add_param_tensor(name + ".gamma",
                                   Tensor<S>::full({channels}, S(1)));
    bn.beta = ps.add_param(name + ".beta", {channels}, /*zero_init=*/true);
    bn.running_mean = ps.add_buffer(name + ".running_mean",
                                    Tensor<S>::zeros({channels}));
    bn.running_var = ps.add_buffer(name + ".running_var",
                                   Tensor<S>::full({channels}, S(1)));
    return bn;
  }

  Var<S> forward(const Var<S>& x, bool training) {
    const auto& sh = x.shape();
    const S count = static_cast<S>(x.value().numel() / sh[1]);
    Var<S> mu, var;
    if (training) {
      mu = ad::smul(ad::channel_sum(x), S(1) / count);
      Var<S> xc = ad::sub(x, ad::channel_broadcast(mu, sh));
      var = ad::smul(ad::channel_sum(ad::mul(xc, xc)), S(1) / count);
      for (size_t c = 0; c < running_mean->data.size(); ++c) {
        running_mean->data[c] = (S(1) - momentum) * running_mean->data[c] +
                                momentum * mu.value().data[c];
        running_var->data[c] = (S(1) - momentum) * running_var->data[c] +
                               momentum * var.value().data[c];
      }
      Var<S> inv = ad::reciprocal(ad::sqrt_v(ad::add_const(var, eps)));
      Var<S> xhat = ad::mul(xc, ad::channel_broadcast(inv, sh));
      return ad::add(ad::mul(xhat, ad::channel_broadcast(gamma, sh)),
                     ad::channel_broadcast(beta, sh));
    }
    mu = Var<S>::constant(*running_mean);
    var = Var<S>::constant(*running_var);
    Var<S> xc = ad::sub(x, ad::channel_broadcast(mu, sh));
    Var<S> inv = ad::reciprocal(ad::sqrt_v(ad::add_const(var, eps)));
    Var<S> xhat = ad::mul(xc, ad::channel_broadcast(inv, sh));
    return ad::add(ad::mul(xhat, ad::channel_broadcast(gamma, sh)),
                   ad::channel_broadcast(beta, sh));
  }
};

// Weight reparameterization w / sigma_max(w), sigma estimated by power
// iteration on the [out, rest] matrix view. One iteration per training
// forward; u is a persistent buffer, treated as constant in the graph.
template <typename S>
struct SpectralNorm {
  std::shared_ptr<Tensor<S>> u;

  static SpectralNorm create(ParameterSet<S>& ps, const std::string& name,
                             int64_t rows) {
    SpectralNorm sn;
    Tensor<S> u0({rows});
    Rng rng(ps.seed(), name_hash(name + ".sn_u"));
    for (auto& v : u0.data) v = static_cast<S>(rng.normal());
    sn.u = ps.add_buffer(name + ".sn_u", std::move(u0));
    return sn;
  }

  Var<S> apply(const Var<S>& w, bool training) {
    const auto& wt = w.value();
    const int64_t rows = wt.shape[0];
    const int64_t cols = wt.numel() / rows;
    std::vector<S> v(cols, S(0));
    std::vector<S> un(u->data);
    // v = normalize(W^T u); u = normalize(W v)
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t c = 0; c < cols; ++c)
        v[c] += wt.data[r * cols + c] * un[r];
    normalize(v);
    std::vector<S> u2(rows, S(0));
    for (int64_t r = 0; r < rows; ++r) {
      S acc = 0;
      for (int64_t c = 0; c < cols; ++c) acc += wt.data[r * cols + c] * v[c];
      u2[r] = acc;
    }
    normalize(u2);
    if (training) u->data = u2;
    // sigma = u^T W v as a graph value so gradients flow through W.
    Tensor<S> uv({rows, cols});
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t c = 0; c < cols; ++c) uv.data[r * cols + c] = u2[r] * v[c];
    Var<S> w2 = ad::reshape(w, {rows, cols});
    Var<S> sigma = ad::sum_all(ad::mul(w2, Var<S>::constant(std::move(uv))));
    Var<S> scale = ad::broadcast_all(ad::reciprocal(sigma), {rows, cols});
    return ad::reshape(ad::mul(w2, scale), wt.shape);
  }

 private:
  static void normalize(std::vector<S>& x) {
    S n = 0;
    for (S v : x) n += v * v;
    n = std::sqrt(n) + S(1e-12);
    for (S& v : x) v /= n;
  }
};

template <typename S>
struct Linear {
  Var<S> w, b;  // w: [out, in]

  static Linear create(ParameterSet<S>& ps, const std::string& name,
                       int64_t in_features, int64_t out_features) {
    Linear l;
    l.w = ps.add_param(name + ".w", {out_features, in_features});
    l.b = ps.add_param(name + ".b", {out_features}, /*zero_init=*/true);
    return l;
  }

  Var<S> forward(const Var<S>& x) const {
    return ad::add_channel_bias(ad::matmul(x, w, false, true), b);
  }
};

}  // namespace uwgan::nn

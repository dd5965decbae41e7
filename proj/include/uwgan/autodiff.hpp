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
#include <functional>
#include <memory>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "uwgan/conv_kernels.hpp"
#include "uwgan/tensor.hpp"

// Reverse-mode automatic differentiation over tensors. Every primitive's
// backward rule is itself expressed through primitives, so gradients are
// graph values and can be differentiated again. The WGAN gradient penalty
// relies on this: the penalty contains the critic's input gradient, and its
// parameter gradient needs a second backward pass through that computation.
namespace uwgan::ad {

template <typename S>
class Var;

template <typename S>
struct Node {
  Tensor<S> value;
  bool requires_grad = false;
  std::vector<Var<S>> parents;
  // Maps the upstream cotangent to one cotangent per parent.
  std::function<std::vector<Var<S>>(const Var<S>&)> vjp;
};

inline thread_local bool grad_enabled = true;

struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_enabled) { grad_enabled = false; }
  ~NoGradGuard() { grad_enabled = prev; }
};

template <typename S>
class Var {
 public:
  Var() = default;

  static Var constant(Tensor<S> v) {
    Var x;
    x.node_ = std::make_shared<Node<S>>();
    x.node_->value = std::move(v);
    return x;
  }

  static Var leaf(Tensor<S> v) {
    Var x = constant(std::move(v));
    x.node_->requires_grad = true;
    return x;
  }

  static Var op(Tensor<S> v, std::vector<Var> parents,
                std::function<std::vector<Var>(const Var&)> vjp) {
    Var x;
    x.node_ = std::make_shared<Node<S>>();
    x.node_->value = std::move(v);
    bool needs = false;
    if (grad_enabled) {
      for (const auto& p : parents) needs = needs || p.requires_grad();
    }
    if (needs) {
      x.node_->requires_grad = true;
      x.node_->parents = std::move(parents);
      x.node_->vjp = std::move(vjp);
    }
    return x;
  }

  bool defined() const { return node_ != nullptr; }
  const Tensor<S>& value() const { return node_->value; }
  Tensor<S>& value() { return node_->value; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Node<S>* node() const { return node_.get(); }

  const std::vector<int64_t>& shape() const { return node_->value.shape; }

  Var detach() const { return constant(node_->value); }

 private:
  std::shared_ptr<Node<S>> node_;
};

// ---- elementwise ----

template <typename S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  UWGAN_REQUIRE(a.value().same_shape(b.value()), "add: shape mismatch");
  Tensor<S> y = a.value();
  const auto& bd = b.value().data;
  for (size_t i = 0; i < y.data.size(); ++i) y.data[i] += bd[i];
  return Var<S>::op(std::move(y), {a, b}, [](const Var<S>& gy) {
    return std::vector<Var<S>>{gy, gy};
  });
}

template <typename S>
Var<S> neg(const Var<S>& a) {
  Tensor<S> y = a.value();
  for (auto& v : y.data) v = -v;
  return Var<S>::op(std::move(y), {a}, [](const Var<S>& gy) {
    return std::vector<Var<S>>{neg(gy)};
  });
}

template <typename S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
  UWGAN_REQUIRE(a.value().same_shape(b.value()), "sub: shape mismatch");
  Tensor<S> y = a.value();
  const auto& bd = b.value().data;
  for (size_t i = 0; i < y.data.size(); ++i) y.data[i] -= bd[i];
  return Var<S>::op(std::move(y), {a, b}, [](const Var<S>& gy) {
    return std::vector<Var<S>>{gy, neg(gy)};
  });
}

template <typename S>
Var<S> mul(const Var<S>& a, const Var<S>& b) {
  UWGAN_REQUIRE(a.value().same_shape(b.value()), "mul: shape mismatch");
  Tensor<S> y = a.value();
  const auto& bd = b.value().data;
  for (size_t i = 0; i < y.data.size(); ++i) y.data[i] *= bd[i];
  return Var<S>::op(std::move(y), {a, b}, [a, b](const Var<S>& gy) {
    return std::vector<Var<S>>{mul(gy, b), mul(gy, a)};
  });
}

template <typename S>
Var<S> smul(const Var<S>& a, S c) {
  Tensor<S> y = a.value();
  for (auto& v : y.data) v *= c;
  return Var<S>::op(std::move(y), {a}, [c](const Var<S>& gy) {
    return std::vector<Var<S>>{smul(gy, c)};
  });
}

template <typename S>
Var<S> add_const(const Var<S>& a, S c) {
  Tensor<S> y = a.value();
  for (auto& v : y.data) v += c;
  return Var<S>::op(std::move(y), {a}, [](const Var<S>& gy) {
    return std::vector<Var<S>>{gy};
  });
}

template <typename S>
Var<S> reciprocal(const Var<S>& a) {
  Tensor<S> y = a.value();
  for (auto& v : y.data) v = S(1) / v;
  return Var<S>::op(std::move(y), {a}, [a](const Var<S>& gy) {
    Var<S> inv2 = reciprocal(mul(a, a));
    return std::vector<Var<S>>{neg(mul(gy, inv2))};
  });
}

template <typename S>
Var<S> sqrt_v(const Var<S>& a) {
  Tensor<S> y = a.value();
  for (auto& v : y.data) v = std::sqrt(v);
  return Var<S>::op(std::move(y), {a}, [a](const Var<S>& gy) {
    Var<S> half_inv = smul(reciprocal(sqrt_v(a)), S(0.5));
    return std::vector<Var<S>>{mul(gy, half_inv)};
  });
}

template <typename S>
Var<S> square(const Var<S>& a) {
  return mul(a, a);
}

template <typename S>
Var<S> leaky_relu(const Var<S>& a, S slope) {
  Tensor<S> y = a.value();
  Tensor<S> mask(y.shape);
  for (size_t i = 0; i < y.data.size(); ++i) {
    if (y.data[i] < S(0)) {
      y.data[i] *= slope;
      mask.data[i] = slope;
    } else {
      mask.data[i] = S(1);
    }
  }
  Var<S> m = Var<S>::constant(std::move(mask));
  return Var<S>::op(std::move(y), {a}, [m](const Var<S>& gy) {
    return std::vector<Var<S>>{mul(gy, m)};
  });
}

// ---- reductions and broadcasts ----

template <typename S>
Var<S> broadcast_all(const Var<S>& s, std::vector<int64_t> shape);

template <typename S>
Var<S> sum_all(const Var<S>& a) {
  S acc = 0;
  for (S v : a.value().data) acc += v;
  auto shape = a.shape();
  return Var<S>::op(Tensor<S>::scalar(acc), {a}, [shape](const Var<S>& gy) {
    return std::vector<Var<S>>{broadcast_all(gy, shape)};
  });
}

template <typename S>
Var<S> broadcast_all(const Var<S>& s, std::vector<int64_t> shape) {
  UWGAN_REQUIRE(s.value().numel() == 1, "broadcast_all expects a scalar");
  Tensor<S> y = Tensor<S>::full(shape, s.value().data[0]);
  return Var<S>::op(std::move(y), {s}, [](const Var<S>& gy) {
    return std::vector<Var<S>>{sum_all(gy)};
  });
}

template <typename S>
Var<S> mean_all(const Var<S>& a) {
  return smul(sum_all(a), S(1) / static_cast<S>(a.value().numel()));
}

template <typename S>
Var<S> channel_broadcast(const Var<S>& b, std::vector<int64_t> shape);

// [N,C,...] -> [C]
template <typename S>
Var<S> channel_sum(const Var<S>& a) {
  const auto& sh = a.shape();
  UWGAN_REQUIRE(sh.size() >= 2, "channel_sum expects rank >= 2");
  const int64_t n = sh[0], c = sh[1];
  const int64_t inner = a.value().numel() / (n * c);
  Tensor<S> y({c});
  const S* src = a.value().data.data();
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < c; ++j) {
      S acc = 0;
      for (int64_t k = 0; k < inner; ++k) acc += *src++;
      y.data[j] += acc;
    }
  auto shape = sh;
  return Var<S>::op(std::move(y), {a}, [shape](const Var<S>& gy) {
    return std::vector<Var<S>>{channel_broadcast(gy, shape)};
  });
}

// [C] -> [N,C,...]
template <typename S>
Var<S> channel_broadcast(const Var<S>& b, std::vector<int64_t> shape) {
  const int64_t n = shape[0], c = shape[1];
  UWGAN_REQUIRE(b.value().numel() == c, "channel_broadcast size mismatch");
  Tensor<S> y(shape);
  const int64_t inner = y.numel() / (n * c);
  S* dst = y.data.data();
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < c; ++j) {
      const S v = b.value().data[j];
      for (int64_t k = 0; k < inner; ++k) *dst++ = v;
    }
  return Var<S>::op(std::move(y), {b}, [](const Var<S>& gy) {
    return std::vector<Var<S>>{channel_sum(gy)};
  });
}

template <typename S>
Var<S> item_broadcast(const Var<S>& v, std::vector<int64_t> shape);

// [N,...] -> [N]
template <typename S>
Var<S> item_sum(const Var<S>& a) {
  const auto& sh = a.shape();
  const int64_t n = sh[0];
  const int64_t inner = a.value().numel() / n;
  Tensor<S> y({n});
  const S* src = a.value().data.data();
  for (int64_t i = 0; i < n; ++i) {
    S acc = 0;
    for (int64_t k = 0; k < inner; ++k) acc += *src++;
    y.data[i] = acc;
  }
  auto shape = sh;
  return Var<S>::op(std::move(y), {a}, [shape](const Var<S>& gy) {
    return std::vector<Var<S>>{item_broadcast(gy, shape)};
  });
}

// [N] -> [N,...]
template <typename S>
Var<S> item_broadcast(const Var<S>& v, std::vector<int64_t> shape) {
  const int64_t n = shape[0];
  UWGAN_REQUIRE(v.value().numel() == n, "item_broadcast size mismatch");
  Tensor<S> y(shape);
  const int64_t inner = y.numel() / n;
  S* dst = y.data.data();
  for (int64_t i = 0; i < n; ++i) {
    const S x = v.value().data[i];
    for (int64_t k = 0; k < inner; ++k) *dst++ = x;
  }
  return Var<S>::op(std::move(y), {v}, [](const Var<S>& gy) {
    return std::vector<Var<S>>{item_sum(gy)};
  });
}

template <typename S>
Var<S> item_mean(const Var<S>& a) {
  const int64_t inner = a.value().numel() / a.shape()[0];
  return smul(item_sum(a), S(1) / static_cast<S>(inner));
}

// ---- shape ops ----

template <typename S>
Var<S> reshape(const Var<S>& a, std::vector<int64_t> shape) {
  UWGAN_REQUIRE(Tensor<S>::count(shape) == a.value().numel(),
                "reshape: element count mismatch");
  Tensor<S> y(shape, a.value().data);
  auto prev = a.shape();
  return Var<S>::op(std::move(y), {a}, [prev](const Var<S>& gy) {
    return std::vector<Var<S>>{reshape(gy, prev)};
  });
}

template <typename S>
Var<S> embed_channels(const Var<S>& a, int64_t c0, int64_t c_total);

// Channel range [c0, c1) of an [N,C,...] tensor.
template <typename S>
Var<S> slice_channels(const Var<S>& a, int64_t c0, int64_t c1) {
  const auto& sh = a.shape();
  const int64_t n = sh[0], c = sh[1];
  UWGAN_REQUIRE(0 <= c0 && c0 < c1 && c1 <= c, "slice_channels out of range");
  const int64_t inner = a.value().numel() / (n * c);
  std::vector<int64_t> out_shape = sh;
  out_shape[1] = c1 - c0;
  Tensor<S> y(out_shape);
  for (int64_t i = 0; i < n; ++i) {
    const S* src = a.value().data.data() + (i * c + c0) * inner;
    S* dst = y.data.data() + i * (c1 - c0) * inner;
    std::copy(src, src + (c1 - c0) * inner, dst);
  }
  return Var<S>::op(std::move(y), {a}, [c0, c](const Var<S>& gy) {
    return std::vector<Var<S>>{embed_channels(gy, c0, c)};
  });
}

template <typename S>
Var<S> embed_channels(const Var<S>& a, int64_t c0, int64_t c_total) {
  const auto& sh = a.shape();
  const int64_t n = sh[0], c = sh[1];
  const int64_t inner = a.value().numel() / (n * c);
  std::vector<int64_t> out_shape = sh;
  out_shape[1] = c_total;
  Tensor<S> y(out_shape);
  for (int64_t i = 0; i < n; ++i) {
    const S* src = a.value().data.data() + i * c * inner;
    S* dst = y.data.data() + (i * c_total + c0) * inner;
    std::copy(src, src + c * inner, dst);
  }
  return Var<S>::op(std::move(y), {a}, [c0, c](const Var<S>& gy) {
    return std::vector<Var<S>>{slice_channels(gy, c0, c0 + c)};
  });
}

template <typename S>
Var<S> concat_channels(const std::vector<Var<S>>& parts) {
  UWGAN_REQUIRE(!parts.empty(), "concat_channels: no inputs");
  auto sh = parts[0].shape();
  int64_t c_total = 0;
  std::vector<int64_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(c_total);
    c_total += p.shape()[1];
  }
  sh[1] = c_total;
  Tensor<S> y(sh);
  const int64_t n = sh[0];
  const int64_t inner = y.numel() / (n * c_total);
  for (size_t k = 0; k < parts.size(); ++k) {
    const auto& pv = parts[k].value();
    const int64_t c = pv.shape[1];
    for (int64_t i = 0; i < n; ++i) {
      const S* src = pv.data.data() + i * c * inner;
      S* dst = y.data.data() + (i * c_total + offsets[k]) * inner;
      std::copy(src, src + c * inner, dst);
    }
  }
  std::vector<int64_t> widths;
  for (const auto& p : parts) widths.push_back(p.shape()[1]);
  return Var<S>::op(std::move(y), parts, [offsets, widths](const Var<S>& gy) {
    std::vector<Var<S>> gs;
    for (size_t k = 0; k < offsets.size(); ++k)
      gs.push_back(slice_channels(gy, offsets[k], offsets[k] + widths[k]));
    return gs;
  });
}

// ---- matmul ----

template <typename S>
Var<S> matmul(const Var<S>& a, const Var<S>& b, bool ta = false,
              bool tb = false) {
  const auto& ash = a.shape();
  const auto& bsh = b.shape();
  UWGAN_REQUIRE(ash.size() == 2 && bsh.size() == 2, "matmul expects rank 2");
  const int64_t m = ta ? ash[1] : ash[0];
  const int64_t k = ta ? ash[0] : ash[1];
  const int64_t kb = tb ? bsh[1] : bsh[0];
  const int64_t n = tb ? bsh[0] : bsh[1];
  UWGAN_REQUIRE(k == kb, "matmul inner dim mismatch");
  Tensor<S> y({m, n});
  gemm(ta, tb, m, n, k, S(1), a.value().data.data(), ash[1],
       b.value().data.data(), bsh[1], S(0), y.data.data(), n);
  return Var<S>::op(std::move(y), {a, b}, [a, b, ta, tb](const Var<S>& gy) {
    Var<S> ga = ta ? matmul(b, gy, tb, true) : matmul(gy, b, false, !tb);
    Var<S> gb = tb ? matmul(gy, a, true, ta) : matmul(a, gy, !ta, false);
    return std::vector<Var<S>>{ga, gb};
  });
}

// ---- convolution family (closed under differentiation) ----

template <typename S>
Var<S> conv3d(const Var<S>& x, const Var<S>& w, const ConvGeom& g);

template <typename S>
Var<S> conv3d_transpose(const Var<S>& z, const Var<S>& w, const ConvGeom& g,
                        std::array<int64_t, 3> out_spatial);

template <typename S>
Var<S> conv3d_wgrad(const Var<S>& x, const Var<S>& gy, const ConvGeom& g,
                    std::vector<int64_t> w_shape);

template <typename S>
Var<S> conv3d(const Var<S>& x, const Var<S>& w, const ConvGeom& g) {
  Tensor<S> y = conv3d_forward(x.value(), w.value(), g);
  std::array<int64_t, 3> in{x.shape()[2], x.shape()[3], x.shape()[4]};
  auto w_shape = w.shape();
  return Var<S>::op(std::move(y), {x, w},
                    [x, w, g, in, w_shape](const Var<S>& gy) {
                      return std::vector<Var<S>>{
                          conv3d_transpose(gy, w, g, in),
                          conv3d_wgrad(x, gy, g, w_shape)};
                    });
}

template <typename S>
Var<S> conv3d_transpose(const Var<S>& z, const Var<S>& w, const ConvGeom& g,
                        std::array<int64_t, 3> out_spatial) {
  Tensor<S> y = conv3d_input_grad(z.value(), w.value(), g, out_spatial);
  auto w_shape = w.shape();
  return Var<S>::op(std::move(y), {z, w},
                    [z, w, g, w_shape](const Var<S>& gy) {
                      return std::vector<Var<S>>{
                          conv3d(gy, w, g),
                          conv3d_wgrad(gy, z, g, w_shape)};
                    });
}

template <typename S>
Var<S> conv3d_wgrad(const Var<S>& x, const Var<S>& gy, const ConvGeom& g,
                    std::vector<int64_t> w_shape) {
  Tensor<S> y = conv3d_weight_grad(x.value(), gy.value(), g, w_shape);
  std::array<int64_t, 3> in{x.shape()[2], x.shape()[3], x.shape()[4]};
  return Var<S>::op(std::move(y), {x, gy}, [x, gy, g, in](const Var<S>& gw) {
    return std::vector<Var<S>>{conv3d_transpose(gy, gw, g, in),
                               conv3d(x, gw, g)};
  });
}

// Adds a per-channel bias to an [N,C,...] tensor.
template <typename S>
Var<S> add_channel_bias(const Var<S>& x, const Var<S>& b) {
  return add(x, channel_broadcast(b, x.shape()));
}

// ---- backward driver ----

template <typename S>
std::vector<Var<S>> grad(const Var<S>& output, const std::vector<Var<S>>& wrt) {
  UWGAN_REQUIRE(output.value().numel() == 1,
                "grad: target must be a scalar value");
  // Topological order over the requires-grad subgraph.
  std::vector<Node<S>*> order;
  std::unordered_map<Node<S>*, Var<S>> hold;
  {
    std::unordered_set<Node<S>*> done;
    struct Frame {
      Var<S> var;
      size_t next = 0;
    };
    std::vector<Frame> stack;
    if (output.requires_grad()) stack.push_back({output});
    while (!stack.empty()) {
      Frame& f = stack.back();
      Node<S>* n = f.var.node();
      if (done.count(n)) {
        stack.pop_back();
        continue;
      }
      bool descended = false;
      while (f.next < n->parents.size()) {
        const Var<S>& p = n->parents[f.next++];
        if (p.requires_grad() && !done.count(p.node())) {
          stack.push_back({p});
          descended = true;
          break;
        }
      }
      if (!descended && f.next >= n->parents.size()) {
        done.insert(n);
        order.push_back(n);
        hold.emplace(n, f.var);
        stack.pop_back();
      }
    }
  }

  std::unordered_map<Node<S>*, Var<S>> cot;
  if (output.requires_grad())
    cot.emplace(output.node(), Var<S>::constant(Tensor<S>::scalar(S(1))));

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<S>* n = *it;
    auto ct = cot.find(n);
    if (ct == cot.end() || !n->vjp) continue;
    std::vector<Var<S>> gs = n->vjp(ct->second);
    UWGAN_REQUIRE(gs.size() == n->parents.size(),
                  "vjp returned wrong arity");
    for (size_t i = 0; i < gs.size(); ++i) {
      const Var<S>& p = n->parents[i];
      if (!p.requires_grad()) continue;
      auto pc = cot.find(p.node());
      if (pc == cot.end()) {
        cot.emplace(p.node(), gs[i]);
      } else {
        pc->second = add(pc->second, gs[i]);
      }
    }
  }

  std::vector<Var<S>> out;
  for (const auto& w : wrt) {
    auto it = cot.find(w.node());
    if (it != cot.end()) {
      out.push_back(it->second);
    } else {
      out.push_back(Var<S>::constant(Tensor<S>::zeros(w.shape())));
    }
  }
  return out;
}

}  // namespace uwgan::ad

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

#include <map>
#include <utility>

#include "uwgan/nn.hpp"

namespace uwgan {

using ad::Var;

// Symmetric conv/deconv denoiser. Stride-1 3x3x3 convolutions throughout, so
// output dims always match input dims; the encoder/decoder structure is
// carried by the channel sequence. Short connections add conv layer i's
// activation into deconv layer (L-i) before its activation, and the raw
// input into the final layer.
struct GeneratorSpec {
  std::vector<int64_t> filters{32, 64, 128, 256, 128, 64, 32, 1};
  int64_t in_channels = 1;
  double leaky_slope = 0.2;

  void validate() const {
    UWGAN_REQUIRE(filters.size() >= 2 && filters.size() % 2 == 0,
                  "generator needs an even number of layers");
    const size_t L = filters.size();
    UWGAN_REQUIRE(filters[L - 1] == in_channels,
                  "final filter count must match input channels");
    for (size_t j = L / 2 + 1; j < L; ++j)
      UWGAN_REQUIRE(filters[j - 1] == filters[L - j - 1],
                    "skip-link channel mismatch in filter sequence");
  }
};

template <typename S>
class Generator {
 public:
  Generator(GeneratorSpec spec, std::uint64_t seed)
      : spec_(std::move(spec)), params_(seed) {
    spec_.validate();
    const size_t L = spec_.filters.size();
    int64_t in_ch = spec_.in_channels;
    for (size_t i = 0; i < L; ++i) {
      ConvGeom g;  // 3x3x3, stride 1, pad 1
      layers_.push_back(nn::Conv3d<S>::create(
          params_, "g.conv" + std::to_string(i + 1), in_ch, spec_.filters[i], g));
      if (i + 1 < L)
        bns_.push_back(nn::BatchNorm3d<S>::create(
            params_, "g.bn" + std::to_string(i + 1), spec_.filters[i]));
      in_ch = spec_.filters[i];
    }
  }

  Var<S> forward(const Var<S>& x, bool training) {
    UWGAN_REQUIRE(x.shape().size() == 5 && x.shape()[1] == spec_.in_channels,
                  "generator input shape mismatch");
    const S slope = static_cast<S>(spec_.leaky_slope);
    const size_t L = spec_.filters.size();
    std::vector<Var<S>> acts;  // acts[0] = input, acts[i] = layer i activation
    acts.push_back(x);
    Var<S> h = x;
    for (size_t i = 0; i < L; ++i) {
      Var<S> z = layers_[i].forward(h);
      if (i + 1 < L) z = bns_[i].forward(z, training);
      if (i + 1 > L / 2) z = ad::add(z, acts[L - (i + 1)]);  // short connection
      h = ad::leaky_relu(z, slope);
      acts.push_back(h);
    }
    return h;
  }

  nn::ParameterSet<S>& params() { return params_; }
  const GeneratorSpec& spec() const { return spec_; }

 private:
  GeneratorSpec spec_;
  nn::ParameterSet<S> params_;
  std::vector<nn::Conv3d<S>> layers_;
  std::vector<nn::BatchNorm3d<S>> bns_;
};

// Dense U-Net critic. Five stride-2 spectral-normalized convolutions encode a
// patch down to 1^3 (for 32^3 input), a fully connected head scores the
// flattened bottleneck, and five transposed convolutions decode back to a
// per-voxel map. At every resolution, each layer consumes the concatenation
// of all previously produced same-size feature maps (dense links plus U-Net
// skips under one rule).
struct DiscriminatorSpec {
  std::vector<int64_t> encoder_filters{32, 64, 128, 256, 512};
  int64_t in_channels = 1;
  int64_t patch_size = 32;
  double leaky_slope = 0.2;

  void validate() const {
    UWGAN_REQUIRE(encoder_filters.size() == 5,
                  "discriminator uses exactly 5 downsampling levels");
    UWGAN_REQUIRE(patch_size >= 32 && patch_size % 32 == 0,
                  "discriminator input dims must be divisible by 2^5");
  }
};

// One wiring fact per layer, checkable against the dense-connectivity rule.
struct WiringRecord {
  std::string layer;
  int64_t resolution;
  int64_t in_channels;
  int64_t out_channels;
};

template <typename S>
class Discriminator {
 public:
  Discriminator(DiscriminatorSpec spec, std::uint64_t seed)
      : spec_(std::move(spec)), params_(seed) {
    spec_.validate();
    const auto& f = spec_.encoder_filters;
    // Channel bookkeeping mirrors forward(): channels[res] lists the
    // channel widths of every map registered at that resolution.
    std::map<int64_t, std::vector<int64_t>> channels;
    int64_t res = spec_.patch_size;
    channels[res].push_back(spec_.in_channels);

    auto sum = [](const std::vector<int64_t>& v) {
      int64_t s = 0;
      for (int64_t x : v) s += x;
      return s;
    };
    auto make_sn_conv = [&](const std::string& name, int64_t in, int64_t out,
                            ConvGeom g, int64_t at_res) {
      wiring_.push_back({name, at_res, in, out});
      return SnConv{nn::Conv3d<S>::create(params_, name, in, out, g),
                    nn::SpectralNorm<S>::create(params_, name, out)};
    };

    for (int i = 0; i < 5; ++i) {
      ConvGeom g;
      g.stride = {2, 2, 2};
      downs_.push_back(
          make_sn_conv("d.down" + std::to_string(i + 1), sum(channels[res]),
                       f[i], g, res));
      res /= 2;
      channels[res].push_back(f[i]);
      if (res > 1) {
        ConvGeom g1;
        denses_.push_back(make_sn_conv("d.dense" + std::to_string(i + 1), f[i],
                                       f[i], g1, res));
        channels[res].push_back(f[i]);
      }
    }
    bottleneck_res_ = res;
    const int64_t flat = sum(channels[res]) * res * res * res;
    fc_ = nn::Linear<S>::create(params_, "d.fc", flat, 1);

    for (int j = 0; j < 5; ++j) {
      const int64_t out_ch = j < 4 ? f[3 - j] : f[0];
      ConvGeom g;
      g.kernel = {2, 2, 2};
      g.stride = {2, 2, 2};
      g.pad = {0, 0, 0};
      SnConvT up{nn::ConvTranspose3d<S>::create(
                     params_, "d.up" + std::to_string(j + 1),
                     sum(channels[res]), out_ch, g),
                 nn::SpectralNorm<S>::create(params_, "d.up" + std::to_string(j + 1),
                                             sum(channels[res]))};
      wiring_.push_back({"d.up" + std::to_string(j + 1), res,
                         sum(channels[res]), out_ch});
      ups_.push_back(std::move(up));
      res *= 2;
      channels[res].push_back(out_ch);
      if (res < spec_.patch_size) {
        ConvGeom g1;
        refines_.push_back(make_sn_conv("d.refine" + std::to_string(j + 1),
                                        sum(channels[res]), out_ch, g1, res));
        channels[res].push_back(out_ch);
      }
    }
    ConvGeom g1;
    wiring_.push_back({"d.out", res, sum(channels[res]), 1});
    out_conv_ = nn::Conv3d<S>::create(params_, "d.out", sum(channels[res]), 1, g1);
  }

  // Returns (per-item global scores [N], per-voxel confidence maps
  // [N,1,D,H,W]).
  std::pair<Var<S>, Var<S>> forward(const Var<S>& x, bool training) {
    const auto& sh = x.shape();
    UWGAN_REQUIRE(sh.size() == 5 && sh[1] == spec_.in_channels,
                  "discriminator input shape mismatch");
    UWGAN_REQUIRE(sh[2] == sh[3] && sh[3] == sh[4] && sh[2] == spec_.patch_size,
                  "discriminator input dims must match configured patch size "
                  "(divisible by 2^5)");
    const S slope = static_cast<S>(spec_.leaky_slope);
    std::map<int64_t, std::vector<Var<S>>> maps;
    int64_t res = spec_.patch_size;
    maps[res].push_back(x);

    size_t dense_i = 0;
    for (int i = 0; i < 5; ++i) {
      Var<S> in = cat(maps[res]);
      Var<S> w = downs_[i].sn.apply(downs_[i].conv.w, training);
      Var<S> down = ad::leaky_relu(downs_[i].conv.forward_with(w, in), slope);
      res /= 2;
      maps[res].push_back(down);
      if (res > 1) {
        auto& d = denses_[dense_i++];
        Var<S> wd = d.sn.apply(d.conv.w, training);
        maps[res].push_back(
            ad::leaky_relu(d.conv.forward_with(wd, down), slope));
      }
    }
    Var<S> bottleneck = cat(maps[res]);
    Var<S> flat = ad::reshape(bottleneck,
                              {sh[0], bottleneck.value().numel() / sh[0]});
    Var<S> enc = ad::reshape(fc_.forward(flat), {sh[0]});

    size_t refine_i = 0;
    for (int j = 0; j < 5; ++j) {
      Var<S> in = cat(maps[res]);
      Var<S> w = ups_[j].sn.apply(ups_[j].conv.w, training);
      Var<S> up = ad::leaky_relu(ups_[j].conv.forward_with(w, in), slope);
      res *= 2;
      maps[res].push_back(up);
      if (res < spec_.patch_size) {
        auto& r = refines_[refine_i++];
        Var<S> wr = r.sn.apply(r.conv.w, training);
        maps[res].push_back(
            ad::leaky_relu(r.conv.forward_with(wr, cat(maps[res])), slope));
      }
    }
    Var<S> dec = out_conv_.forward(cat(maps[res]));  // linear output
    return {enc, dec};
  }

  nn::ParameterSet<S>& params() { return params_; }
  const DiscriminatorSpec& spec() const { return spec_; }
  const std::vector<WiringRecord>& wiring() const { return wiring_; }

 private:
  struct SnConv {
    nn::Conv3d<S> conv;
    nn::SpectralNorm<S> sn;
  };
  struct SnConvT {
    nn::ConvTranspose3d<S> conv;
    nn::SpectralNorm<S> sn;
  };

  static Var<S> cat(const std::vector<Var<S>>& vs) {
    return vs.size() == 1 ? vs[0] : ad::concat_channels(vs);
  }

  DiscriminatorSpec spec_;
  nn::ParameterSet<S> params_;
  std::vector<SnConv> downs_, denses_, refines_;
  std::vector<SnConvT> ups_;
  nn::Linear<S> fc_;
  nn::Conv3d<S> out_conv_;
  int64_t bottleneck_res_ = 1;
  std::vector<WiringRecord> wiring_;
};

}  // namespace uwgan

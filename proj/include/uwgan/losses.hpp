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
#include <utility>

#include "uwgan/models.hpp"
#include "uwgan/rng.hpp"

namespace uwgan {

struct LossWeights {
  double lambda_mse = 1.0;
  double lambda_per = 0.1;
  double lambda_d = 0.2;
  double lambda_gp = 10.0;

  void validate() const {
    for (double v : {lambda_mse, lambda_per, lambda_d, lambda_gp})
      UWGAN_REQUIRE(std::isfinite(v) && v >= 0.0,
                    "loss weights must be finite and nonnegative");
  }
};

namespace detail {
inline constexpr std::uint64_t kGpStream = 0x4750ULL;  // "GP"
}

// Per-item critic score: the global head plus the spatial mean of the
// per-voxel map, so both heads feed every scalar objective.
template <typename S>
Var<S> critic_score(const std::pair<Var<S>, Var<S>>& disc_out) {
  return ad::add(disc_out.first, ad::item_mean(disc_out.second));
}

// Mean squared error per voxel.
template <typename S>
Var<S> mse_loss(const Var<S>& generated, const Var<S>& clean) {
  UWGAN_REQUIRE(generated.value().same_shape(clean.value()),
                "mse_loss: shape mismatch");
  return ad::mean_all(ad::square(ad::sub(generated, clean)));
}

// Fixed 2D feature map for the perceptual term. Patches are cut into slices
// along their third axis, the single channel is replicated to the extractor's
// three input channels, and features come from two frozen 3x3 (in-plane)
// convolutions with a ReLU between. Weights are random by default; pre-trained
// filters can be loaded in their place. An identity mode reduces the
// perceptual term to plain MSE for testing.
template <typename S>
class FeatureExtractor {
 public:
  static constexpr int64_t kInChannels = 3;
  static constexpr int64_t kMidChannels = 8;
  static constexpr int64_t kOutChannels = 16;

  static FeatureExtractor identity() { return FeatureExtractor(); }

  static FeatureExtractor random_conv(std::uint64_t seed) {
    FeatureExtractor fe;
    fe.identity_ = false;
    fe.w1_ = gaussian({kMidChannels, kInChannels, 1, 3, 3}, seed, "phi.w1");
    fe.b1_ = Tensor<S>::zeros({kMidChannels});
    fe.w2_ = gaussian({kOutChannels, kMidChannels, 1, 3, 3}, seed, "phi.w2");
    fe.b2_ = Tensor<S>::zeros({kOutChannels});
    return fe;
  }

  // Replaces the frozen filters (e.g. with exported pre-trained weights).
  void load_weights(Tensor<S> w1, Tensor<S> b1, Tensor<S> w2, Tensor<S> b2) {
    UWGAN_REQUIRE(w1.shape.size() == 5 && w2.shape.size() == 5 &&
                      w1.shape[0] == w2.shape[1] &&
                      b1.numel() == w1.shape[0] && b2.numel() == w2.shape[0],
                  "feature extractor weight shapes inconsistent");
    identity_ = false;
    w1_ = std::move(w1);
    b1_ = std::move(b1);
    w2_ = std::move(w2);
    b2_ = std::move(b2);
  }

  // slices: [M, 3, 1, H, W] -> features (identity: unchanged).
  Var<S> features(const Var<S>& slices) const {
    const auto& sh = slices.shape();
    UWGAN_REQUIRE(sh.size() == 5 && sh[1] == kInChannels && sh[2] == 1,
                  "feature extractor expects [M,3,1,H,W] slices");
    if (identity_) return slices;
    UWGAN_REQUIRE(w1_.shape[1] == kInChannels,
                  "feature extractor input arity mismatch");
    ConvGeom g;
    g.kernel = {1, 3, 3};
    g.pad = {0, 1, 1};
    Var<S> h = ad::add_channel_bias(
        ad::conv3d(slices, ad::Var<S>::constant(w1_), g),
        ad::Var<S>::constant(b1_));
    h = ad::leaky_relu(h, S(0));  // plain ReLU
    return ad::add_channel_bias(ad::conv3d(h, ad::Var<S>::constant(w2_), g),
                                ad::Var<S>::constant(b2_));
  }

  bool is_identity() const { return identity_; }
  const Tensor<S>& w1() const { return w1_; }
  const Tensor<S>& w2() const { return w2_; }

 private:
  static Tensor<S> gaussian(std::vector<int64_t> shape, std::uint64_t seed,
                            const std::string& name) {
    Tensor<S> t(std::move(shape));
    Rng rng(seed, nn::name_hash(name));
    for (auto& v : t.data) v = static_cast<S>(0.1 * rng.normal());
    return t;
  }

  bool identity_ = true;
  Tensor<S> w1_, b1_, w2_, b2_;
};

// [N,1,D,H,W] -> [N*D, 3, 1, H, W]: every z-slice becomes an item, the single
// channel replicated three ways. Pure reshape plus channel concat, so
// gradients flow back to the patch.
template <typename S>
Var<S> slices_for_extractor(const Var<S>& batch) {
  const auto& sh = batch.shape();
  UWGAN_REQUIRE(sh.size() == 5 && sh[1] == 1,
                "perceptual loss expects single-channel [N,1,D,H,W] batches");
  Var<S> s = ad::reshape(batch, {sh[0] * sh[2], 1, int64_t{1}, sh[3], sh[4]});
  return ad::concat_channels<S>({s, s, s});
}

// Mean squared distance in feature space over all slices.
template <typename S>
Var<S> perceptual_loss(const FeatureExtractor<S>& extractor,
                       const Var<S>& generated, const Var<S>& clean) {
  UWGAN_REQUIRE(generated.value().same_shape(clean.value()),
                "perceptual_loss: shape mismatch");
  Var<S> fg = extractor.features(slices_for_extractor(generated));
  Var<S> fc = extractor.features(slices_for_extractor(clean));
  return ad::mean_all(ad::square(ad::sub(fg, fc)));
}

// Mean over items of (||d score/d x_hat||_2 - 1)^2 at x_hat = eps*real +
// (1-eps)*fake, eps ~ U[0,1) per item keyed by (seed, step). The score
// functor maps an [N,...] batch to per-item scalars [N]; its input gradient
// is produced in-graph, so the result supports a second backward pass.
template <typename S, typename ScoreFn>
Var<S> gradient_penalty(ScoreFn&& score, const Tensor<S>& real,
                        const Tensor<S>& fake, std::uint64_t seed,
                        std::uint64_t step) {
  UWGAN_REQUIRE(real.same_shape(fake), "gradient_penalty: shape mismatch");
  const int64_t n = real.shape[0];
  const int64_t inner = real.numel() / n;
  Rng rng(seed, detail::kGpStream ^ splitmix64(step));
  Tensor<S> mix(real.shape);
  for (int64_t i = 0; i < n; ++i) {
    const S eps = static_cast<S>(rng.uniform());
    for (int64_t k = 0; k < inner; ++k) {
      const int64_t j = i * inner + k;
      mix.data[j] = eps * real.data[j] + (S(1) - eps) * fake.data[j];
    }
  }
  Var<S> xhat = Var<S>::leaf(std::move(mix));
  // Per-item scores are independent, so the input gradient of their sum is
  // the stack of per-item gradients.
  Var<S> total = ad::sum_all(score(xhat));
  Var<S> g = ad::grad(total, {xhat})[0];
  UWGAN_REQUIRE(g.value().all_finite(),
                "non-finite gradient in gradient penalty");
  Var<S> norm = ad::sqrt_v(ad::item_sum(ad::square(g)));
  return ad::mean_all(ad::square(ad::add_const(norm, S(-1))));
}

template <typename S>
Var<S> gradient_penalty(Discriminator<S>& disc, const Tensor<S>& real,
                        const Tensor<S>& fake, std::uint64_t seed,
                        std::uint64_t step) {
  return gradient_penalty(
      [&disc](const Var<S>& x) {
        // No power-iteration update on the interpolate forward; the real and
        // fake passes own the spectral-norm state.
        return critic_score(disc.forward(x, /*training=*/false));
      },
      real, fake, seed, step);
}

// L_D = E[score(fake)] - E[score(real)] + lambda_gp * gp.
template <typename S>
Var<S> discriminator_loss(const Var<S>& score_real, const Var<S>& score_fake,
                          const Var<S>& gp, const LossWeights& w) {
  w.validate();
  Var<S> l = ad::sub(ad::mean_all(score_fake), ad::mean_all(score_real));
  return ad::add(l, ad::smul(gp, static_cast<S>(w.lambda_gp)));
}

// L_G = lambda_mse*mse + lambda_per*per - lambda_d * E[score(fake)].
template <typename S>
Var<S> generator_loss(const Var<S>& mse, const Var<S>& per,
                      const Var<S>& score_fake, const LossWeights& w) {
  w.validate();
  Var<S> adv = ad::neg(ad::mean_all(score_fake));
  return ad::add(
      ad::add(ad::smul(mse, static_cast<S>(w.lambda_mse)),
              ad::smul(per, static_cast<S>(w.lambda_per))),
      ad::smul(adv, static_cast<S>(w.lambda_d)));
}

}  // namespace uwgan

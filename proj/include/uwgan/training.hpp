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

#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uwgan/checkpoint.hpp"
#include "uwgan/losses.hpp"
#include "uwgan/patching.hpp"

namespace uwgan {

struct TrainConfig {
  double learning_rate = 1e-4;
  int64_t batch_size = 32;
  int64_t epochs = 1;
  int64_t d_steps_per_g_step = 1;
  std::uint64_t seed = 0;
  LossWeights weights;
  ConfigMode mode = ConfigMode::SliceBased;
  int64_t patch_size = 32;
  GeneratorSpec generator;
  DiscriminatorSpec discriminator;

  void validate() const {
    UWGAN_REQUIRE(batch_size >= 1, "batch_size must be >= 1");
    UWGAN_REQUIRE(epochs >= 1, "epochs must be >= 1");
    UWGAN_REQUIRE(d_steps_per_g_step >= 1, "d_steps_per_g_step must be >= 1");
    UWGAN_REQUIRE(learning_rate >= 0.0 && std::isfinite(learning_rate),
                  "learning rate must be finite and >= 0");
    UWGAN_REQUIRE(patch_size >= 1, "patch_size must be >= 1");
    weights.validate();
    generator.validate();
  }
};

// Five-fold (k-fold) subject partition: shuffled once by seed, then cut into
// k contiguous test chunks with the remainder spread over the first folds.
struct CvSplit {
  int fold_id = 0;
  std::vector<std::string> train_subjects;
  std::vector<std::string> test_subjects;
};

namespace detail {
inline constexpr std::uint64_t kSplitStream = 0x4356ULL;    // "CV"
inline constexpr std::uint64_t kShuffleStream = 0x5348ULL;  // "SH"
inline constexpr std::uint64_t kGenSeedTag = 0x47ULL;       // "G"
inline constexpr std::uint64_t kDiscSeedTag = 0x44ULL;      // "D"
}  // namespace detail

inline std::vector<CvSplit> make_splits(std::vector<std::string> subject_ids,
                                        int64_t k, std::uint64_t seed) {
  UWGAN_REQUIRE(k >= 2, "k-fold needs k >= 2");
  UWGAN_REQUIRE(static_cast<int64_t>(subject_ids.size()) >= k,
                "fewer subjects than folds");
  Rng rng(seed, detail::kSplitStream);
  rng.shuffle(subject_ids.begin(), subject_ids.end());
  const int64_t n = static_cast<int64_t>(subject_ids.size());
  const int64_t base = n / k, rem = n % k;
  std::vector<CvSplit> splits;
  int64_t pos = 0;
  for (int64_t f = 0; f < k; ++f) {
    const int64_t size = base + (f < rem ? 1 : 0);
    CvSplit s;
    s.fold_id = static_cast<int>(f);
    s.test_subjects.assign(subject_ids.begin() + pos,
                           subject_ids.begin() + pos + size);
    s.train_subjects.assign(subject_ids.begin(), subject_ids.begin() + pos);
    s.train_subjects.insert(s.train_subjects.end(),
                            subject_ids.begin() + pos + size,
                            subject_ids.end());
    splits.push_back(std::move(s));
    pos += size;
  }
  return splits;
}

template <typename S>
Volume4D denoise_with(Generator<S>& gen, const Volume4D& vol, ConfigMode mode,
                      int64_t patch_size);

// One row per generator step.
struct StepRecord {
  int64_t step = 0;
  double l_mse = 0.0;
  double l_per = 0.0;
  double l_adv = 0.0;
  double l_d = 0.0;
  double gp = 0.0;
};

// Adversarial training driver. Alternates d_steps_per_g_step critic updates
// with one generator update per mini-batch; skips critic work entirely when
// lambda_d = 0 (plain supervised training). Deterministic given (seed,
// config, data) in single-threaded execution, and resumable: shuffles are
// keyed by epoch and gradient-penalty draws by critic step, so a
// save/load/continue trajectory matches an uninterrupted one.
template <typename S>
class Trainer {
 public:
  // (noisy, clean) cubic patch pairs with edge length = cfg.patch_size.
  using Pair = std::pair<Volume3D, Volume3D>;

  explicit Trainer(TrainConfig cfg)
      : cfg_(std::move(cfg)),
        gen_(cfg_.generator, splitmix64(cfg_.seed ^ detail::kGenSeedTag)),
        extractor_(FeatureExtractor<S>::random_conv(cfg_.seed)) {
    cfg_.validate();
    // The critic only exists for adversarial configs; supervised runs
    // (lambda_d = 0) are free of its patch-size divisibility constraint.
    if (cfg_.weights.lambda_d > 0.0)
      disc_.emplace(sync_disc_spec(cfg_),
                    splitmix64(cfg_.seed ^ detail::kDiscSeedTag));
    adam_g_.lr = adam_d_.lr = static_cast<S>(cfg_.learning_rate);
  }

  void train(const std::vector<Pair>& pairs) {
    UWGAN_REQUIRE(!pairs.empty(), "training dataset is empty");
    for (const auto& p : pairs) check_patch(p);
    while (epoch_ < cfg_.epochs) train_epoch(pairs);
  }

  Volume4D denoise(const Volume4D& vol) {
    return uwgan::denoise_with(gen_, vol, cfg_.mode, cfg_.patch_size);
  }

  Volume3D denoise_patch(const Volume3D& patch) {
    ad::NoGradGuard ng;
    Tensor<S> x({1, 1, patch.dims[2], patch.dims[1], patch.dims[0]});
    to_tensor(patch, x.data.data());
    Var<S> y = gen_.forward(Var<S>::constant(std::move(x)), /*training=*/false);
    Volume3D out = Volume3D::make(patch.dims);
    from_tensor(y.value().data.data(), out);
    return out;
  }

  void save(const std::string& path) {
    nlohmann::json extra;
    extra["epoch"] = epoch_;
    extra["seed"] = cfg_.seed;
    nn::ParameterSet<S> empty;
    save_checkpoint(path, gen_.params(), disc_ ? disc_->params() : empty,
                    std::move(extra));
  }

  void load(const std::string& path) {
    nn::ParameterSet<S> empty;
    nlohmann::json extra = load_checkpoint(
        path, gen_.params(), disc_ ? disc_->params() : empty);
    epoch_ = extra.at("epoch").get<int64_t>();
  }

  Generator<S>& generator() { return gen_; }
  Discriminator<S>& discriminator() {
    UWGAN_REQUIRE(disc_.has_value(), "no discriminator in a lambda_d=0 run");
    return *disc_;
  }
  const std::vector<StepRecord>& history() const { return history_; }
  int64_t epoch() const { return epoch_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  static DiscriminatorSpec sync_disc_spec(const TrainConfig& cfg) {
    DiscriminatorSpec d = cfg.discriminator;
    d.patch_size = cfg.patch_size;
    return d;
  }

  void check_patch(const Pair& p) const {
    const int64_t s = cfg_.patch_size;
    const std::array<int64_t, 3> want{s, s, s};
    const bool ok = p.first.dims == want && p.second.dims == want;
    UWGAN_REQUIRE(ok, "patch dims do not match configured patch size");
  }

  // Volume3D is x-fastest (x,y,z); tensors are [.,.,d,h,w] with w fastest, so
  // a patch maps to (d=z, h=y, w=x) with identical linear layout.
  static void to_tensor(const Volume3D& v, S* dst) {
    for (size_t i = 0; i < v.data.size(); ++i) dst[i] = static_cast<S>(v.data[i]);
  }
  static void from_tensor(const S* src, Volume3D& v) {
    for (size_t i = 0; i < v.data.size(); ++i) v.data[i] = static_cast<float>(src[i]);
  }

  Tensor<S> batch_tensor(const std::vector<Pair>& pairs,
                         const std::vector<int64_t>& order, int64_t first,
                         int64_t count, bool noisy) const {
    const int64_t s = cfg_.patch_size;
    Tensor<S> t({count, 1, s, s, s});
    for (int64_t i = 0; i < count; ++i) {
      const Pair& p = pairs[static_cast<size_t>(order[first + i])];
      to_tensor(noisy ? p.first : p.second, t.data.data() + i * s * s * s);
    }
    return t;
  }

  void abort_if_bad(const Var<S>& loss, const std::vector<Var<S>>& grads,
                    const char* component, int64_t step) const {
    bool ok = loss.value().all_finite();
    for (const auto& g : grads) ok = ok && g.value().all_finite();
    UWGAN_REQUIRE(ok, std::string("non-finite ") + component +
                          " loss or gradient at step " + std::to_string(step));
  }

  void train_epoch(const std::vector<Pair>& pairs) {
    const int64_t n = static_cast<int64_t>(pairs.size());
    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(cfg_.seed, detail::kShuffleStream ^ splitmix64(
                           static_cast<std::uint64_t>(epoch_)));
    rng.shuffle(order.begin(), order.end());

    const bool adversarial = cfg_.weights.lambda_d > 0.0;
    for (int64_t first = 0; first < n; first += cfg_.batch_size) {
      const int64_t count = std::min(cfg_.batch_size, n - first);
      Tensor<S> noisy_t = batch_tensor(pairs, order, first, count, true);
      Tensor<S> clean_t = batch_tensor(pairs, order, first, count, false);
      Var<S> noisy = Var<S>::constant(noisy_t);
      Var<S> clean = Var<S>::constant(clean_t);

      double l_d_val = 0.0, gp_val = 0.0;
      if (adversarial) {
        for (int64_t ds = 0; ds < cfg_.d_steps_per_g_step; ++ds) {
          Tensor<S> fake_t;
          {
            ad::NoGradGuard ng;
            fake_t = gen_.forward(noisy, /*training=*/true).value();
          }
          const int64_t d_step = disc_->params().step;
          Var<S> sr = critic_score(disc_->forward(clean, /*training=*/true));
          Var<S> sf = critic_score(
              disc_->forward(Var<S>::constant(fake_t), /*training=*/true));
          Var<S> gp = gradient_penalty(*disc_, clean_t, fake_t, cfg_.seed,
                                       static_cast<std::uint64_t>(d_step));
          Var<S> l_d = discriminator_loss(sr, sf, gp, cfg_.weights);
          auto grads = ad::grad(l_d, disc_->params().param_vars());
          abort_if_bad(l_d, grads, "discriminator", d_step);
          adam_d_.step(disc_->params(), grads);
          UWGAN_REQUIRE(disc_->params().all_finite(),
                        "non-finite discriminator parameter after step " +
                            std::to_string(d_step));
          l_d_val = static_cast<double>(l_d.value().data[0]);
          gp_val = static_cast<double>(gp.value().data[0]);
        }
      }

      const int64_t g_step = gen_.params().step;
      Var<S> fake = gen_.forward(noisy, /*training=*/true);
      Var<S> mse = mse_loss(fake, clean);
      Var<S> per = cfg_.weights.lambda_per > 0.0
                       ? perceptual_loss(extractor_, fake, clean)
                       : Var<S>::constant(Tensor<S>::scalar(S(0)));
      Var<S> score_fake =
          adversarial ? critic_score(disc_->forward(fake, /*training=*/false))
                      : Var<S>::constant(Tensor<S>::zeros({count}));
      Var<S> l_g = generator_loss(mse, per, score_fake, cfg_.weights);
      auto grads = ad::grad(l_g, gen_.params().param_vars());
      abort_if_bad(l_g, grads, "generator", g_step);
      adam_g_.step(gen_.params(), grads);
      UWGAN_REQUIRE(gen_.params().all_finite(),
                    "non-finite generator parameter after step " +
                        std::to_string(g_step));

      StepRecord rec;
      rec.step = g_step + 1;  // 1-based: the step this update completed
      rec.l_mse = static_cast<double>(mse.value().data[0]);
      rec.l_per = static_cast<double>(per.value().data[0]);
      double mean_sf = 0.0;
      for (S v : score_fake.value().data) mean_sf += static_cast<double>(v);
      rec.l_adv = -mean_sf / static_cast<double>(count);
      rec.l_d = l_d_val;
      rec.gp = gp_val;
      history_.push_back(rec);
    }
    ++epoch_;
  }

  TrainConfig cfg_;
  Generator<S> gen_;
  std::optional<Discriminator<S>> disc_;
  FeatureExtractor<S> extractor_;
  nn::Adam<S> adam_g_, adam_d_;
  std::vector<StepRecord> history_;
  int64_t epoch_ = 0;
};

// Inference path: merge -> tile into cubes -> generator per patch (eval
// mode, no gradients) -> reassemble -> unmerge. Output dims = input dims.
template <typename S>
Volume4D denoise_with(Generator<S>& gen, const Volume4D& vol, ConfigMode mode,
                      int64_t patch_size) {
  ad::NoGradGuard ng;
  Volume3D merged = merge(vol, mode);
  PatchSet set = extract_patches(merged, patch_size, patch_size, mode, vol.dims);
  for (Volume3D& p : set.patches) {
    Tensor<S> x({1, 1, patch_size, patch_size, patch_size});
    for (size_t i = 0; i < p.data.size(); ++i)
      x.data[i] = static_cast<S>(p.data[i]);
    Var<S> y = gen.forward(Var<S>::constant(std::move(x)), /*training=*/false);
    for (size_t i = 0; i < p.data.size(); ++i)
      p.data[i] = static_cast<float>(y.value().data[i]);
  }
  Volume3D out = reassemble(set);
  return unmerge(out, mode, vol.dims, vol.voxel_mm, vol.tr_seconds);
}

}  // namespace uwgan

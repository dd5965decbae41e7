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

#include <catch_amalgamated.hpp>

#include <set>

#include "helpers.hpp"
#include "uwgan/training.hpp"

using namespace uwgan;
using uwgan::testing::random_volume;
using uwgan::testing::random_volume3;
using uwgan::testing::TempDir;

namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.patch_size = 16;
  c.generator.filters = {2, 4, 8, 16, 8, 4, 2, 1};
  c.weights.lambda_d = 0.0;  // supervised: no critic
  c.batch_size = 32;
  return c;
}

// Smooth clean patches plus additive noise, all values nonnegative.
std::vector<Trainer<float>::Pair> make_pairs(int64_t n, int64_t s,
                                             std::uint64_t seed) {
  std::vector<Trainer<float>::Pair> pairs;
  Rng rng(seed, 0xDA7A);
  for (int64_t i = 0; i < n; ++i) {
    Volume3D clean = Volume3D::make({s, s, s});
    const double a = rng.uniform(), b = rng.uniform();
    for (int64_t z = 0; z < s; ++z)
      for (int64_t y = 0; y < s; ++y)
        for (int64_t x = 0; x < s; ++x)
          clean.at(x, y, z) = static_cast<float>(
              1.0 + a * std::sin(0.3 * x + b) + 0.5 * b * std::cos(0.4 * (y + z)));
    Volume3D noisy = clean;
    for (auto& v : noisy.data)
      v = std::max(0.0f, v + static_cast<float>(0.2 * rng.normal()));
    pairs.emplace_back(std::move(noisy), std::move(clean));
  }
  return pairs;
}

std::vector<std::string> subjects(int64_t n) {
  std::vector<std::string> ids;
  for (int64_t i = 0; i < n; ++i) ids.push_back("sub-" + std::to_string(i));
  return ids;
}

std::vector<float> flat_params(Generator<float>& g) {
  std::vector<float> all;
  for (const auto& p : g.params().params())
    all.insert(all.end(), p.var.value().data.begin(), p.var.value().data.end());
  return all;
}

}  // namespace

TEST_CASE("k-fold splits partition the cohort with balanced fold sizes") {
  auto splits = make_splits(subjects(10), 5, 1);
  REQUIRE(splits.size() == 5);
  std::set<std::string> seen;
  for (const auto& s : splits) {
    REQUIRE(s.test_subjects.size() == 2);
    REQUIRE(s.train_subjects.size() == 8);
    for (const auto& id : s.test_subjects) {
      REQUIRE(seen.insert(id).second);  // test sets are disjoint
      // No leakage between train and test within a fold.
      REQUIRE(std::find(s.train_subjects.begin(), s.train_subjects.end(), id) ==
              s.train_subjects.end());
    }
  }
  REQUIRE(seen.size() == 10);  // test sets cover the cohort

  // 108 subjects over 5 folds: 22, 22, 22, 21, 21.
  auto big = make_splits(subjects(108), 5, 2);
  std::vector<size_t> sizes;
  for (const auto& s : big) sizes.push_back(s.test_subjects.size());
  REQUIRE(sizes == std::vector<size_t>{22, 22, 22, 21, 21});

  REQUIRE_THROWS(make_splits(subjects(10), 1, 0));
  REQUIRE_THROWS(make_splits(subjects(3), 5, 0));
  // Same seed, same shuffle; different seed, different assignment.
  REQUIRE(make_splits(subjects(20), 4, 7)[0].test_subjects ==
          make_splits(subjects(20), 4, 7)[0].test_subjects);
  REQUIRE(make_splits(subjects(20), 4, 7)[0].test_subjects !=
          make_splits(subjects(20), 4, 8)[0].test_subjects);
}

TEST_CASE("supervised training writes one history row per generator step") {
  TrainConfig c = tiny_config();
  c.epochs = 2;
  Trainer<float> t(c);
  t.train(make_pairs(64, 16, 1));
  // ceil(64 / 32) batches per epoch, two epochs.
  REQUIRE(t.history().size() == 4);
  int64_t prev = 0;
  for (const auto& r : t.history()) {
    REQUIRE(r.step > prev);
    prev = r.step;
    REQUIRE(std::isfinite(r.l_mse));
    REQUIRE(std::isfinite(r.l_per));
    REQUIRE(r.l_d == 0.0);  // no critic in a supervised run
    REQUIRE(r.gp == 0.0);
  }
  REQUIRE(t.epoch() == 2);
  REQUIRE_THROWS(t.discriminator());
}

TEST_CASE("a zero learning rate leaves parameters bitwise unchanged") {
  TrainConfig c = tiny_config();
  c.learning_rate = 0.0;
  Trainer<float> t(c);
  const std::vector<float> before = flat_params(t.generator());
  t.train(make_pairs(32, 16, 2));
  REQUIRE(flat_params(t.generator()) == before);
}

TEST_CASE("training reduces the supervised loss on a small dataset") {
  TrainConfig c = tiny_config();
  c.learning_rate = 1e-3;
  c.epochs = 8;
  c.batch_size = 16;
  Trainer<float> t(c);
  t.train(make_pairs(16, 16, 3));
  REQUIRE(t.history().back().l_mse < t.history().front().l_mse);
}

TEST_CASE("training rejects patches that disagree with the configured size") {
  Trainer<float> t(tiny_config());
  auto pairs = make_pairs(1, 8, 4);
  REQUIRE_THROWS_WITH(t.train(pairs),
                      Catch::Matchers::ContainsSubstring("patch"));
  REQUIRE_THROWS(t.train({}));
}

TEST_CASE("save/load/continue reproduces an uninterrupted run bit-for-bit") {
  TempDir tmp("training_ckpt");
  auto pairs = make_pairs(48, 16, 5);

  TrainConfig c = tiny_config();
  c.learning_rate = 1e-3;
  c.epochs = 3;

  // Uninterrupted reference.
  Trainer<float> full(c);
  full.train(pairs);

  // Interrupted: stop after one epoch, checkpoint, reload, continue.
  TrainConfig c1 = c;
  c1.epochs = 1;
  Trainer<float> first(c1);
  first.train(pairs);
  first.save(tmp.file("ckpt.bin"));

  Trainer<float> resumed(c);
  resumed.load(tmp.file("ckpt.bin"));
  REQUIRE(resumed.epoch() == 1);
  resumed.train(pairs);

  REQUIRE(flat_params(resumed.generator()) == flat_params(full.generator()));
  // The resumed history covers epochs 2..3 and must match the reference tail.
  const auto& h_full = full.history();
  const auto& h_res = resumed.history();
  REQUIRE(h_res.size() == h_full.size() - 2);
  for (size_t i = 0; i < h_res.size(); ++i)
    REQUIRE(h_res[i].l_mse == h_full[i + 2].l_mse);
}

TEST_CASE("an all-zero generator denoises to the identity") {
  TrainConfig c = tiny_config();
  Trainer<float> t(c);
  for (auto& p : t.generator().params().params())
    std::fill(p.var.value().data.begin(), p.var.value().data.end(), 0.0f);
  Volume4D vol = random_volume({16, 16, 4, 3}, 6, 2.0, 3.0);
  for (auto& v : vol.data) v = std::abs(v);  // image intensities: nonnegative
  vol.recompute_intensity_max();
  Volume4D out = t.denoise(vol);
  REQUIRE(out.dims == vol.dims);
  REQUIRE(out.data == vol.data);

  Volume3D patch = random_volume3({16, 16, 16}, 7, 1.0, 2.0);
  for (auto& v : patch.data) v = std::abs(v);
  REQUIRE(t.denoise_patch(patch).data == patch.data);
}

TEST_CASE("denoising preserves shape and is deterministic") {
  TrainConfig c = tiny_config();
  Trainer<float> t(c);
  Volume4D vol = random_volume({16, 16, 5, 2}, 8, 1.0, 2.0);
  Volume4D a = t.denoise(vol);
  Volume4D b = t.denoise(vol);
  REQUIRE(a.dims == vol.dims);
  REQUIRE(a.data == b.data);
  REQUIRE(a.data != vol.data);
}

TEST_CASE("checkpoints reject mismatched models and garbled files") {
  TempDir tmp("training_badckpt");
  TrainConfig c = tiny_config();
  Trainer<float> t(c);
  t.save(tmp.file("ok.bin"));

  TrainConfig other = c;
  other.generator.filters = {4, 8, 16, 32, 16, 8, 4, 1};
  Trainer<float> wrong(other);
  REQUIRE_THROWS(wrong.load(tmp.file("ok.bin")));

  std::ofstream garbled(tmp.file("garbled.bin"), std::ios::binary);
  garbled << "not a checkpoint";
  garbled.close();
  Trainer<float> fresh(c);
  REQUIRE_THROWS(fresh.load(tmp.file("garbled.bin")));
  REQUIRE_THROWS(fresh.load(tmp.file("missing.bin")));
}

TEST_CASE("adversarial training exercises the critic and the penalty") {
  TrainConfig c;
  c.patch_size = 32;
  c.generator.filters = {2, 2, 2, 2, 2, 2, 2, 1};
  c.discriminator.encoder_filters = {2, 2, 2, 2, 2};
  c.batch_size = 2;
  c.epochs = 1;
  c.learning_rate = 1e-4;
  Trainer<float> t(c);
  t.train(make_pairs(2, 32, 9));
  REQUIRE(t.history().size() == 1);
  const StepRecord& r = t.history().front();
  REQUIRE(std::isfinite(r.l_d));
  REQUIRE(std::isfinite(r.gp));
  REQUIRE(std::isfinite(r.l_adv));
  REQUIRE(r.gp != 0.0);
  REQUIRE(t.discriminator().params().total_parameters() > 0);
}

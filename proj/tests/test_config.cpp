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

#include <fstream>

#include "helpers.hpp"
#include "uwgan/config.hpp"
#include "uwgan/report.hpp"

using namespace uwgan;
using nlohmann::json;
using uwgan::testing::random_volume;
using uwgan::testing::TempDir;

TEST_CASE("unknown keys are rejected with the key and section named") {
  REQUIRE_THROWS_WITH(phantom_from_json(json{{"basline", 10.0}}),
                      Catch::Matchers::ContainsSubstring("basline") &&
                          Catch::Matchers::ContainsSubstring("phantom"));
  REQUIRE_THROWS_WITH(train_from_json(json{{"learning_rat", 0.1}}),
                      Catch::Matchers::ContainsSubstring("learning_rat"));
  REQUIRE_THROWS_WITH(rician_from_json(json{{"sigma", 0.09}}),
                      Catch::Matchers::ContainsSubstring("sigma"));
  REQUIRE_THROWS_WITH(glm_from_json(json{{"allpha", 0.05}}),
                      Catch::Matchers::ContainsSubstring("allpha"));
  REQUIRE_THROWS_WITH(
      hrf_from_json(json{{"peak", 2.8}}),
      Catch::Matchers::ContainsSubstring("hrf"));
}

TEST_CASE("phantom config round trips through JSON") {
  PhantomSpec s;
  s.dims = {20, 20, 10};
  s.tr_seconds = 2.0;
  s.on_seconds = 20.0;
  s.off_seconds = 40.0;
  s.cycles = 3;
  s.snr_db = 25.0;
  s.seed = 9;
  s.rois = {{"blob", {10, 10, 5}, 0.8}};
  PhantomSpec back = phantom_from_json(phantom_to_json(s));
  REQUIRE(phantom_to_json(back) == phantom_to_json(s));
  REQUIRE(back.frames() == s.frames());
  REQUIRE(back.rois.size() == 1);
  REQUIRE(back.rois[0].center == std::array<int64_t, 3>{10, 10, 5});
}

TEST_CASE("snr_db accepts the string \"inf\" and rejects other strings") {
  PhantomSpec s = phantom_from_json(json{{"snr_db", "inf"}});
  REQUIRE(std::isinf(s.snr_db));
  REQUIRE(phantom_to_json(s)["snr_db"] == "inf");
  REQUIRE_THROWS(phantom_from_json(json{{"snr_db", "lots"}}));
}

TEST_CASE("train config round trips through JSON") {
  TrainConfig c;
  c.learning_rate = 5e-4;
  c.batch_size = 8;
  c.epochs = 3;
  c.seed = 17;
  c.weights.lambda_d = 0.0;
  c.mode = ConfigMode::TimeBased;
  c.patch_size = 16;
  c.generator.filters = {4, 8, 16, 32, 16, 8, 4, 1};
  TrainConfig back = train_from_json(train_to_json(c));
  REQUIRE(train_to_json(back) == train_to_json(c));
  REQUIRE(back.mode == ConfigMode::TimeBased);
  REQUIRE(back.generator.filters == c.generator.filters);
}

TEST_CASE("defaults apply when sections are empty") {
  TrainConfig c = train_from_json(json::object());
  REQUIRE(c.learning_rate == 1e-4);
  REQUIRE(c.batch_size == 32);
  REQUIRE(c.weights.lambda_gp == 10.0);
  PhantomSpec p = phantom_from_json(json::object());
  REQUIRE(p.dims == std::array<int64_t, 3>{48, 48, 24});
  REQUIRE(rician_from_json(json::object()).delta == 0.09);
  REQUIRE(glm_from_json(json::object()).alpha == 0.05);
}

TEST_CASE("malformed JSON files are reported as errors") {
  TempDir tmp("config");
  {
    std::ofstream f(tmp.file("bad.json"));
    f << "{ not json";
  }
  REQUIRE_THROWS(load_json(tmp.file("bad.json")));
  REQUIRE_THROWS(load_json(tmp.file("missing.json")));
  {
    std::ofstream f(tmp.file("ok.json"));
    f << "{\"alpha\": 0.01}";
  }
  REQUIRE(glm_from_json(load_json(tmp.file("ok.json"))).alpha == 0.01);
}

TEST_CASE("report writers produce well-formed artifacts") {
  TempDir tmp("report");

  std::vector<StepRecord> hist{{1, 0.5, 0.1, -0.2, 1.5, 0.9},
                               {2, 0.4, 0.09, -0.1, 1.2, 0.8}};
  write_history_csv(tmp.file("history.csv"), hist);
  std::ifstream csv(tmp.file("history.csv"));
  std::string header;
  std::getline(csv, header);
  REQUIRE(header == "step,L_MSE,L_Per,L_adv,L_D,GP");
  std::string row;
  std::getline(csv, row);
  REQUIRE(row.substr(0, 6) == "1,0.5,");

  write_quality_csv(tmp.file("quality.csv"),
                    {{"sub-01", {31.2, 0.91}}, {"sub-02", {29.8, 0.88}}});
  std::ifstream q(tmp.file("quality.csv"));
  std::getline(q, header);
  REQUIRE(header == "subject,psnr_db,ssim");

  Volume4D a = random_volume({12, 10, 4, 2}, 1, 5.0);
  Volume4D b = random_volume({12, 10, 4, 2}, 2, 5.0);
  write_slice_panel(tmp.file("panel.png"), {&a, &b});
  std::ifstream png(tmp.file("panel.png"), std::ios::binary);
  unsigned char sig[8];
  png.read(reinterpret_cast<char*>(sig), 8);
  const unsigned char want[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  REQUIRE(std::equal(sig, sig + 8, want));

  write_svg_bars(tmp.file("bars.svg"), {"roi_a", "roi_b"},
                 {{"noisy", {4.0, 2.0}}, {"denoised", {1.0, 0.5}}}, "dev");
  std::ifstream svg(tmp.file("bars.svg"));
  std::string all((std::istreambuf_iterator<char>(svg)),
                  std::istreambuf_iterator<char>());
  REQUIRE(all.find("<svg") == 0);
  REQUIRE(all.find("roi_b") != std::string::npos);
  REQUIRE(all.find("denoised") != std::string::npos);

  nlohmann::json m = make_manifest(json{{"k", 1}}, 42);
  REQUIRE(m["artifact"] == "uwgan");
  REQUIRE(m["rng"] == kRngName);
  REQUIRE(m["seed"] == 42);
  REQUIRE(m.contains("created_at"));

  REQUIRE(format_mean_std({31.25, 0.5}) == "31.250 ± 0.500");
}

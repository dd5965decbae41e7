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

#include <fstream>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "uwgan/glm.hpp"
#include "uwgan/training.hpp"

namespace uwgan {

using nlohmann::json;

// Config is one JSON document with a section per module. Unknown keys are
// hard errors: silent config drift is the main reproducibility hazard.
inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  UWGAN_REQUIRE(j.is_object(), "config section '" + where + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    UWGAN_REQUIRE(ok, "unknown config key '" + key + "' in " + where);
  }
}

inline json load_json(const std::string& path) {
  std::ifstream f(path);
  UWGAN_REQUIRE(f.good(), "cannot open config: " + path);
  try {
    json j;
    f >> j;
    return j;
  } catch (const json::exception& e) {
    fail("malformed JSON in " + path + ": " + e.what());
  }
}

// ---- phantom section ----

inline HrfSpec hrf_from_json(const json& j) {
  check_keys(j,
             {"peak_seconds", "undershoot_seconds", "peak_dispersion",
              "undershoot_dispersion", "undershoot_ratio", "kernel_seconds"},
             "phantom.hrf");
  HrfSpec h;
  h.peak_seconds = j.value("peak_seconds", h.peak_seconds);
  h.undershoot_seconds = j.value("undershoot_seconds", h.undershoot_seconds);
  h.peak_dispersion = j.value("peak_dispersion", h.peak_dispersion);
  h.undershoot_dispersion =
      j.value("undershoot_dispersion", h.undershoot_dispersion);
  h.undershoot_ratio = j.value("undershoot_ratio", h.undershoot_ratio);
  h.kernel_seconds = j.value("kernel_seconds", h.kernel_seconds);
  return h;
}

inline json hrf_to_json(const HrfSpec& h) {
  return json{{"peak_seconds", h.peak_seconds},
              {"undershoot_seconds", h.undershoot_seconds},
              {"peak_dispersion", h.peak_dispersion},
              {"undershoot_dispersion", h.undershoot_dispersion},
              {"undershoot_ratio", h.undershoot_ratio},
              {"kernel_seconds", h.kernel_seconds}};
}

inline PhantomSpec phantom_from_json(const json& j) {
  check_keys(j,
             {"dims", "tr_seconds", "on_seconds", "off_seconds", "cycles",
              "spatial_sigma_voxels", "peak_fraction", "baseline", "rois",
              "hrf", "snr_db", "seed"},
             "phantom");
  PhantomSpec s;
  if (j.contains("dims")) {
    UWGAN_REQUIRE(j["dims"].size() == 3, "phantom.dims must have 3 entries");
    for (int i = 0; i < 3; ++i) s.dims[i] = j["dims"][i].get<int64_t>();
  }
  s.tr_seconds = j.value("tr_seconds", s.tr_seconds);
  s.on_seconds = j.value("on_seconds", s.on_seconds);
  s.off_seconds = j.value("off_seconds", s.off_seconds);
  s.cycles = j.value("cycles", s.cycles);
  s.spatial_sigma_voxels = j.value("spatial_sigma_voxels", s.spatial_sigma_voxels);
  s.peak_fraction = j.value("peak_fraction", s.peak_fraction);
  s.baseline = j.value("baseline", s.baseline);
  if (j.contains("snr_db")) {
    if (j["snr_db"].is_string()) {
      UWGAN_REQUIRE(j["snr_db"] == "inf", "phantom.snr_db: number or \"inf\"");
      s.snr_db = std::numeric_limits<double>::infinity();
    } else {
      s.snr_db = j["snr_db"].get<double>();
    }
  }
  s.seed = j.value("seed", s.seed);
  if (j.contains("hrf")) s.hrf = hrf_from_json(j["hrf"]);
  if (j.contains("rois")) {
    for (const auto& r : j["rois"]) {
      check_keys(r, {"name", "center", "amplitude"}, "phantom.rois[]");
      RoiCenter roi;
      roi.name = r.at("name").get<std::string>();
      UWGAN_REQUIRE(r.at("center").size() == 3, "roi center must have 3 entries");
      for (int i = 0; i < 3; ++i) roi.center[i] = r["center"][i].get<int64_t>();
      roi.amplitude = r.value("amplitude", 1.0);
      s.rois.push_back(std::move(roi));
    }
  }
  s.validate();
  return s;
}

inline json phantom_to_json(const PhantomSpec& s) {
  json j{{"dims", s.dims},
         {"tr_seconds", s.tr_seconds},
         {"on_seconds", s.on_seconds},
         {"off_seconds", s.off_seconds},
         {"cycles", s.cycles},
         {"spatial_sigma_voxels", s.spatial_sigma_voxels},
         {"peak_fraction", s.peak_fraction},
         {"baseline", s.baseline},
         {"hrf", hrf_to_json(s.hrf)},
         {"seed", s.seed}};
  if (std::isinf(s.snr_db))
    j["snr_db"] = "inf";
  else
    j["snr_db"] = s.snr_db;
  j["rois"] = json::array();
  for (const auto& r : s.effective_rois())
    j["rois"].push_back(
        {{"name", r.name}, {"center", r.center}, {"amplitude", r.amplitude}});
  return j;
}

// ---- noise section ----

inline RicianSpec rician_from_json(const json& j) {
  check_keys(j, {"delta", "seed"}, "noise");
  RicianSpec s;
  s.delta = j.value("delta", 0.09);
  s.seed = j.value("seed", std::uint64_t{0});
  return s;
}

// ---- train section ----

inline TrainConfig train_from_json(const json& j) {
  check_keys(j,
             {"learning_rate", "batch_size", "epochs", "d_steps_per_g_step",
              "seed", "lambda_mse", "lambda_per", "lambda_d", "lambda_gp",
              "mode", "patch_size", "generator_filters", "encoder_filters"},
             "train");
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.d_steps_per_g_step = j.value("d_steps_per_g_step", c.d_steps_per_g_step);
  c.seed = j.value("seed", c.seed);
  c.weights.lambda_mse = j.value("lambda_mse", c.weights.lambda_mse);
  c.weights.lambda_per = j.value("lambda_per", c.weights.lambda_per);
  c.weights.lambda_d = j.value("lambda_d", c.weights.lambda_d);
  c.weights.lambda_gp = j.value("lambda_gp", c.weights.lambda_gp);
  if (j.contains("mode"))
    c.mode = config_mode_from_string(j["mode"].get<std::string>());
  c.patch_size = j.value("patch_size", c.patch_size);
  if (j.contains("generator_filters"))
    c.generator.filters = j["generator_filters"].get<std::vector<int64_t>>();
  if (j.contains("encoder_filters"))
    c.discriminator.encoder_filters =
        j["encoder_filters"].get<std::vector<int64_t>>();
  c.validate();
  return c;
}

inline json train_to_json(const TrainConfig& c) {
  return json{{"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"d_steps_per_g_step", c.d_steps_per_g_step},
              {"seed", c.seed},
              {"lambda_mse", c.weights.lambda_mse},
              {"lambda_per", c.weights.lambda_per},
              {"lambda_d", c.weights.lambda_d},
              {"lambda_gp", c.weights.lambda_gp},
              {"mode", to_string(c.mode)},
              {"patch_size", c.patch_size},
              {"generator_filters", c.generator.filters},
              {"encoder_filters", c.discriminator.encoder_filters}};
}

// ---- glm section ----

struct GlmConfig {
  double alpha = 0.05;
};

inline GlmConfig glm_from_json(const json& j) {
  check_keys(j, {"alpha"}, "glm");
  GlmConfig c;
  c.alpha = j.value("alpha", c.alpha);
  UWGAN_REQUIRE(c.alpha > 0.0 && c.alpha < 1.0, "glm.alpha must be in (0,1)");
  return c;
}

}  // namespace uwgan

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

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "uwgan/pipeline.hpp"

namespace {

using nlohmann::json;

json config_or_default(const std::string& path) {
  return path.empty() ? json::object() : uwgan::load_json(path);
}

json section(const json& cfg, const char* name) {
  return cfg.value(name, json::object());
}

// Output root defaults to $UWGAN_OUT, then the working directory.
std::string default_out_root() {
  const char* env = std::getenv("UWGAN_OUT");
  return env != nullptr ? env : ".";
}

std::string stem(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3D adversarial fMRI denoising pipeline"};
  app.require_subcommand(1);

  std::string config_path, in_path, out_path, truth_path, ckpt_path, ref_path;
  std::string dir = default_out_root();
  std::vector<std::string> clean_paths, noisy_paths, test_paths, stage_names;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int64_t subjects_override = 0;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
  };

  // ---- phantom: one synthetic acquisition plus its ground-truth mask ----
  auto* cmd_phantom = app.add_subcommand(
      "phantom", "generate a synthetic task-fMRI volume with known activation");
  add_config(cmd_phantom);
  cmd_phantom->add_option("--out", out_path, "output volume (.nii)")->required();
  cmd_phantom->add_option("--truth", truth_path, "ground-truth mask output");
  cmd_phantom->add_option("--seed", seed, "noise seed override")
      ->each([&](const std::string&) { seed_set = true; });
  cmd_phantom->callback([&] {
    uwgan::PhantomSpec spec =
        uwgan::phantom_from_json(section(config_or_default(config_path),
                                         "phantom"));
    if (seed_set) spec.seed = seed;
    auto [vol, truth] = uwgan::generate_phantom(spec);
    uwgan::save_volume(vol, out_path);
    if (!truth_path.empty()) {
      uwgan::Volume4D mask = uwgan::Volume4D::make(
          {truth.mask.dims[0], truth.mask.dims[1], truth.mask.dims[2], 1});
      mask.data = truth.mask.data;
      mask.recompute_intensity_max();
      uwgan::save_volume(mask, truth_path);
    }
  });

  // ---- simulate: a cohort of clean subjects ----
  auto* cmd_sim = app.add_subcommand(
      "simulate", "generate a cohort of clean phantom subjects");
  add_config(cmd_sim);
  cmd_sim->add_option("--out-dir", dir, "output directory");
  cmd_sim->add_option("--subjects", subjects_override, "cohort size override");
  cmd_sim->callback([&] {
    json cfg = config_or_default(config_path);
    if (subjects_override > 0) cfg["run"]["subjects"] = subjects_override;
    cfg["run"]["stages"] = json::array({"simulate"});
    uwgan::run_experiment(cfg, dir);
  });

  // ---- corrupt: Rician noise at delta * intensity_max ----
  auto* cmd_corrupt =
      app.add_subcommand("corrupt", "apply Rician noise to a volume");
  add_config(cmd_corrupt);
  cmd_corrupt->add_option("--in", in_path, "input volume")->required();
  cmd_corrupt->add_option("--out", out_path, "output volume")->required();
  cmd_corrupt->add_option("--seed", seed, "noise seed override")
      ->each([&](const std::string&) { seed_set = true; });
  cmd_corrupt->callback([&] {
    uwgan::RicianSpec spec =
        uwgan::rician_from_json(section(config_or_default(config_path),
                                        "noise"));
    if (seed_set) spec.seed = seed;
    uwgan::save_volume(uwgan::add_rician(uwgan::load_volume(in_path), spec),
                       out_path);
  });

  // ---- train: patch pairs from (noisy, clean) volume pairs ----
  auto* cmd_train =
      app.add_subcommand("train", "train a denoising model on volume pairs");
  add_config(cmd_train);
  cmd_train->add_option("--clean", clean_paths, "clean volumes")->required();
  cmd_train->add_option("--noisy", noisy_paths, "matching noisy volumes")
      ->required();
  cmd_train->add_option("--out", ckpt_path, "checkpoint output path")
      ->required();
  cmd_train->callback([&] {
    UWGAN_REQUIRE(clean_paths.size() == noisy_paths.size(),
                  "--clean and --noisy counts differ");
    uwgan::TrainConfig cfg =
        uwgan::train_from_json(section(config_or_default(config_path),
                                       "train"));
    std::vector<uwgan::Trainer<float>::Pair> pairs;
    for (size_t i = 0; i < clean_paths.size(); ++i) {
      auto p = uwgan::patch_pairs(uwgan::load_volume(noisy_paths[i]),
                                  uwgan::load_volume(clean_paths[i]), cfg.mode,
                                  cfg.patch_size);
      pairs.insert(pairs.end(), p.begin(), p.end());
    }
    uwgan::Trainer<float> trainer(cfg);
    trainer.train(pairs);
    trainer.save(ckpt_path);
    uwgan::detail::write_json(ckpt_path + ".json", uwgan::train_to_json(cfg));
    uwgan::write_history_csv(ckpt_path + ".history.csv", trainer.history());
  });

  // ---- denoise: run a checkpointed generator over a volume ----
  auto* cmd_denoise =
      app.add_subcommand("denoise", "denoise a volume with a trained model");
  cmd_denoise->add_option("--checkpoint", ckpt_path, "checkpoint path")
      ->required();
  cmd_denoise->add_option("--in", in_path, "noisy volume")->required();
  cmd_denoise->add_option("--out", out_path, "denoised output")->required();
  cmd_denoise->callback([&] {
    // The config snapshot written at train time rebuilds the architecture.
    uwgan::TrainConfig cfg =
        uwgan::train_from_json(uwgan::load_json(ckpt_path + ".json"));
    uwgan::Trainer<float> trainer(cfg);
    trainer.load(ckpt_path);
    uwgan::save_volume(trainer.denoise(uwgan::load_volume(in_path)), out_path);
  });

  // ---- evaluate: PSNR/SSIM against a reference ----
  auto* cmd_eval =
      app.add_subcommand("evaluate", "score volumes against a clean reference");
  cmd_eval->add_option("--reference", ref_path, "clean reference volume")
      ->required();
  cmd_eval->add_option("--test", test_paths, "volumes to score")->required();
  cmd_eval->add_option("--out", out_path, "quality CSV output")->required();
  cmd_eval->callback([&] {
    uwgan::Volume4D ref = uwgan::load_volume(ref_path);
    std::vector<uwgan::SubjectQuality> rows;
    for (const auto& p : test_paths)
      rows.push_back({stem(p), uwgan::quality(ref, uwgan::load_volume(p))});
    uwgan::write_quality_csv(out_path, rows);
  });

  // ---- glm: activation analysis against the phantom design ----
  auto* cmd_glm =
      app.add_subcommand("glm", "voxelwise GLM activation analysis");
  add_config(cmd_glm);
  cmd_glm->add_option("--in", in_path, "4D volume to analyze")->required();
  cmd_glm->add_option("--out", out_path, "GLM report JSON output")->required();
  cmd_glm->callback([&] {
    json cfg = config_or_default(config_path);
    uwgan::PhantomSpec phantom =
        uwgan::phantom_from_json(section(cfg, "phantom"));
    uwgan::GlmConfig gc = uwgan::glm_from_json(section(cfg, "glm"));
    phantom.snr_db = std::numeric_limits<double>::infinity();
    uwgan::GroundTruth truth = uwgan::generate_phantom(phantom).second;
    uwgan::detail::write_json(
        out_path, uwgan::glm_to_json(uwgan::load_volume(in_path), phantom, gc,
                                     truth));
  });

  // ---- report: figures + markdown digest from an existing bundle ----
  auto* cmd_report = app.add_subcommand(
      "report", "render figures and a summary from run artifacts");
  add_config(cmd_report);
  cmd_report->add_option("--dir", dir, "bundle directory");
  cmd_report->callback([&] {
    json cfg = config_or_default(config_path);
    cfg["run"]["stages"] = json::array({"report"});
    uwgan::run_experiment(cfg, dir);
  });

  // ---- run: the full stage graph ----
  auto* cmd_run = app.add_subcommand("run", "execute the configured pipeline");
  cmd_run->add_option("--config", config_path, "JSON config file")->required();
  cmd_run->add_option("--out", dir, "output directory");
  cmd_run->add_option("--stages", stage_names, "stage subset override");
  cmd_run->callback([&] {
    json cfg = uwgan::load_json(config_path);
    if (!stage_names.empty()) cfg["run"]["stages"] = stage_names;
    uwgan::run_experiment(cfg, dir);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

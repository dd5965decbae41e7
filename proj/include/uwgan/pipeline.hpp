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

#ifndef UWGAN_PIPELINE_HPP_
#define UWGAN_PIPELINE_HPP_

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "uwgan/config.hpp"
#include "uwgan/glm.hpp"
#include "uwgan/metrics.hpp"
#include "uwgan/noise.hpp"
#include "uwgan/phantom.hpp"
#include "uwgan/report.hpp"
#include "uwgan/training.hpp"

// The experiment stage graph behind the command-line tool:
//   simulate -> corrupt -> train -> denoise -> evaluate -> glm -> report.
// Every stage reads and writes files under one output directory, so any
// subset of stages can be re-run against existing artifacts.

namespace uwgan {

struct RunConfig {
  int64_t subjects = 1;
  int64_t folds = 1;  // 1: train and test on the full cohort (toy mode)
  std::vector<std::string> stages;  // empty: the full graph
};

inline const std::vector<std::string>& all_stages() {
  static const std::vector<std::string> s{"simulate", "corrupt",  "train",
                                          "denoise",  "evaluate", "glm",
                                          "report"};
  return s;
}

inline RunConfig run_from_json(const json& j) {
  check_keys(j, {"subjects", "folds", "stages"}, "run");
  RunConfig c;
  c.subjects = j.value("subjects", c.subjects);
  c.folds = j.value("folds", c.folds);
  UWGAN_REQUIRE(c.subjects >= 1, "run.subjects must be >= 1");
  UWGAN_REQUIRE(c.folds >= 1 && c.folds <= c.subjects,
                "run.folds must be in [1, subjects]");
  if (j.contains("stages")) {
    for (const auto& s : j["stages"]) {
      const std::string name = s.get<std::string>();
      UWGAN_REQUIRE(std::find(all_stages().begin(), all_stages().end(),
                              name) != all_stages().end(),
                    "unknown stage: " + name);
      c.stages.push_back(name);
    }
    UWGAN_REQUIRE(!c.stages.empty(), "run.stages must not be empty");
  }
  return c;
}

namespace detail {

inline std::string subject_id(int64_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "sub-%03d", static_cast<int>(i));
  return buf;
}

inline std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline void require_artifact(const std::string& path, const char* stage) {
  UWGAN_REQUIRE(std::filesystem::exists(path),
                std::string(stage) + ": missing upstream artifact " + path);
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream f(path);
  UWGAN_REQUIRE(f.good(), "cannot open for writing: " + path);
  f << j.dump(2) << "\n";
  UWGAN_REQUIRE(f.good(), "write failed: " + path);
}

}  // namespace detail

// (noisy, clean) training pairs from one subject, tiled with stride =
// patch size under the configured merge mode.
inline std::vector<std::pair<Volume3D, Volume3D>> patch_pairs(
    const Volume4D& noisy, const Volume4D& clean, ConfigMode mode,
    int64_t patch_size) {
  UWGAN_REQUIRE(noisy.dims == clean.dims, "noisy/clean dims mismatch");
  PatchSet pn = extract_patches(merge(noisy, mode), patch_size, patch_size,
                                mode, noisy.dims);
  PatchSet pc = extract_patches(merge(clean, mode), patch_size, patch_size,
                                mode, clean.dims);
  std::vector<std::pair<Volume3D, Volume3D>> pairs;
  for (size_t i = 0; i < pn.patches.size(); ++i)
    pairs.emplace_back(pn.patches[i], pc.patches[i]);
  return pairs;
}

// Activation analysis of one volume: voxelwise t-map, one-sided threshold at
// alpha, ROI detection scores, and Dice overlap with the ground truth.
inline json glm_to_json(const Volume4D& vol, const PhantomSpec& phantom,
                        const GlmConfig& glm_cfg, const GroundTruth& truth) {
  DesignMatrix design = DesignMatrix::from_phantom(phantom);
  UWGAN_REQUIRE(vol.dims[3] == design.rows(),
                "volume frame count does not match the design");
  Volume3D t_map = fit_glm(vol, design);
  const int64_t dof = design.rows() - 2;
  Volume3D mask = threshold_map(t_map, glm_cfg.alpha, dof);
  const auto rois = phantom.effective_rois();
  GlmReport r = score_rois(mask, truth, rois);
  json out;
  out["alpha"] = glm_cfg.alpha;
  out["dof"] = dof;
  out["threshold"] = t_threshold(glm_cfg.alpha, dof);
  out["dice"] = dice_over_rois(mask, truth.mask, rois);
  out["weighted_deviation"] = r.weighted_deviation;
  out["rois"] = json::array();
  for (const auto& s : r.rois)
    out["rois"].push_back({{"name", s.name},
                           {"pct_significant", s.pct_significant},
                           {"pct_ground_truth", s.pct_ground_truth},
                           {"deviation", s.deviation}});
  return out;
}

// Executes the configured stage subset against `out_dir` and returns the run
// summary. Deterministic given (config, single-threaded execution); only the
// manifest carries a timestamp.
inline json run_experiment(const json& cfg, const std::string& out_dir) {
  check_keys(cfg, {"run", "phantom", "noise", "train", "glm"}, "config");
  const RunConfig run = run_from_json(cfg.value("run", json::object()));
  const PhantomSpec phantom =
      phantom_from_json(cfg.value("phantom", json::object()));
  const RicianSpec noise = rician_from_json(cfg.value("noise", json::object()));
  const TrainConfig train = train_from_json(cfg.value("train", json::object()));
  const GlmConfig glm_cfg = glm_from_json(cfg.value("glm", json::object()));
  const std::vector<std::string>& stages =
      run.stages.empty() ? all_stages() : run.stages;

  std::filesystem::create_directories(out_dir);
  detail::write_json(detail::join(out_dir, "manifest.json"),
                     make_manifest(cfg, train.seed));

  auto enabled = [&](const char* s) {
    return std::find(stages.begin(), stages.end(), s) != stages.end();
  };
  std::vector<std::string> subjects;
  for (int64_t i = 0; i < run.subjects; ++i)
    subjects.push_back(detail::subject_id(i));
  auto clean_path = [&](const std::string& id) {
    return detail::join(out_dir, "clean_" + id + ".nii");
  };
  auto noisy_path = [&](const std::string& id) {
    return detail::join(out_dir, "noisy_" + id + ".nii");
  };
  auto denoised_path = [&](const std::string& id) {
    return detail::join(out_dir, "denoised_" + id + ".nii");
  };

  // Ground truth depends only on the phantom geometry, not on noise seeds.
  GroundTruth truth = generate_phantom([&] {
                        PhantomSpec s = phantom;
                        s.snr_db = std::numeric_limits<double>::infinity();
                        return s;
                      }()).second;

  // ---- simulate: one clean phantom acquisition per subject ----
  if (enabled("simulate")) {
    for (int64_t i = 0; i < run.subjects; ++i) {
      PhantomSpec s = phantom;
      s.seed = phantom.seed + static_cast<std::uint64_t>(i);
      save_volume(generate_phantom(s).first, clean_path(subjects[i]));
    }
  }

  // ---- corrupt: Rician corruption of every clean volume ----
  if (enabled("corrupt")) {
    for (int64_t i = 0; i < run.subjects; ++i) {
      detail::require_artifact(clean_path(subjects[i]), "corrupt");
      Volume4D clean = load_volume(clean_path(subjects[i]));
      RicianSpec spec = noise;
      spec.seed = noise.seed + static_cast<std::uint64_t>(i);
      save_volume(add_rician(clean, spec), noisy_path(subjects[i]));
    }
  }

  // ---- fold layout (shared by train and denoise) ----
  std::vector<CvSplit> splits;
  if (run.folds == 1) {
    CvSplit s;
    s.fold_id = 0;
    s.train_subjects = subjects;
    s.test_subjects = subjects;
    splits.push_back(std::move(s));
  } else {
    splits = make_splits(subjects, run.folds, train.seed);
  }
  auto ckpt_path = [&](int fold) {
    return detail::join(out_dir, "ckpt_fold" + std::to_string(fold) + ".bin");
  };

  // ---- train: one model per fold on that fold's training subjects ----
  if (enabled("train")) {
    for (const CvSplit& split : splits) {
      std::vector<Trainer<float>::Pair> pairs;
      for (const auto& id : split.train_subjects) {
        detail::require_artifact(clean_path(id), "train");
        detail::require_artifact(noisy_path(id), "train");
        auto subject_pairs =
            patch_pairs(load_volume(noisy_path(id)), load_volume(clean_path(id)),
                        train.mode, train.patch_size);
        pairs.insert(pairs.end(), subject_pairs.begin(), subject_pairs.end());
      }
      Trainer<float> trainer(train);
      trainer.train(pairs);
      trainer.save(ckpt_path(split.fold_id));
      // Config snapshot so `denoise` can rebuild the same architecture.
      detail::write_json(ckpt_path(split.fold_id) + ".json",
                         train_to_json(train));
      write_history_csv(detail::join(out_dir, "history_fold" +
                                                  std::to_string(split.fold_id) +
                                                  ".csv"),
                        trainer.history());
    }
  }

  // ---- denoise: each subject through its fold's model ----
  if (enabled("denoise")) {
    for (const CvSplit& split : splits) {
      detail::require_artifact(ckpt_path(split.fold_id), "denoise");
      Trainer<float> trainer(train);
      trainer.load(ckpt_path(split.fold_id));
      for (const auto& id : split.test_subjects) {
        detail::require_artifact(noisy_path(id), "denoise");
        save_volume(trainer.denoise(load_volume(noisy_path(id))),
                    denoised_path(id));
      }
    }
  }

  json summary;
  // ---- evaluate: PSNR/SSIM of noisy and denoised against clean ----
  if (enabled("evaluate")) {
    std::vector<SubjectQuality> rows;
    std::vector<double> psnr_n, ssim_n, psnr_d, ssim_d;
    for (const auto& id : subjects) {
      detail::require_artifact(clean_path(id), "evaluate");
      detail::require_artifact(noisy_path(id), "evaluate");
      detail::require_artifact(denoised_path(id), "evaluate");
      Volume4D clean = load_volume(clean_path(id));
      QualityReport qn = quality(clean, load_volume(noisy_path(id)));
      QualityReport qd = quality(clean, load_volume(denoised_path(id)));
      rows.push_back({id + "/noisy", qn});
      rows.push_back({id + "/denoised", qd});
      psnr_n.push_back(qn.psnr_db);
      ssim_n.push_back(qn.ssim);
      psnr_d.push_back(qd.psnr_db);
      ssim_d.push_back(qd.ssim);
    }
    write_quality_csv(detail::join(out_dir, "quality.csv"), rows);
    auto stats = [](const std::vector<double>& v) {
      CohortStats s = cohort_stats(v);
      return json{{"mean", s.mean},
                  {"stddev", s.stddev},
                  {"display", format_mean_std(s)}};
    };
    summary["quality"] = {{"noisy", {{"psnr_db", stats(psnr_n)},
                                     {"ssim", stats(ssim_n)}}},
                          {"denoised", {{"psnr_db", stats(psnr_d)},
                                        {"ssim", stats(ssim_d)}}}};
  }

  // ---- glm: activation analysis of all three versions per subject ----
  if (enabled("glm")) {
    for (const auto& id : subjects) {
      json g;
      for (const char* kind : {"clean", "noisy", "denoised"}) {
        const std::string path =
            detail::join(out_dir, std::string(kind) + "_" + id + ".nii");
        detail::require_artifact(path, "glm");
        g[kind] = glm_to_json(load_volume(path), phantom, glm_cfg, truth);
      }
      detail::write_json(detail::join(out_dir, "glm_" + id + ".json"), g);
      if (id == subjects.front()) summary["glm"] = g;
    }
  }

  if (!summary.is_null())
    detail::write_json(detail::join(out_dir, "summary.json"), summary);

  // ---- report: static figures and a markdown digest ----
  if (enabled("report")) {
    for (const auto& id : subjects) {
      detail::require_artifact(clean_path(id), "report");
      detail::require_artifact(noisy_path(id), "report");
      detail::require_artifact(denoised_path(id), "report");
      Volume4D clean = load_volume(clean_path(id));
      Volume4D noisy = load_volume(noisy_path(id));
      Volume4D denoised = load_volume(denoised_path(id));
      write_slice_panel(detail::join(out_dir, "panel_" + id + ".png"),
                        {&clean, &noisy, &denoised});
    }
    const std::string glm_file =
        detail::join(out_dir, "glm_" + subjects.front() + ".json");
    detail::require_artifact(glm_file, "report");
    json g = load_json(glm_file);
    std::vector<std::string> labels;
    std::vector<double> dev_noisy, dev_denoised;
    for (const auto& roi : g["noisy"]["rois"]) {
      labels.push_back(roi["name"].get<std::string>());
      dev_noisy.push_back(std::abs(roi["deviation"].get<double>()));
    }
    for (const auto& roi : g["denoised"]["rois"])
      dev_denoised.push_back(std::abs(roi["deviation"].get<double>()));
    write_svg_bars(detail::join(out_dir, "deviations.svg"), labels,
                   {{"noisy", dev_noisy}, {"denoised", dev_denoised}},
                   "per-ROI detection deviation (%)");

    std::ofstream md(detail::join(out_dir, "summary.md"));
    UWGAN_REQUIRE(md.good(), "cannot open for writing: summary.md");
    md << "# Run summary\n\n";
    if (summary.contains("quality")) {
      md << "| volume | PSNR (dB) | SSIM |\n|---|---|---|\n";
      for (const char* kind : {"noisy", "denoised"})
        md << "| " << kind << " | "
           << summary["quality"][kind]["psnr_db"]["display"].get<std::string>()
           << " | "
           << summary["quality"][kind]["ssim"]["display"].get<std::string>()
           << " |\n";
      md << "\n";
    }
    md << "| volume | Dice | weighted deviation (%) |\n|---|---|---|\n";
    for (const char* kind : {"clean", "noisy", "denoised"})
      md << "| " << kind << " | " << g[kind]["dice"].get<double>() << " | "
         << g[kind]["weighted_deviation"].get<double>() << " |\n";
    UWGAN_REQUIRE(md.good(), "write failed: summary.md");
  }

  return summary;
}

}  // namespace uwgan

#endif  // UWGAN_PIPELINE_HPP_

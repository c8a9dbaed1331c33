// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lfnr/checkpoint.hpp"
#include "lfnr/scenes.hpp"

namespace lfnr {

struct TrainConfig {
  std::string data;           // dataset directory
  int views = 2;              // input views per sample (1..6)
  int size = 64;              // square image size
  int n_coarse = 64;
  int n_fine = 32;
  double lr = 1e-4;
  int64_t steps = 1000;
  uint64_t seed = 1;
  int64_t ckpt_every = 500;
  std::string precision = "f32";  // f32 | f64
  int channels = 32;
  int depth = 32;
  int base2d = 64;
  int hidden = 256;
  int baseline_hidden = 64;

  void validate() const;
  ModelConfig model_config() const;
  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::ordered_json& j);
};

// UTF-8 "key = value" lines; '#' starts a comment; strings may be quoted.
TrainConfig parse_config_file(const std::string& path);
// Applies one "key=value" override; unknown key -> config error.
void apply_override(TrainConfig& cfg, const std::string& key,
                    const std::string& value);

struct LoadedScene {
  DatasetManifest manifest;
  std::string dir;
  std::vector<Tensor> images;   // (3,H,W) f32
  std::vector<int> train_idx, test_idx;
};

struct Dataset {
  std::vector<LoadedScene> scenes;
  int height = 0, width = 0;
};

LoadedScene load_scene(const std::string& manifest_path);
// Scans dir/*/manifest.json (sorted by path).
Dataset load_dataset(const std::string& dir);

struct TrainResult {
  std::string final_ckpt;
  int64_t steps_done = 0;
  double last_total = 0;
};

// Per step: sample scene, target, input views; render; losses; backward;
// Adam. Logs one JSON object per line to out_dir/metrics.jsonl; writes
// ckpt_latest.bin every ckpt_every steps and final.ckpt at the end. A
// non-finite loss aborts with NumericError; the cadence checkpoint is the
// retained last-good state. resume_path continues an earlier run exactly.
TrainResult train(const TrainConfig& cfg, const std::string& out_dir,
                  const std::string& resume_path = "");

// Hard cap from the protocol: finetuning never exceeds 10k steps.
int64_t finetune_step_cap(int64_t requested);

// Optimizes all parameters on the scene's first `views` train views only.
TrainResult finetune(const std::string& ckpt_path,
                     const std::string& scene_manifest, int views,
                     int64_t steps, double lr, const std::string& out_dir,
                     uint64_t seed = 1);

struct EvalRow {
  std::string scene;
  int view = 0;
  double psnr = 0, ssim = 0, nearest_psnr = 0;
};

struct EvalReport {
  std::string split;
  std::vector<EvalRow> rows;
  double mean_psnr = 0, mean_ssim = 0, mean_nearest_psnr = 0;
  nlohmann::ordered_json to_json() const;
  std::string table() const;
};

// Renders every `split` view of every scene from the first `views` train
// views (targets inside the train split pick the first `views` other
// views). nearest_psnr scores the closest-camera input view copied as the
// prediction.
EvalReport evaluate(const Model& model, const Dataset& ds,
                    const std::string& split, int views, uint64_t seed);

// JSON-safe metric value: finite numbers pass through, +inf -> "inf".
nlohmann::ordered_json json_metric(double v);

}  // namespace lfnr

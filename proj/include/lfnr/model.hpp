// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lfnr/lightfield.hpp"
#include "lfnr/losses.hpp"
#include "lfnr/renderer.hpp"

namespace lfnr {

struct ModelConfig {
  EncoderConfig enc;        // channels C, depth D, base2d
  int hidden = 256;         // light-field hidden width
  int baseline_hidden = 64; // volumetric decode head width
  int n_coarse = 64;
  int n_fine = 32;
  DType dtype = DType::F32;
  void validate() const;
  LightFieldConfig lf_config() const;
};

struct InputView {
  Tensor image;  // (3,H,W) in [0,1]
  Camera cam;
};

struct RenderOutputs {
  Tensor image;            // (3,H,W)
  RenderedFeatures fine;   // coarse-resolution features/depth/opacity
  Tensor coarse_rgb;       // (3,h,w) = fine.features channels 0..2
  int64_t head_evals = 0;  // light-field rays evaluated in this render
  double feature_ms = 0;   // volume build + composite stages
  double head_ms = 0;      // upsample + ray encode + MLP stage
};

// Full pipeline: encoder, aggregation, renderer, light-field head, plus the
// instrumented volumetric-decode baseline used for the query-count
// comparison (never trained to quality).
struct Model {
  ModelConfig cfg;
  EncoderNet encoder;
  Upsampler upsampler;
  LightFieldNet lf;
  Linear base0, base1;  // baseline decode MLP: feature -> hidden -> 3
  ParamStore params;
  mutable int64_t baseline_evals = 0;

  void init(const ModelConfig& c, uint64_t seed);

  // Per-view feature volumes conditioned on the target pose (Eq. 1 + §3.3).
  std::vector<FeatureVolume> encode_views(const std::vector<InputView>& in,
                                          const Camera& target) const;

  // Resample + aggregate + coarse/fine composite + upsample + per-ray head.
  RenderOutputs decode_lightfield(const std::vector<FeatureVolume>& volumes,
                                  const std::vector<InputView>& in,
                                  const Camera& target, Rng& rng) const;

  RenderOutputs render_image(const std::vector<InputView>& in,
                             const Camera& target, Rng& rng) const;

  // Volumetric baseline: full-resolution ray grid, n_coarse + n_fine
  // stratified samples per ray, per-sample MLP decode, color compositing.
  // Runs without a graph; returns the (3,H,W) image.
  Tensor decode_baseline(const std::vector<FeatureVolume>& volumes,
                         const std::vector<InputView>& in,
                         const Camera& target, Rng& rng,
                         double* wall_ms = nullptr) const;
};

}  // namespace lfnr

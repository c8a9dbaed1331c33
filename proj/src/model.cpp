// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include "lfnr/model.hpp"

#include <algorithm>
#include <chrono>

namespace lfnr {

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

void ModelConfig::validate() const {
  enc.validate();
  if (hidden < 1 || baseline_hidden < 1)
    throw ConfigError("model: hidden widths must be positive");
  if (n_coarse < 1) throw ConfigError("model: n_coarse must be >= 1");
  if (n_fine < 0) throw ConfigError("model: n_fine must be >= 0");
}

LightFieldConfig ModelConfig::lf_config() const {
  LightFieldConfig c;
  c.hidden = hidden;
  c.feature = enc.channels - 2;
  c.encoding = 78;
  return c;
}

void Model::init(const ModelConfig& c, uint64_t seed) {
  c.validate();
  cfg = c;
  Rng rng(seed);
  encoder.init(c.enc, rng, c.dtype);
  upsampler.init(c.enc.channels - 2, rng, c.dtype);
  lf.init(c.lf_config(), rng, c.dtype);
  base0.init(c.enc.channels - 2, c.baseline_hidden, rng, c.dtype);
  base1.init(c.baseline_hidden, 3, rng, c.dtype);
  params = ParamStore{};
  encoder.reg(params, "encoder");
  upsampler.reg(params, "upsampler");
  lf.reg(params, "lightfield");
  base0.reg(params, "baseline.b0");
  base1.reg(params, "baseline.b1");
}

std::vector<FeatureVolume> Model::encode_views(
    const std::vector<InputView>& in, const Camera& target) const {
  if (in.empty()) throw ContractError("render: need at least one input view");
  std::vector<FeatureVolume> volumes;
  volumes.reserve(in.size());
  for (const InputView& view : in)
    volumes.push_back(
        encoder.encode(view.image, relative_pose(view.cam, target)));
  return volumes;
}

RenderOutputs Model::decode_lightfield(
    const std::vector<FeatureVolume>& volumes,
    const std::vector<InputView>& in, const Camera& target, Rng& rng) const {
  int64_t hf = target.height, wf = target.width;
  if (hf % 8 != 0 || wf % 8 != 0)
    throw ConfigError("render: target size must be divisible by 8");
  int64_t h = hf / 4, w = wf / 4;

  auto t0 = std::chrono::steady_clock::now();
  VolumeBuilder build = [&](const DepthGrid& g) {
    std::vector<Tensor> views;
    views.reserve(volumes.size());
    for (size_t i = 0; i < volumes.size(); ++i)
      views.push_back(
          resample_to_target(volumes[i], in[i].cam, target, g, 4));
    return aggregate(views);
  };
  DepthGrid coarse_grid = make_stratified_grid(
      target.z_near, target.z_far, cfg.n_coarse, h, w, rng, cfg.dtype);
  Tensor coarse_volume = build(coarse_grid);
  RenderOutputs out;
  RenderedFeatures coarse_rf =
      composite(coarse_volume, coarse_grid, target.z_near, target.z_far);
  FinePass fine = coarse_to_fine(coarse_volume, coarse_grid, build,
                                 cfg.n_fine, target.z_near, target.z_far,
                                 rng);
  check_finite(fine.rendered.features, "renderer");
  out.feature_ms = ms_since(t0);

  // Head stage: upsample features, encode rays, one MLP pass per pixel.
  t0 = std::chrono::steady_clock::now();
  out.fine = fine.rendered;
  out.fine.full = upsampler(fine.rendered.features);
  out.coarse_rgb = slice(coarse_rf.features, 0, 0, 3);

  int64_t m = hf * wf;
  std::vector<double> enc(static_cast<size_t>(m * 78));
  for (int64_t y = 0; y < hf; ++y)
    for (int64_t x = 0; x < wf; ++x) {
      Vec3 d = ray_direction(target, static_cast<double>(y) + 0.5,
                             static_cast<double>(x) + 0.5);
      PluckerRay ray = plucker_encode(target.T, d);
      double* row = enc.data() + (y * wf + x) * 78;
      for (int i = 0; i < 78; ++i) row[i] = ray.encoded[static_cast<size_t>(i)];
    }
  Tensor enc_t = Tensor::from_vector(enc, {m, 78}, cfg.dtype);
  int64_t f = cfg.enc.channels - 2;
  Tensor feat = transpose2(reshape(out.fine.full, {f, m}));  // (m, F)
  Tensor rgb = lf.forward(enc_t, feat);                      // (m, 3)
  out.image = reshape(transpose2(rgb), {3, hf, wf});
  check_finite(out.image, "lightfield");
  out.head_evals = m;
  out.head_ms = ms_since(t0);

  // Losses read the coarse RGB of the coarse pass; depth/opacity come from
  // the fine pass, which feeds the head.
  return out;
}

RenderOutputs Model::render_image(const std::vector<InputView>& in,
                                  const Camera& target, Rng& rng) const {
  return decode_lightfield(encode_views(in, target), in, target, rng);
}

Tensor Model::decode_baseline(const std::vector<FeatureVolume>& volumes,
                              const std::vector<InputView>& in,
                              const Camera& target, Rng& rng,
                              double* wall_ms) const {
  NoGradGuard ng;
  auto t0 = std::chrono::steady_clock::now();
  int64_t hf = target.height, wf = target.width;
  int n = cfg.n_coarse + cfg.n_fine;
  int64_t f = cfg.enc.channels - 2;
  Tensor image = Tensor::zeros({3, hf, wf}, cfg.dtype);

  const int64_t kRowChunk = 16;
  for (int64_t r0 = 0; r0 < hf; r0 += kRowChunk) {
    int64_t rb = std::min(kRowChunk, hf - r0);
    DepthGrid grid = make_stratified_grid(target.z_near, target.z_far, n, rb,
                                          wf, rng, cfg.dtype);
    std::vector<Tensor> views;
    views.reserve(volumes.size());
    for (size_t i = 0; i < volumes.size(); ++i)
      views.push_back(
          resample_to_target(volumes[i], in[i].cam, target, grid, 1, r0));
    Tensor agg = aggregate(views);  // (C-1, n, rb, wf)
    int64_t m = n * rb * wf;
    Tensor samples =
        transpose2(reshape(slice(agg, 0, 1, f), {f, m}));  // (m, F)
    Tensor colors = sigmoid(base1(relu(base0(samples))));  // (m, 3)
    baseline_evals += m;
    Tensor color_vol = reshape(transpose2(colors), {3, n, rb, wf});
    Tensor vol = concat({slice(agg, 0, 0, 1), color_vol}, 0);  // (4,n,rb,wf)
    RenderedFeatures rf =
        composite(vol, grid, target.z_near, target.z_far);  // rgb (3,rb,wf)
    // Stitch the chunk rows into the output image.
    if (cfg.dtype == DType::F32) {
      float* dst = image.data<float>();
      const float* src = rf.features.data<float>();
      for (int64_t c = 0; c < 3; ++c)
        for (int64_t y = 0; y < rb; ++y)
          for (int64_t x = 0; x < wf; ++x)
            dst[(c * hf + r0 + y) * wf + x] = src[(c * rb + y) * wf + x];
    } else {
      double* dst = image.data<double>();
      const double* src = rf.features.data<double>();
      for (int64_t c = 0; c < 3; ++c)
        for (int64_t y = 0; y < rb; ++y)
          for (int64_t x = 0; x < wf; ++x)
            dst[(c * hf + r0 + y) * wf + x] = src[(c * rb + y) * wf + x];
    }
  }
  if (wall_ms) *wall_ms = ms_since(t0);
  return image;
}

}  // namespace lfnr

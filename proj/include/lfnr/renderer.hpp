// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "lfnr/aggregation.hpp"

namespace lfnr {

// Output of one compositing pass over an aggregated target volume.
// features: (C-2, h, w); channels 0..2 double as the coarse RGB.
// depth is Sum T_z a_z t_z / max(Sum T_z a_z, 1e-8), opacity = Sum T_z a_z.
struct RenderedFeatures {
  Tensor features;
  Tensor depth;
  Tensor opacity;
  Tensor full;  // (C-2, 4h, 4w) after upsample_features; else undefined
};

// Eq. 5-6 over the aggregated volume (C-1, n, h, w) whose channel 0 is the
// density logit (sigma = softplus). delta for the last sample is
// (z_far - z_near) / n.
RenderedFeatures composite(const Tensor& volume, const DepthGrid& depths,
                           double z_near, double z_far);

// Per-ray compositing weights T_z * alpha_z as plain data (n, h, w); feeds
// importance sampling, which must not backprop into the coarse pass.
Tensor composite_weights(const Tensor& volume, const DepthGrid& depths,
                         double z_near, double z_far);

// Builds the aggregated volume (C-1, n, h, w) for a given depth grid.
using VolumeBuilder = std::function<Tensor(const DepthGrid&)>;

struct FinePass {
  RenderedFeatures rendered;
  DepthGrid depths;
};

// Importance-samples n_fine depths from the coarse weights, merges, rebuilds
// the volume via `build`, composites. n_fine = 0 recomposites the coarse
// volume unchanged.
FinePass coarse_to_fine(const Tensor& coarse_volume,
                        const DepthGrid& coarse_depths,
                        const VolumeBuilder& build, int n_fine, double z_near,
                        double z_far, Rng& rng);

// Two (1x1 conv, bilinear 2x) stages, channel count preserved, no
// activation (the outputs feed the light-field head directly).
struct Upsampler {
  Conv2dLayer c1, c2;
  void init(int64_t channels, Rng& rng, DType dt);
  void reg(ParamStore& ps, const std::string& prefix);
  Tensor operator()(const Tensor& coarse) const;
};

}  // namespace lfnr

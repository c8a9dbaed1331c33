// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lfnr/encoder.hpp"
#include "lfnr/geometry.hpp"
#include "lfnr/layers.hpp"

namespace lfnr {

// Sorted per-ray depth lists for an h x w target ray grid. Depths are
// distances along the (unit-direction) ray. Plain data; gradients never
// flow into depths.
struct DepthGrid {
  int64_t n = 0, h = 0, w = 0;
  bool per_ray = false;
  Tensor t;  // (n) shared or (n,h,w) per ray

  double at(int64_t z, int64_t y, int64_t x) const;
  std::vector<double> ray(int64_t y, int64_t x) const;
};

DepthGrid make_shared_depths(const std::vector<double>& depths, int64_t h,
                             int64_t w, DType dt = DType::F32);

// Independent stratified draws per ray, row-major ray order.
DepthGrid make_stratified_grid(double z_near, double z_far, int n, int64_t h,
                               int64_t w, Rng& rng, DType dt = DType::F32);

// Importance-samples n_fine extra depths per ray from `weights` (n,h,w),
// merges with the coarse depths and sorts. Exact duplicates are nudged up
// one ulp so the merged list stays strictly increasing.
DepthGrid merge_importance(const DepthGrid& coarse, const Tensor& weights,
                           int n_fine, double z_near, double z_far, Rng& rng);

// Eq. 3: trilinearly sample the input view's feature volume at the target
// ray points. Ray (y,x) of the grid looks through continuous image
// coordinate (block*(y+row0)+block/2, block*x+block/2) of the target
// camera; block=4 gives the H/4 feature grid, block=1 full resolution.
// Out-of-frustum and behind-camera points sample as zeros. Differentiable
// into the volume. Output (C, n, h, w).
Tensor resample_to_target(const FeatureVolume& volume,
                          const Camera& input_cam, const Camera& target_cam,
                          const DepthGrid& depths, int block = 4,
                          int64_t row0 = 0);

// Eq. 4: softmax over the views' confidence channel 0 weights the payload
// channels. Output (C-1, n, h, w).
Tensor aggregate(const std::vector<Tensor>& views);

}  // namespace lfnr

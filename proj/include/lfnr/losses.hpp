// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lfnr/ops.hpp"

namespace lfnr {

// Graph-attached scalar terms plus plain double values for logging. The
// double total is fine_v + coarse_rgb_v + depth_smooth_v in double
// arithmetic, so the logged identity holds exactly.
struct LossReport {
  Tensor fine, coarse_rgb, depth_smooth, total;
  double fine_v = 0, coarse_rgb_v = 0, depth_smooth_v = 0, total_v = 0;
};

// Eq. 10: mean squared error over all pixels and channels.
Tensor loss_fine(const Tensor& pred, const Tensor& gt);

// Eq. 11: MSE between the coarse RGB channels and the 4x4 box-downsampled
// ground truth.
Tensor loss_coarse_rgb(const Tensor& coarse_rgb, const Tensor& gt_small);

// Eq. 12: edge-aware depth smoothness. Forward differences; weights
// exp(-||dI||_2) from the downsampled gt (treated as data); terms whose two
// endpoint pixels both have opacity > 1e-3 count; mean over valid terms.
// `opacity` is consumed as data (detached).
Tensor loss_depth_smooth(const Tensor& depth, const Tensor& gt_small,
                         const Tensor& opacity);

// Eq. 9 with unit weights. coarse_rgb: channels 0..2 of the coarse pass.
LossReport compute_losses(const Tensor& pred, const Tensor& gt,
                          const Tensor& coarse_rgb, const Tensor& depth,
                          const Tensor& opacity, const Tensor& gt_small);

}  // namespace lfnr

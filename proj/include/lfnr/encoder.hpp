// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>

#include "lfnr/geometry.hpp"
#include "lfnr/layers.hpp"

namespace lfnr {

struct EncoderConfig {
  int channels = 32;  // C: confidence + density + RGB + features
  int depth = 32;     // D: volume depth resolution
  int base2d = 64;    // first 2D trunk width; image branch gets base2d-12
  void validate() const;
};

// C-channel feature volume over the input view's NDC frustum.
// Channel map (single source of truth):
//   channel 0           confidence logit W_i
//   payload channel 0   (= channel 1) density logit sigma
//   payload channels 1..3  coarse RGB
//   payload channels 4..   generic features
struct FeatureVolume {
  Tensor data;  // (C, D, H/4, W/4)
};

// Rotation R_i^T R_t (row-major, 9) and translation R_i^T (T_t - T_i) (3):
// the target pose expressed in the input camera frame.
std::array<double, 12> relative_pose(const Camera& input_cam,
                                     const Camera& target_cam);

// Network E: image + broadcast relative pose -> feature volume.
// 2D trunk (three stride-2 stages, one transpose-up), 1x1 chain to C*D
// channels, reshape, 3D stage with one down/up pair. No normalization
// layers; relu after every conv except the final residual block.
struct EncoderNet {
  EncoderConfig cfg;
  DType dtype = DType::F32;

  Conv2dLayer img1x1, pose1x1, in1x1;
  ResBlock2d rb0a, rb0b;
  Conv2dLayer down1;
  ResBlock2d rb1;
  Conv2dLayer down2;
  ResBlock2d rb2;
  Conv2dLayer down3;
  ResBlock2d rb3;
  ConvT2dLayer up1;
  ResBlock2d rb4a, rb4b;
  Conv2dLayer to3d_a, to3d_b, to3d_c;
  Conv3dLayer v1x1;
  ResBlock3d vrb0a, vrb0b;
  Conv3dLayer vdown;
  ResBlock3d vrb1a, vrb1b;
  ConvT3dLayer vup;
  ResBlock3d vrb2a, vrb2b;

  void init(const EncoderConfig& c, Rng& rng, DType dt);
  void reg(ParamStore& ps, const std::string& prefix);

  // image: (3,H,W) in [0,1], H and W divisible by 8. zero_pose swaps the
  // pose channels for zeros (pose-free ablation).
  FeatureVolume encode(const Tensor& image, const std::array<double, 12>& pose,
                       bool zero_pose = false) const;
};

}  // namespace lfnr

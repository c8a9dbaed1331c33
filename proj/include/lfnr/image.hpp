// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "lfnr/tensor.hpp"

namespace lfnr {

// Images are (3,H,W) f32 tensors with values in [0,1]. PNG storage is
// 8-bit RGB; losses and metrics run on the floats recovered after load.
Tensor load_png(const std::string& path);
void save_png(const std::string& path, const Tensor& image);

// 4x4 box average, (3,H,W) -> (3,H/4,W/4). Plain data, no graph.
Tensor box_downsample4(const Tensor& image);

// Normalizes to [0,1] over the tensor's range and replicates to 3 channels;
// for depth/opacity visualization dumps.
Tensor grayscale_visual(const Tensor& map);

}  // namespace lfnr

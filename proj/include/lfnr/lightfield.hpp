// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lfnr/layers.hpp"

namespace lfnr {

struct LightFieldConfig {
  int hidden = 256;    // width of LR_0..LR_6
  int feature = 30;    // per-pixel feature width (C-2)
  int encoding = 78;   // Plucker positional encoding width
  void validate() const;
};

// The light-field MLP: LR_0 = relu(linear(feature)); LR_1 = relu(linear(PE));
// LR_{k+1} = relu(linear(LR_k * LR_0)) for k = 1..5; color =
// sigmoid(linear(LR_6)). One evaluation per ray; `evals` counts rays.
struct LightFieldNet {
  LightFieldConfig cfg;
  Linear lr0, lr1, lr2, lr3, lr4, lr5, lr6, out;
  mutable int64_t evals = 0;

  void init(const LightFieldConfig& c, Rng& rng, DType dt);
  void reg(ParamStore& ps, const std::string& prefix);

  // encoded: (M, encoding); feature: (M, feature) -> (M, 3) in (0,1).
  Tensor forward(const Tensor& encoded, const Tensor& feature) const;
};

}  // namespace lfnr

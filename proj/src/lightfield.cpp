// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include "lfnr/lightfield.hpp"

namespace lfnr {

void LightFieldConfig::validate() const {
  if (hidden < 1 || feature < 1 || encoding < 1)
    throw ConfigError("lightfield: widths must be positive");
}

void LightFieldNet::init(const LightFieldConfig& c, Rng& rng, DType dt) {
  c.validate();
  cfg = c;
  lr0.init(c.feature, c.hidden, rng, dt);
  lr1.init(c.encoding, c.hidden, rng, dt);
  lr2.init(c.hidden, c.hidden, rng, dt);
  lr3.init(c.hidden, c.hidden, rng, dt);
  lr4.init(c.hidden, c.hidden, rng, dt);
  lr5.init(c.hidden, c.hidden, rng, dt);
  lr6.init(c.hidden, c.hidden, rng, dt);
  out.init(c.hidden, 3, rng, dt);
}

void LightFieldNet::reg(ParamStore& ps, const std::string& p) {
  lr0.reg(ps, p + ".lr0");
  lr1.reg(ps, p + ".lr1");
  lr2.reg(ps, p + ".lr2");
  lr3.reg(ps, p + ".lr3");
  lr4.reg(ps, p + ".lr4");
  lr5.reg(ps, p + ".lr5");
  lr6.reg(ps, p + ".lr6");
  out.reg(ps, p + ".out");
}

Tensor LightFieldNet::forward(const Tensor& encoded,
                              const Tensor& feature) const {
  if (encoded.ndim() != 2 || feature.ndim() != 2 ||
      encoded.dim(0) != feature.dim(0))
    throw ShapeError("lf_forward: batch shapes disagree");
  if (encoded.dim(1) != cfg.encoding || feature.dim(1) != cfg.feature)
    throw ConfigError("lf_forward: width mismatch (expected encoding " +
                      std::to_string(cfg.encoding) + ", feature " +
                      std::to_string(cfg.feature) + ")");
  Tensor mod = relu(lr0(feature));
  Tensor a = relu(lr1(encoded));
  a = relu(lr2(mul(a, mod)));
  a = relu(lr3(mul(a, mod)));
  a = relu(lr4(mul(a, mod)));
  a = relu(lr5(mul(a, mod)));
  a = relu(lr6(mul(a, mod)));
  evals += encoded.dim(0);
  return sigmoid(out(a));
}

}  // namespace lfnr

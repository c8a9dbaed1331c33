// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include "lfnr/encoder.hpp"

namespace lfnr {

void EncoderConfig::validate() const {
  if (channels < 5)
    throw ConfigError("encoder: channels must be >= 5 (confidence + density "
                      "+ RGB at minimum)");
  if (depth < 2 || depth % 2 != 0)
    throw ConfigError("encoder: depth must be even and >= 2");
  if (base2d <= 12)
    throw ConfigError("encoder: base2d must exceed the 12 pose channels");
}

std::array<double, 12> relative_pose(const Camera& input_cam,
                                     const Camera& target_cam) {
  input_cam.validate();
  target_cam.validate();
  Mat3 rel = input_cam.R.transpose() * target_cam.R;
  Vec3 t = input_cam.R.transpose() * (target_cam.T - input_cam.T);
  std::array<double, 12> out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out[static_cast<size_t>(r * 3 + c)] = rel(r, c);
  for (int i = 0; i < 3; ++i) out[static_cast<size_t>(9 + i)] = t[i];
  return out;
}

void EncoderNet::init(const EncoderConfig& c, Rng& rng, DType dt) {
  c.validate();
  cfg = c;
  dtype = dt;
  int64_t b = c.base2d, ch = c.channels, cd = int64_t{1} * c.channels * c.depth;
  img1x1.init(3, b - 12, 1, 1, 0, rng, dt);
  pose1x1.init(12, 12, 1, 1, 0, rng, dt);
  in1x1.init(b, b, 1, 1, 0, rng, dt);
  rb0a.init(b, rng, dt);
  rb0b.init(b, rng, dt);
  down1.init(b, 2 * b, 4, 2, 1, rng, dt);
  rb1.init(2 * b, rng, dt);
  down2.init(2 * b, 2 * b, 4, 2, 1, rng, dt);
  rb2.init(2 * b, rng, dt);
  down3.init(2 * b, 4 * b, 4, 2, 1, rng, dt);
  rb3.init(4 * b, rng, dt);
  up1.init(4 * b, 2 * b, 4, 2, 1, rng, dt);
  rb4a.init(2 * b, rng, dt);
  rb4b.init(2 * b, rng, dt);
  to3d_a.init(2 * b, 4 * b, 1, 1, 0, rng, dt);
  to3d_b.init(4 * b, 8 * b, 1, 1, 0, rng, dt);
  to3d_c.init(8 * b, cd, 1, 1, 0, rng, dt);
  v1x1.init(ch, ch, 1, 1, 0, rng, dt);
  vrb0a.init(ch, rng, dt);
  vrb0b.init(ch, rng, dt);
  vdown.init(ch, 2 * ch, 4, 2, 1, rng, dt);
  vrb1a.init(2 * ch, rng, dt);
  vrb1b.init(2 * ch, rng, dt);
  vup.init(2 * ch, ch, 4, 2, 1, rng, dt);
  vrb2a.init(ch, rng, dt);
  vrb2b.init(ch, rng, dt);
  vrb2b.trailing_relu = false;  // confidence/density logits stay signed
}

void EncoderNet::reg(ParamStore& ps, const std::string& p) {
  img1x1.reg(ps, p + ".img1x1");
  pose1x1.reg(ps, p + ".pose1x1");
  in1x1.reg(ps, p + ".in1x1");
  rb0a.reg(ps, p + ".rb0a");
  rb0b.reg(ps, p + ".rb0b");
  down1.reg(ps, p + ".down1");
  rb1.reg(ps, p + ".rb1");
  down2.reg(ps, p + ".down2");
  rb2.reg(ps, p + ".rb2");
  down3.reg(ps, p + ".down3");
  rb3.reg(ps, p + ".rb3");
  up1.reg(ps, p + ".up1");
  rb4a.reg(ps, p + ".rb4a");
  rb4b.reg(ps, p + ".rb4b");
  to3d_a.reg(ps, p + ".to3d_a");
  to3d_b.reg(ps, p + ".to3d_b");
  to3d_c.reg(ps, p + ".to3d_c");
  v1x1.reg(ps, p + ".v1x1");
  vrb0a.reg(ps, p + ".vrb0a");
  vrb0b.reg(ps, p + ".vrb0b");
  vdown.reg(ps, p + ".vdown");
  vrb1a.reg(ps, p + ".vrb1a");
  vrb1b.reg(ps, p + ".vrb1b");
  vup.reg(ps, p + ".vup");
  vrb2a.reg(ps, p + ".vrb2a");
  vrb2b.reg(ps, p + ".vrb2b");
}

FeatureVolume EncoderNet::encode(const Tensor& image,
                                 const std::array<double, 12>& pose,
                                 bool zero_pose) const {
  if (image.ndim() != 3 || image.dim(0) != 3)
    throw ShapeError("encode: expected (3,H,W), got " +
                     shape_str(image.shape()));
  int64_t h = image.dim(1), w = image.dim(2);
  if (h % 8 != 0 || w % 8 != 0)
    throw ConfigError("encode: H and W must be divisible by 8");
  Tensor img = image.dtype() == dtype ? image : image.to(dtype);

  std::vector<double> pv(pose.begin(), pose.end());
  if (zero_pose) pv.assign(12, 0.0);
  Tensor pose_vec = Tensor::from_vector(pv, {12}, dtype);
  Tensor pose_img = broadcast_hw(pose_vec, h, w);

  Tensor a = relu(img1x1(img));
  Tensor p = relu(pose1x1(pose_img));
  Tensor x = concat({a, p}, 0);
  x = relu(in1x1(x));
  x = rb0b(rb0a(x));
  x = relu(down1(x));
  x = rb1(x);
  x = relu(down2(x));
  x = rb2(x);
  x = relu(down3(x));
  x = rb3(x);
  x = relu(up1(x));
  x = rb4b(rb4a(x));
  x = relu(to3d_a(x));
  x = relu(to3d_b(x));
  x = relu(to3d_c(x));
  check_finite(x, "encoder.2d");

  x = reshape(x, {cfg.channels, cfg.depth, h / 4, w / 4});
  x = relu(v1x1(x));
  x = vrb0b(vrb0a(x));
  x = relu(vdown(x));
  x = vrb1b(vrb1a(x));
  x = relu(vup(x));
  x = vrb2b(vrb2a(x));
  check_finite(x, "encoder.3d");
  return FeatureVolume{x};
}

}  // namespace lfnr

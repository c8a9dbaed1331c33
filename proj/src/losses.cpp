// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include "lfnr/losses.hpp"

#include <cmath>

namespace lfnr {

namespace {

Tensor mse(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError("mse: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  Tensor d = sub(a, b);
  return mean_all(mul(d, d));
}

}  // namespace

Tensor loss_fine(const Tensor& pred, const Tensor& gt) {
  return mse(pred, gt);
}

Tensor loss_coarse_rgb(const Tensor& coarse_rgb, const Tensor& gt_small) {
  return mse(coarse_rgb, gt_small);
}

Tensor loss_depth_smooth(const Tensor& depth, const Tensor& gt_small,
                         const Tensor& opacity) {
  if (depth.ndim() != 2) throw ShapeError("loss_depth_smooth: depth (h,w)");
  int64_t h = depth.dim(0), w = depth.dim(1);
  if (gt_small.ndim() != 3 || gt_small.dim(1) != h || gt_small.dim(2) != w ||
      opacity.shape() != depth.shape())
    throw ShapeError("loss_depth_smooth: shape mismatch");

  // Edge weights e^{-||dI||_2} and opacity masks, both plain data.
  std::vector<double> img = gt_small.to_vector();
  std::vector<double> op = opacity.to_vector();
  int64_t ch = gt_small.dim(0);
  auto grad_weight = [&](int64_t y, int64_t x, int64_t y2,
                         int64_t x2) -> double {
    double s = 0.0;
    for (int64_t c = 0; c < ch; ++c) {
      double d = img[static_cast<size_t>((c * h + y2) * w + x2)] -
                 img[static_cast<size_t>((c * h + y) * w + x)];
      s += d * d;
    }
    return std::exp(-std::sqrt(s));
  };
  auto visible = [&](int64_t y, int64_t x) {
    return op[static_cast<size_t>(y * w + x)] > 1e-3;
  };

  int64_t valid = 0;
  std::vector<double> wu(static_cast<size_t>((h - 1) * w), 0.0);
  for (int64_t y = 0; y + 1 < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      if (visible(y, x) && visible(y + 1, x)) {
        wu[static_cast<size_t>(y * w + x)] = grad_weight(y, x, y + 1, x);
        ++valid;
      }
  std::vector<double> wv(static_cast<size_t>(h * (w - 1)), 0.0);
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x + 1 < w; ++x)
      if (visible(y, x) && visible(y, x + 1)) {
        wv[static_cast<size_t>(y * (w - 1) + x)] = grad_weight(y, x, y, x + 1);
        ++valid;
      }
  if (valid == 0) return Tensor::zeros({1}, depth.dtype());

  Tensor du = sub(slice(depth, 0, 1, h - 1), slice(depth, 0, 0, h - 1));
  Tensor dv = sub(slice(depth, 1, 1, w - 1), slice(depth, 1, 0, w - 1));
  Tensor wut = Tensor::from_vector(wu, {h - 1, w}, depth.dtype());
  Tensor wvt = Tensor::from_vector(wv, {h, w - 1}, depth.dtype());
  Tensor su = sum_all(mul(abs(du), wut));
  Tensor sv = sum_all(mul(abs(dv), wvt));
  return scale(add(su, sv), 1.0 / static_cast<double>(valid));
}

LossReport compute_losses(const Tensor& pred, const Tensor& gt,
                          const Tensor& coarse_rgb, const Tensor& depth,
                          const Tensor& opacity, const Tensor& gt_small) {
  LossReport r;
  r.fine = loss_fine(pred, gt);
  r.coarse_rgb = loss_coarse_rgb(coarse_rgb, gt_small);
  r.depth_smooth = loss_depth_smooth(depth, gt_small, opacity);
  r.total = add(add(r.fine, r.coarse_rgb), r.depth_smooth);
  r.fine_v = r.fine.item();
  r.coarse_rgb_v = r.coarse_rgb.item();
  r.depth_smooth_v = r.depth_smooth.item();
  r.total_v = r.fine_v + r.coarse_rgb_v + r.depth_smooth_v;
  return r;
}

}  // namespace lfnr

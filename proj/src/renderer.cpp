// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include "lfnr/renderer.hpp"

#include <cmath>

namespace lfnr {

RenderedFeatures composite(const Tensor& volume, const DepthGrid& depths,
                           double z_near, double z_far) {
  if (volume.ndim() != 4)
    throw ShapeError("composite: volume must be (C-1,n,h,w)");
  int64_t cp = volume.dim(0), h = volume.dim(2), w = volume.dim(3);
  double cap = (z_far - z_near) / static_cast<double>(depths.n);
  Tensor packed = composite_pack(volume, depths.t, cap);  // (cp+1, h, w)
  RenderedFeatures out;
  out.features = slice(packed, 0, 0, cp - 1);
  out.depth = reshape(slice(packed, 0, cp - 1, 1), {h, w});
  out.opacity = reshape(slice(packed, 0, cp, 1), {h, w});
  return out;
}

Tensor composite_weights(const Tensor& volume, const DepthGrid& depths,
                         double z_near, double z_far) {
  if (volume.ndim() != 4)
    throw ShapeError("composite_weights: volume must be (C-1,n,h,w)");
  int64_t n = volume.dim(1), h = volume.dim(2), w = volume.dim(3);
  if (n != depths.n || h != depths.h || w != depths.w)
    throw ShapeError("composite_weights: volume/grid shape mismatch");
  double cap = (z_far - z_near) / static_cast<double>(n);
  NoGradGuard ng;
  std::vector<double> logits =
      slice(volume.detach(), 0, 0, 1).to_vector();  // (1,n,h,w) flattened
  std::vector<double> wv(static_cast<size_t>(n * h * w));
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      double tr = 1.0;
      for (int64_t z = 0; z < n; ++z) {
        double lg = logits[static_cast<size_t>((z * h + y) * w + x)];
        double sg = lg > 0.0 ? lg + std::log1p(std::exp(-lg))
                             : std::log1p(std::exp(lg));
        double delta =
            z + 1 < n ? depths.at(z + 1, y, x) - depths.at(z, y, x) : cap;
        double tnext = tr * std::exp(-sg * delta);
        wv[static_cast<size_t>((z * h + y) * w + x)] = tr - tnext;
        tr = tnext;
      }
    }
  return Tensor::from_vector(wv, {n, h, w}, volume.dtype());
}

FinePass coarse_to_fine(const Tensor& coarse_volume,
                        const DepthGrid& coarse_depths,
                        const VolumeBuilder& build, int n_fine, double z_near,
                        double z_far, Rng& rng) {
  FinePass out;
  if (n_fine <= 0) {
    out.rendered = composite(coarse_volume, coarse_depths, z_near, z_far);
    out.depths = coarse_depths;
    return out;
  }
  Tensor weights =
      composite_weights(coarse_volume, coarse_depths, z_near, z_far);
  out.depths =
      merge_importance(coarse_depths, weights, n_fine, z_near, z_far, rng);
  Tensor fine_volume = build(out.depths);
  out.rendered = composite(fine_volume, out.depths, z_near, z_far);
  return out;
}

void Upsampler::init(int64_t channels, Rng& rng, DType dt) {
  c1.init(channels, channels, 1, 1, 0, rng, dt);
  c2.init(channels, channels, 1, 1, 0, rng, dt);
}

void Upsampler::reg(ParamStore& ps, const std::string& prefix) {
  c1.reg(ps, prefix + ".c1");
  c2.reg(ps, prefix + ".c2");
}

Tensor Upsampler::operator()(const Tensor& coarse) const {
  Tensor x = upsample2x(c1(coarse));
  return upsample2x(c2(x));
}

}  // namespace lfnr

// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include "lfnr/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lfnr {

double DepthGrid::at(int64_t z, int64_t y, int64_t x) const {
  if (per_ray) return t.at({z, y, x});
  return t.at({z});
}

std::vector<double> DepthGrid::ray(int64_t y, int64_t x) const {
  std::vector<double> out(static_cast<size_t>(n));
  for (int64_t z = 0; z < n; ++z) out[static_cast<size_t>(z)] = at(z, y, x);
  return out;
}

DepthGrid make_shared_depths(const std::vector<double>& depths, int64_t h,
                             int64_t w, DType dt) {
  DepthGrid g;
  g.n = static_cast<int64_t>(depths.size());
  g.h = h;
  g.w = w;
  g.per_ray = false;
  g.t = Tensor::from_vector(depths, {g.n}, dt);
  return g;
}

DepthGrid make_stratified_grid(double z_near, double z_far, int n, int64_t h,
                               int64_t w, Rng& rng, DType dt) {
  DepthGrid g;
  g.n = n;
  g.h = h;
  g.w = w;
  g.per_ray = true;
  std::vector<double> data(static_cast<size_t>(n * h * w));
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      std::vector<double> d = stratified_depths(z_near, z_far, n, rng);
      for (int64_t z = 0; z < n; ++z)
        data[static_cast<size_t>((z * h + y) * w + x)] =
            d[static_cast<size_t>(z)];
    }
  g.t = Tensor::from_vector(data, {g.n, h, w}, dt);
  return g;
}

DepthGrid merge_importance(const DepthGrid& coarse, const Tensor& weights,
                           int n_fine, double z_near, double z_far,
                           Rng& rng) {
  if (weights.ndim() != 3 || weights.dim(0) != coarse.n ||
      weights.dim(1) != coarse.h || weights.dim(2) != coarse.w)
    throw ShapeError("merge_importance: weights " +
                     shape_str(weights.shape()) + " do not match the grid");
  DepthGrid g;
  g.n = coarse.n + n_fine;
  g.h = coarse.h;
  g.w = coarse.w;
  g.per_ray = true;
  std::vector<double> data(static_cast<size_t>(g.n * g.h * g.w));
  std::vector<double> wv = weights.to_vector();
  for (int64_t y = 0; y < g.h; ++y)
    for (int64_t x = 0; x < g.w; ++x) {
      std::vector<double> c = coarse.ray(y, x);
      std::vector<double> wr(static_cast<size_t>(coarse.n));
      for (int64_t z = 0; z < coarse.n; ++z)
        wr[static_cast<size_t>(z)] =
            wv[static_cast<size_t>((z * g.h + y) * g.w + x)];
      std::vector<double> fine =
          importance_depths(c, wr, n_fine, z_near, z_far, rng);
      c.insert(c.end(), fine.begin(), fine.end());
      std::sort(c.begin(), c.end());
      for (size_t i = 1; i < c.size(); ++i)
        if (c[i] <= c[i - 1])
          c[i] = std::nextafter(c[i - 1],
                                std::numeric_limits<double>::infinity());
      for (int64_t z = 0; z < g.n; ++z)
        data[static_cast<size_t>((z * g.h + y) * g.w + x)] =
            c[static_cast<size_t>(z)];
    }
  g.t = Tensor::from_vector(data, {g.n, g.h, g.w}, weights.dtype());
  return g;
}

Tensor resample_to_target(const FeatureVolume& volume,
                          const Camera& input_cam, const Camera& target_cam,
                          const DepthGrid& depths, int block, int64_t row0) {
  const Tensor& vol = volume.data;
  if (vol.ndim() != 4)
    throw ShapeError("resample_to_target: volume must be (C,D,h,w)");
  int64_t c = vol.dim(0), n = depths.n, h = depths.h, w = depths.w;
  if (block < 1) throw ContractError("resample_to_target: block must be >= 1");

  // Ray directions for the grid, cached per (y,x).
  std::vector<Vec3> dirs(static_cast<size_t>(h * w));
  double half = static_cast<double>(block) / 2.0;
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      dirs[static_cast<size_t>(y * w + x)] = ray_direction(
          target_cam, static_cast<double>(block) * static_cast<double>(y + row0) + half,
          static_cast<double>(block) * static_cast<double>(x) + half);

  int64_t m = n * h * w;
  std::vector<double> coords(static_cast<size_t>(m * 3));
  for (int64_t z = 0; z < n; ++z)
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x) {
        double t = depths.at(z, y, x);
        Vec3 p = target_cam.T + t * dirs[static_cast<size_t>(y * w + x)];
        NdcPoint q = world_to_input_ndc(p, input_cam);
        int64_t row = (z * h + y) * w + x;
        for (int a = 0; a < 3; ++a)
          coords[static_cast<size_t>(row * 3 + a)] =
              std::clamp(q.ndc[a], -10.0, 10.0);
      }
  Tensor ct = Tensor::from_vector(coords, {m, 3}, vol.dtype());
  Tensor samples = trilinear_sample(vol, ct);       // (m, C)
  return reshape(transpose2(samples), {c, n, h, w});
}

Tensor aggregate(const std::vector<Tensor>& views) {
  return aggregate_views(views);
}

}  // namespace lfnr

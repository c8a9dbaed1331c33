// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "lfnr/error.hpp"
#include "lfnr/rng.hpp"

namespace lfnr {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Pinhole camera. R is world-from-camera, T the camera origin in world
// units. Pixel (u,v) is 1-based with u indexing rows; its center sits at
// continuous image coordinate (u-0.5, v-0.5). The camera frame is x=down,
// y=right, z=forward (right-handed).
struct Camera {
  Mat3 K = Mat3::Identity();
  Mat3 R = Mat3::Identity();
  Vec3 T = Vec3::Zero();
  double z_near = 0.1;
  double z_far = 10.0;
  int height = 1;
  int width = 1;

  void validate() const;
  Mat3 Kinv() const;
};

// Direction of the ray through continuous image coordinate (u,v); callers
// rendering pixel grids pass (u-0.5, v-0.5) for 1-based pixel (u,v).
Vec3 ray_direction(const Camera& cam, double u, double v);

struct RaySample {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  std::vector<double> depths;
  std::vector<Vec3> points;
};

RaySample make_ray_sample(const Camera& cam, double u, double v,
                          std::vector<double> depths);

// One uniform draw in each of n equal bins of [z_near, z_far].
template <typename RngT>
std::vector<double> stratified_depths(double z_near, double z_far, int n,
                                      RngT& rng) {
  if (n < 1) throw ContractError("stratified_depths: n must be >= 1");
  if (!(0.0 < z_near && z_near < z_far))
    throw ContractError("stratified_depths: bad z bounds");
  std::vector<double> t(static_cast<size_t>(n));
  double bin = (z_far - z_near) / static_cast<double>(n);
  for (int z = 0; z < n; ++z)
    t[static_cast<size_t>(z)] =
        z_near + (static_cast<double>(z) + rng.u01()) * bin;
  return t;
}

// Inverse-CDF sampling over the piecewise-constant pdf defined by the
// coarse weights (T_z alpha_z). Bin k spans [e_k, e_{k+1}] with e_0=z_near,
// e_N=z_far and midpoints of consecutive coarse depths between. All-zero
// weights fall back to uniform sampling. Output is sorted.
template <typename RngT>
std::vector<double> importance_depths(const std::vector<double>& coarse,
                                      const std::vector<double>& weights,
                                      int n_fine, double z_near, double z_far,
                                      RngT& rng) {
  size_t n = coarse.size();
  if (n == 0 || weights.size() != n)
    throw ContractError("importance_depths: length mismatch");
  for (double w : weights)
    if (w < 0.0) throw ContractError("importance_depths: negative weight");
  std::vector<double> edges(n + 1);
  edges[0] = z_near;
  for (size_t k = 1; k < n; ++k) edges[k] = 0.5 * (coarse[k - 1] + coarse[k]);
  edges[n] = z_far;

  double wsum = 0.0;
  for (double w : weights) wsum += w;
  std::vector<double> out(static_cast<size_t>(n_fine));
  if (wsum <= 0.0) {
    for (int i = 0; i < n_fine; ++i)
      out[static_cast<size_t>(i)] = z_near + rng.u01() * (z_far - z_near);
  } else {
    std::vector<double> cdf(n + 1, 0.0);
    for (size_t k = 0; k < n; ++k) cdf[k + 1] = cdf[k] + weights[k] / wsum;
    cdf[n] = 1.0;
    for (int i = 0; i < n_fine; ++i) {
      double u = rng.u01();
      size_t k = static_cast<size_t>(
          std::upper_bound(cdf.begin(), cdf.end() - 1, u) - cdf.begin());
      if (k > 0) --k;
      double span = cdf[k + 1] - cdf[k];
      double frac = span > 0.0 ? (u - cdf[k]) / span : 0.5;
      out[static_cast<size_t>(i)] = edges[k] + frac * (edges[k + 1] - edges[k]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct NdcPoint {
  Vec3 ndc = Vec3::Zero();
  bool behind = false;  // non-positive camera-frame depth
};

// Maps a world point into the camera's NDC cube: x tracks the image width
// axis, y the height axis (edge-aligned: continuous coordinate c in [0,W]
// maps to 2c/W-1), z is linear in 1/depth with z_near -> -1, z_far -> +1.
NdcPoint world_to_input_ndc(const Vec3& p, const Camera& cam);

// Exact inverse of world_to_input_ndc (test oracle and slice-depth helper).
Vec3 ndc_to_world(const Vec3& ndc, const Camera& cam);

struct PluckerRay {
  std::array<double, 6> coords{};    // (d, T x d) / ||d||
  std::array<double, 78> encoded{};  // positional encoding of coords
};

std::array<double, 78> positional_encode(const std::array<double, 6>& r);
PluckerRay plucker_encode(const Vec3& origin, const Vec3& direction);

}  // namespace lfnr

// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "lfnr/tensor.hpp"

namespace lfnr {

// Elementwise. Shapes must match exactly; there is no broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor abs(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor softmax(const Tensor& a, int axis);

// x: (M,K) row-major, w: (N,K), b: (N) or undefined -> (M,N).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor transpose2(const Tensor& a);  // (A,B) -> (B,A)

// Cross-correlation convs. conv2d x: (Cin,H,W), w: (Cout,Cin,k,k).
// Transposed variants take w: (Cin,Cout,k,k) and invert the stride map.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int padding);
Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b,
                        int stride, int padding);
// conv3d x: (Cin,D,H,W), w: (Cout,Cin,k,k,k) / transpose (Cin,Cout,k,k,k).
Tensor conv3d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int padding);
Tensor conv_transpose3d(const Tensor& x, const Tensor& w, const Tensor& b,
                        int stride, int padding);

// volume: (C,D,H,W), coords: (M,3) with columns (x->W, y->H, z->D) in
// [-1,1], align_corners=false voxel centers, zero padding outside -> (M,C).
Tensor trilinear_sample(const Tensor& volume, const Tensor& coords);

// (C,H,W) -> (C,2H,2W), bilinear, align_corners=false, edge clamp.
Tensor upsample2x(const Tensor& x);

Tensor reshape(const Tensor& a, const Shape& s);
Tensor slice(const Tensor& a, int axis, int64_t start, int64_t len);
Tensor concat(const std::vector<Tensor>& parts, int axis);

Tensor sum_all(const Tensor& a);   // -> scalar shape {1}
Tensor mean_all(const Tensor& a);  // -> scalar shape {1}

// Fused pipeline ops.
//
// aggregate_views: each view (C,N,h,w); channel 0 is the confidence logit.
// Softmax across views per voxel weights the payload channels 1..C-1.
// Output (C-1,N,h,w).
Tensor aggregate_views(const std::vector<Tensor>& views);

// composite_pack: volume (C',N,h,w) with channel 0 the density logit and
// channels 1..C'-1 the features. depths: (N) shared or (N,h,w) per ray,
// plain data (no gradient flows into depths). delta for the last sample is
// delta_cap. Output (C'+1,h,w): rows [0,C'-1) features, row C'-1 depth,
// row C' opacity. Depth uses eps=1e-8 on the weight sum.
Tensor composite_pack(const Tensor& volume, const Tensor& depths,
                      double delta_cap);

// Broadcast a length-C vector to (C,H,W); backward sums over H,W.
Tensor broadcast_hw(const Tensor& v, int64_t h, int64_t w);

// Adam with bias correction. No graph involvement; operates on leaf params.
struct AdamState {
  Tensor m, v;
};
void adam_step(Tensor& param, const Tensor& grad, AdamState& state,
               int64_t step, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

}  // namespace lfnr

// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "ops_common.hpp"

namespace lfnr {

using detail::dispatch;

namespace {

// align_corners=false: ndc u in [-1,1] -> continuous voxel index.
inline double unnormalize(double u, int64_t size) {
  return ((u + 1.0) * static_cast<double>(size) - 1.0) * 0.5;
}

struct Corner {
  int64_t off;   // flat offset within one channel, -1 when out of bounds
  double w;      // trilinear weight
  double dwx, dwy, dwz;  // d w / d (continuous index) per axis
};

}  // namespace

Tensor trilinear_sample(const Tensor& volume, const Tensor& coords) {
  if (volume.ndim() != 4 || coords.ndim() != 2 || coords.dim(1) != 3)
    throw ShapeError("trilinear_sample: volume " + shape_str(volume.shape()) +
                     ", coords " + shape_str(coords.shape()));
  detail::check_dtype(volume, coords, "trilinear_sample");
  int64_t c = volume.dim(0), d = volume.dim(1), h = volume.dim(2),
          w = volume.dim(3);
  int64_t mpts = coords.dim(0);

  // Corner table is rebuilt from coords in backward; building it once here
  // and capturing it would hold 8*M entries alive for the whole graph.
  auto build = [d, h, w](const double cx, const double cy, const double cz,
                         Corner out8[8]) {
    double fx = unnormalize(cx, w), fy = unnormalize(cy, h),
           fz = unnormalize(cz, d);
    int64_t x0 = static_cast<int64_t>(std::floor(fx));
    int64_t y0 = static_cast<int64_t>(std::floor(fy));
    int64_t z0 = static_cast<int64_t>(std::floor(fz));
    double tx = fx - static_cast<double>(x0), ty = fy - static_cast<double>(y0),
           tz = fz - static_cast<double>(z0);
    int n = 0;
    for (int dz = 0; dz < 2; ++dz)
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          int64_t xi = x0 + dx, yi = y0 + dy, zi = z0 + dz;
          double wx = dx ? tx : 1.0 - tx;
          double wy = dy ? ty : 1.0 - ty;
          double wz = dz ? tz : 1.0 - tz;
          double sx = dx ? 1.0 : -1.0, sy = dy ? 1.0 : -1.0,
                 sz = dz ? 1.0 : -1.0;
          Corner& k = out8[n++];
          bool ok = xi >= 0 && xi < w && yi >= 0 && yi < h && zi >= 0 && zi < d;
          k.off = ok ? (zi * h + yi) * w + xi : -1;
          k.w = wx * wy * wz;
          k.dwx = sx * wy * wz;
          k.dwy = wx * sy * wz;
          k.dwz = wx * wy * sz;
        }
  };

  Tensor out = make_op_result(
      {mpts, c}, volume.dtype(), {volume, coords}, "trilinear_sample",
      [volume, coords, build, c, d, h, w, mpts](const Tensor& gout,
                                                std::vector<Tensor>& gin) {
        Tensor gvol = Tensor::zeros(volume.shape(), volume.dtype());
        Tensor gco = Tensor::zeros(coords.shape(), coords.dtype());
        int64_t chan = d * h * w;
        dispatch(volume.dtype(), [&](auto tag) {
          using T = decltype(tag);
          const T* vol = volume.data<T>();
          const T* co = coords.data<T>();
          const T* go = gout.data<T>();
          T* gv = gvol.data<T>();
          T* gc = gco.data<T>();
          Corner k8[8];
          for (int64_t m = 0; m < mpts; ++m) {
            build(static_cast<double>(co[m * 3 + 0]),
                  static_cast<double>(co[m * 3 + 1]),
                  static_cast<double>(co[m * 3 + 2]), k8);
            double gx = 0.0, gy = 0.0, gz = 0.0;
            for (int64_t ci = 0; ci < c; ++ci) {
              double g = static_cast<double>(go[m * c + ci]);
              const T* vch = vol + ci * chan;
              T* gch = gv + ci * chan;
              for (int n = 0; n < 8; ++n) {
                if (k8[n].off < 0) continue;
                double v = static_cast<double>(vch[k8[n].off]);
                gch[k8[n].off] += static_cast<T>(g * k8[n].w);
                gx += g * v * k8[n].dwx;
                gy += g * v * k8[n].dwy;
                gz += g * v * k8[n].dwz;
              }
            }
            // chain through unnormalize: d(index)/d(ndc) = size/2
            gc[m * 3 + 0] = static_cast<T>(gx * static_cast<double>(w) * 0.5);
            gc[m * 3 + 1] = static_cast<T>(gy * static_cast<double>(h) * 0.5);
            gc[m * 3 + 2] = static_cast<T>(gz * static_cast<double>(d) * 0.5);
          }
        });
        gin[0] = gvol;
        gin[1] = gco;
      });
  int64_t chan = d * h * w;
  dispatch(volume.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* vol = volume.data<T>();
    const T* co = coords.data<T>();
    T* y = out.data<T>();
    Corner k8[8];
    for (int64_t m = 0; m < mpts; ++m) {
      build(static_cast<double>(co[m * 3 + 0]),
            static_cast<double>(co[m * 3 + 1]),
            static_cast<double>(co[m * 3 + 2]), k8);
      for (int64_t ci = 0; ci < c; ++ci) {
        const T* vch = vol + ci * chan;
        double acc = 0.0;
        for (int n = 0; n < 8; ++n)
          if (k8[n].off >= 0)
            acc += k8[n].w * static_cast<double>(vch[k8[n].off]);
        y[m * c + ci] = static_cast<T>(acc);
      }
    }
  });
  return out;
}

Tensor upsample2x(const Tensor& x) {
  if (x.ndim() != 3) throw ShapeError("upsample2x: expected (C,H,W)");
  int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  int64_t ho = 2 * h, wo = 2 * w;

  // Precompute the 1-D source taps (align_corners=false, edge clamp).
  auto taps = [](int64_t o, int64_t in, int64_t& i0, int64_t& i1, double& t) {
    double s = static_cast<double>(o) * 0.5 - 0.25;
    double f = std::floor(s);
    t = s - f;
    i0 = static_cast<int64_t>(f);
    i1 = i0 + 1;
    if (i0 < 0) i0 = 0;
    if (i1 > in - 1) i1 = in - 1;
  };

  Tensor out = make_op_result(
      {c, ho, wo}, x.dtype(), {x}, "upsample2x",
      [c, h, w, ho, wo, taps](const Tensor& gout, std::vector<Tensor>& gin) {
        Tensor g = Tensor::zeros({c, h, w}, gout.dtype());
        dispatch(gout.dtype(), [&](auto tag) {
          using T = decltype(tag);
          const T* go = gout.data<T>();
          T* gp = g.data<T>();
          for (int64_t ci = 0; ci < c; ++ci)
            for (int64_t oy = 0; oy < ho; ++oy) {
              int64_t y0, y1;
              double ty;
              taps(oy, h, y0, y1, ty);
              for (int64_t ox = 0; ox < wo; ++ox) {
                int64_t x0, x1;
                double tx;
                taps(ox, w, x0, x1, tx);
                double gv =
                    static_cast<double>(go[(ci * ho + oy) * wo + ox]);
                gp[(ci * h + y0) * w + x0] +=
                    static_cast<T>(gv * (1 - ty) * (1 - tx));
                gp[(ci * h + y0) * w + x1] +=
                    static_cast<T>(gv * (1 - ty) * tx);
                gp[(ci * h + y1) * w + x0] +=
                    static_cast<T>(gv * ty * (1 - tx));
                gp[(ci * h + y1) * w + x1] += static_cast<T>(gv * ty * tx);
              }
            }
        });
        gin[0] = g;
      });
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* src = x.data<T>();
    T* dst = out.data<T>();
    for (int64_t ci = 0; ci < c; ++ci)
      for (int64_t oy = 0; oy < ho; ++oy) {
        int64_t y0, y1;
        double ty;
        taps(oy, h, y0, y1, ty);
        for (int64_t ox = 0; ox < wo; ++ox) {
          int64_t x0, x1;
          double tx;
          taps(ox, w, x0, x1, tx);
          double v = (1 - ty) * ((1 - tx) * src[(ci * h + y0) * w + x0] +
                                 tx * src[(ci * h + y0) * w + x1]) +
                     ty * ((1 - tx) * src[(ci * h + y1) * w + x0] +
                           tx * src[(ci * h + y1) * w + x1]);
          dst[(ci * ho + oy) * wo + ox] = static_cast<T>(v);
        }
      }
  });
  return out;
}

}  // namespace lfnr

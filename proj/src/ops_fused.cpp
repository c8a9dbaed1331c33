// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "ops_common.hpp"

namespace lfnr {

using detail::dispatch;

Tensor aggregate_views(const std::vector<Tensor>& views) {
  if (views.empty()) throw ContractError("aggregate_views: empty view list");
  const Shape& s = views[0].shape();
  if (s.size() != 4) throw ShapeError("aggregate_views: expected (C,N,h,w)");
  for (const Tensor& v : views)
    if (v.shape() != s || v.dtype() != views[0].dtype())
      throw ShapeError("aggregate_views: mismatched view " +
                       shape_str(v.shape()) + " vs " + shape_str(s));
  int64_t c = s[0];
  if (c < 2) throw ShapeError("aggregate_views: need confidence + payload");
  int64_t vox = s[1] * s[2] * s[3];
  size_t nv = views.size();
  Shape os = {c - 1, s[1], s[2], s[3]};

  Tensor out = make_op_result(
      os, views[0].dtype(), views, "aggregate_views",
      [views, c, vox, nv](const Tensor& gout, std::vector<Tensor>& gin) {
        dispatch(views[0].dtype(), [&](auto tag) {
          using T = decltype(tag);
          std::vector<const T*> src(nv);
          std::vector<T*> dst(nv);
          for (size_t k = 0; k < nv; ++k) {
            gin[k] = Tensor::zeros(views[k].shape(), views[k].dtype());
            src[k] = views[k].data<T>();
            dst[k] = gin[k].data<T>();
          }
          const T* go = gout.data<T>();
          std::vector<double> sm(nv);
          for (int64_t i = 0; i < vox; ++i) {
            double mx = -1e300;
            for (size_t k = 0; k < nv; ++k)
              mx = std::max(mx, static_cast<double>(src[k][i]));
            double z = 0.0;
            for (size_t k = 0; k < nv; ++k) {
              sm[k] = std::exp(static_cast<double>(src[k][i]) - mx);
              z += sm[k];
            }
            for (size_t k = 0; k < nv; ++k) sm[k] /= z;
            // d out_ch / d W_k = s_k (P_k,ch - out_ch)
            for (int64_t ch = 1; ch < c; ++ch) {
              double g = static_cast<double>(go[(ch - 1) * vox + i]);
              if (g == 0.0) continue;
              double o = 0.0;
              for (size_t k = 0; k < nv; ++k)
                o += sm[k] * static_cast<double>(src[k][ch * vox + i]);
              for (size_t k = 0; k < nv; ++k) {
                double pk = static_cast<double>(src[k][ch * vox + i]);
                dst[k][ch * vox + i] += static_cast<T>(g * sm[k]);
                dst[k][i] += static_cast<T>(g * sm[k] * (pk - o));
              }
            }
          }
        });
      });
  dispatch(views[0].dtype(), [&](auto tag) {
    using T = decltype(tag);
    std::vector<const T*> src(nv);
    for (size_t k = 0; k < nv; ++k) src[k] = views[k].data<T>();
    T* y = out.data<T>();
    std::vector<double> sm(nv);
    for (int64_t i = 0; i < vox; ++i) {
      double mx = -1e300;
      for (size_t k = 0; k < nv; ++k)
        mx = std::max(mx, static_cast<double>(src[k][i]));
      double z = 0.0;
      for (size_t k = 0; k < nv; ++k) {
        sm[k] = std::exp(static_cast<double>(src[k][i]) - mx);
        z += sm[k];
      }
      for (int64_t ch = 1; ch < c; ++ch) {
        double acc = 0.0;
        for (size_t k = 0; k < nv; ++k)
          acc += sm[k] * static_cast<double>(src[k][ch * vox + i]);
        y[(ch - 1) * vox + i] = static_cast<T>(acc / z);
      }
    }
  });
  return out;
}

namespace {

inline double softplus_d(double x) {
  return std::log1p(std::exp(-std::fabs(x))) + (x > 0.0 ? x : 0.0);
}

}  // namespace

Tensor composite_pack(const Tensor& volume, const Tensor& depths,
                      double delta_cap) {
  if (volume.ndim() != 4)
    throw ShapeError("composite_pack: expected volume (C,N,h,w)");
  int64_t c = volume.dim(0), n = volume.dim(1), h = volume.dim(2),
          w = volume.dim(3);
  if (c < 2) throw ShapeError("composite_pack: need density + features");
  bool per_ray = depths.ndim() == 3;
  if (per_ray) {
    if (depths.dim(0) != n || depths.dim(1) != h || depths.dim(2) != w)
      throw ShapeError("composite_pack: depths " + shape_str(depths.shape()) +
                       " vs volume " + shape_str(volume.shape()));
  } else if (depths.ndim() != 1 || depths.dim(0) != n) {
    throw ShapeError("composite_pack: depths " + shape_str(depths.shape()));
  }
  const int64_t rays = h * w;
  const int64_t feat = c - 1;
  const double kEps = 1e-8;

  // Validates monotonicity once up front (contract error, not a numeric one).
  {
    std::vector<double> dv = depths.to_vector();
    if (per_ray) {
      for (int64_t r = 0; r < rays; ++r)
        for (int64_t z = 0; z + 1 < n; ++z)
          if (dv[static_cast<size_t>((z + 1) * rays + r)] <=
              dv[static_cast<size_t>(z * rays + r)])
            throw ContractError("composite_pack: depths not increasing");
    } else {
      for (int64_t z = 0; z + 1 < n; ++z)
        if (dv[static_cast<size_t>(z + 1)] <= dv[static_cast<size_t>(z)])
          throw ContractError("composite_pack: depths not increasing");
    }
  }

  auto depth_at = [per_ray, rays](const double* t, int64_t z, int64_t r) {
    return per_ray ? t[z * rays + r] : t[z];
  };

  Tensor out = make_op_result(
      {feat + 2, h, w}, volume.dtype(), {volume, depths}, "composite_pack",
      [volume, depths, delta_cap, c, n, h, w, rays, feat, kEps, per_ray,
       depth_at](const Tensor& gout, std::vector<Tensor>& gin) {
        Tensor gvol = Tensor::zeros(volume.shape(), volume.dtype());
        std::vector<double> tvals = depths.to_vector();
        const double* tv = tvals.data();
        dispatch(volume.dtype(), [&](auto tag) {
          using T = decltype(tag);
          const T* vol = volume.data<T>();
          const T* go = gout.data<T>();
          T* gv = gvol.data<T>();
          std::vector<double> tr(static_cast<size_t>(n) + 1);  // T_z
          std::vector<double> wz(static_cast<size_t>(n));
          std::vector<double> gw(static_cast<size_t>(n));
          for (int64_t r = 0; r < rays; ++r) {
            // Recompute the forward quantities for this ray.
            double acc = 0.0, osum = 0.0, dsum = 0.0;
            tr[0] = 1.0;
            for (int64_t z = 0; z < n; ++z) {
              double lg = static_cast<double>(vol[z * rays + r]);
              double sig = softplus_d(lg);
              double delta = (z + 1 < n)
                                 ? depth_at(tv, z + 1, r) - depth_at(tv, z, r)
                                 : delta_cap;
              acc += sig * delta;
              tr[static_cast<size_t>(z) + 1] = std::exp(-acc);
              wz[static_cast<size_t>(z)] =
                  tr[static_cast<size_t>(z)] - tr[static_cast<size_t>(z) + 1];
              osum += wz[static_cast<size_t>(z)];
              dsum += wz[static_cast<size_t>(z)] * depth_at(tv, z, r);
            }
            double den = std::max(osum, kEps);
            // Upstream grads: features rows, then depth, then opacity.
            double gd = static_cast<double>(go[feat * rays + r]);
            double gop = static_cast<double>(go[(feat + 1) * rays + r]);
            double gd_over = gd / den;
            double gosum = gop;
            if (osum > kEps) gosum -= gd * dsum / (den * den);
            // G_z = dL/dw_z
            for (int64_t z = 0; z < n; ++z) {
              double g = gosum + gd_over * depth_at(tv, z, r);
              for (int64_t ch = 1; ch < c; ++ch) {
                double f = static_cast<double>(vol[(ch * n + z) * rays + r]);
                double gf = static_cast<double>(go[(ch - 1) * rays + r]);
                g += gf * f;
                gv[(ch * n + z) * rays + r] +=
                    static_cast<T>(gf * wz[static_cast<size_t>(z)]);
              }
              gw[static_cast<size_t>(z)] = g;
            }
            // dL/da_j = G_j T_{j+1} - sum_{z>j} G_z w_z (suffix sum).
            double suf = 0.0;
            for (int64_t j = n - 1; j >= 0; --j) {
              double ga = gw[static_cast<size_t>(j)] *
                              tr[static_cast<size_t>(j) + 1] -
                          suf;
              suf += gw[static_cast<size_t>(j)] * wz[static_cast<size_t>(j)];
              double lg = static_cast<double>(vol[j * rays + r]);
              double delta = (j + 1 < n)
                                 ? depth_at(tv, j + 1, r) - depth_at(tv, j, r)
                                 : delta_cap;
              double dsig = 1.0 / (1.0 + std::exp(-lg));  // softplus'
              gv[j * rays + r] += static_cast<T>(ga * delta * dsig);
            }
          }
        });
        gin[0] = gvol;  // no gradient into depths (plain data)
      });

  {
    std::vector<double> tvals = depths.to_vector();
    const double* tv = tvals.data();
    dispatch(volume.dtype(), [&](auto tag) {
      using T = decltype(tag);
      const T* vol = volume.data<T>();
      T* y = out.data<T>();
      for (int64_t r = 0; r < rays; ++r) {
        double tprev = 1.0, acc = 0.0, osum = 0.0, dsum = 0.0;
        for (int64_t ch = 0; ch < feat; ++ch) y[ch * rays + r] = T(0);
        for (int64_t z = 0; z < n; ++z) {
          double lg = static_cast<double>(vol[z * rays + r]);
          double sig = softplus_d(lg);
          double delta = (z + 1 < n)
                             ? depth_at(tv, z + 1, r) - depth_at(tv, z, r)
                             : delta_cap;
          acc += sig * delta;
          double tnext = std::exp(-acc);
          double wzv = tprev - tnext;
          tprev = tnext;
          osum += wzv;
          dsum += wzv * depth_at(tv, z, r);
          for (int64_t ch = 1; ch < c; ++ch)
            y[(ch - 1) * rays + r] += static_cast<T>(
                wzv * static_cast<double>(vol[(ch * n + z) * rays + r]));
        }
        y[feat * rays + r] = static_cast<T>(dsum / std::max(osum, kEps));
        y[(feat + 1) * rays + r] = static_cast<T>(osum);
      }
    });
  }
  return out;
}

}  // namespace lfnr

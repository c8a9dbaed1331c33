// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include <cstring>

#include "ops_common.hpp"

namespace lfnr {

using detail::check_dtype;
using detail::CMapRM;
using detail::dispatch;
using detail::MapRM;

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.ndim() != 2 || w.ndim() != 2)
    throw ShapeError("linear: expected 2-D x and w, got " +
                     shape_str(x.shape()) + " and " + shape_str(w.shape()));
  check_dtype(x, w, "linear");
  int64_t m = x.dim(0), k = x.dim(1), n = w.dim(0);
  if (w.dim(1) != k)
    throw ShapeError("linear: x " + shape_str(x.shape()) + " vs w " +
                     shape_str(w.shape()));
  if (b.defined() && (b.ndim() != 1 || b.dim(0) != n))
    throw ShapeError("linear: bias shape " + shape_str(b.shape()));

  Tensor out = make_op_result(
      {m, n}, x.dtype(), {x, w, b}, "linear",
      [x, w, b, m, k, n](const Tensor& gout, std::vector<Tensor>& gin) {
        Tensor gx = Tensor::zeros({m, k}, x.dtype());
        Tensor gw = Tensor::zeros({n, k}, x.dtype());
        dispatch(x.dtype(), [&](auto tag) {
          using T = decltype(tag);
          CMapRM<T> X(x.data<T>(), m, k), W(w.data<T>(), n, k),
              GO(gout.data<T>(), m, n);
          MapRM<T> GX(gx.data<T>(), m, k), GW(gw.data<T>(), n, k);
          GX.noalias() = GO * W;
          GW.noalias() = GO.transpose() * X;
        });
        gin[0] = gx;
        gin[1] = gw;
        if (b.defined()) {
          Tensor gb = Tensor::zeros({n}, x.dtype());
          dispatch(x.dtype(), [&](auto tag) {
            using T = decltype(tag);
            CMapRM<T> GO(gout.data<T>(), m, n);
            Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> GB(gb.data<T>(),
                                                               n);
            GB = GO.colwise().sum().transpose();
          });
          gin[2] = gb;
        }
      });
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    CMapRM<T> X(x.data<T>(), m, k), W(w.data<T>(), n, k);
    MapRM<T> Y(out.data<T>(), m, n);
    Y.noalias() = X * W.transpose();
    if (b.defined()) {
      const T* pb = b.data<T>();
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) Y(i, j) += pb[j];
    }
  });
  return out;
}

Tensor transpose2(const Tensor& a) {
  if (a.ndim() != 2) throw ShapeError("transpose2: expected 2-D tensor");
  int64_t r = a.dim(0), c = a.dim(1);
  Tensor out = make_op_result(
      {c, r}, a.dtype(), {a}, "transpose2",
      [r, c](const Tensor& gout, std::vector<Tensor>& gin) {
        Tensor g = Tensor::zeros({r, c}, gout.dtype());
        dispatch(gout.dtype(), [&](auto tag) {
          using T = decltype(tag);
          CMapRM<T> GO(gout.data<T>(), c, r);
          MapRM<T> G(g.data<T>(), r, c);
          G = GO.transpose();
        });
        gin[0] = g;
      });
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    CMapRM<T> A(a.data<T>(), r, c);
    MapRM<T> Y(out.data<T>(), c, r);
    Y = A.transpose();
  });
  return out;
}

Tensor reshape(const Tensor& a, const Shape& s) {
  if (shape_numel(s) != a.numel())
    throw ShapeError("reshape: " + shape_str(a.shape()) + " -> " +
                     shape_str(s));
  Shape orig = a.shape();
  Tensor out = make_op_result(
      s, a.dtype(), {a}, "reshape",
      [orig](const Tensor& gout, std::vector<Tensor>& gin) {
        Tensor g = gout.clone();
        g.impl()->shape = orig;
        gin[0] = g;
      });
  out.impl()->f32 = a.impl()->f32;
  out.impl()->f64 = a.impl()->f64;
  return out;
}

Tensor slice(const Tensor& a, int axis, int64_t start, int64_t len) {
  int nd = a.ndim();
  if (axis < 0 || axis >= nd) throw ShapeError("slice: axis out of range");
  const Shape& s = a.shape();
  if (start < 0 || len <= 0 || start + len > s[static_cast<size_t>(axis)])
    throw ShapeError("slice: [" + std::to_string(start) + "," +
                     std::to_string(start + len) + ") out of bounds for " +
                     shape_str(s));
  Shape os = s;
  os[static_cast<size_t>(axis)] = len;
  int64_t inner = 1, outer = 1;
  for (int i = axis + 1; i < nd; ++i) inner *= s[static_cast<size_t>(i)];
  for (int i = 0; i < axis; ++i) outer *= s[static_cast<size_t>(i)];
  int64_t n_axis = s[static_cast<size_t>(axis)];

  Tensor out = make_op_result(
      os, a.dtype(), {a}, "slice",
      [s, start, len, inner, outer, n_axis](const Tensor& gout,
                                            std::vector<Tensor>& gin) {
        Tensor g = Tensor::zeros(s, gout.dtype());
        dispatch(gout.dtype(), [&](auto tag) {
          using T = decltype(tag);
          const T* go = gout.data<T>();
          T* gp = g.data<T>();
          for (int64_t o = 0; o < outer; ++o)
            std::memcpy(gp + (o * n_axis + start) * inner,
                        go + o * len * inner,
                        static_cast<size_t>(len * inner) * sizeof(T));
        });
        gin[0] = g;
      });
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* src = a.data<T>();
    T* dst = out.data<T>();
    for (int64_t o = 0; o < outer; ++o)
      std::memcpy(dst + o * len * inner, src + (o * n_axis + start) * inner,
                  static_cast<size_t>(len * inner) * sizeof(T));
  });
  return out;
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw ContractError("concat: empty input list");
  const Shape& s0 = parts[0].shape();
  int nd = static_cast<int>(s0.size());
  if (axis < 0 || axis >= nd) throw ShapeError("concat: axis out of range");
  int64_t total_axis = 0;
  for (const Tensor& p : parts) {
    if (p.ndim() != nd || p.dtype() != parts[0].dtype())
      throw ShapeError("concat: rank/dtype mismatch");
    for (int i = 0; i < nd; ++i)
      if (i != axis && p.dim(i) != s0[static_cast<size_t>(i)])
        throw ShapeError("concat: " + shape_str(p.shape()) + " vs " +
                         shape_str(s0));
    total_axis += p.dim(axis);
  }
  Shape os = s0;
  os[static_cast<size_t>(axis)] = total_axis;
  int64_t inner = 1, outer = 1;
  for (int i = axis + 1; i < nd; ++i) inner *= s0[static_cast<size_t>(i)];
  for (int i = 0; i < axis; ++i) outer *= s0[static_cast<size_t>(i)];

  std::vector<int64_t> lens;
  std::vector<Shape> part_shapes;
  for (const Tensor& p : parts) {
    lens.push_back(p.dim(axis));
    part_shapes.push_back(p.shape());
  }

  Tensor out = make_op_result(
      os, parts[0].dtype(), parts, "concat",
      [lens, part_shapes, inner, outer, total_axis](
          const Tensor& gout, std::vector<Tensor>& gin) {
        dispatch(gout.dtype(), [&](auto tag) {
          using T = decltype(tag);
          const T* go = gout.data<T>();
          int64_t off = 0;
          for (size_t pi = 0; pi < lens.size(); ++pi) {
            int64_t len = lens[pi];
            Tensor g = Tensor::zeros(part_shapes[pi], gout.dtype());
            T* gp = g.data<T>();
            for (int64_t o = 0; o < outer; ++o)
              std::memcpy(gp + o * len * inner,
                          go + (o * total_axis + off) * inner,
                          static_cast<size_t>(len * inner) * sizeof(T));
            gin[pi] = g;
            off += len;
          }
        });
      });
  // Forward copy.
  dispatch(parts[0].dtype(), [&](auto tag) {
    using T = decltype(tag);
    T* dst = out.data<T>();
    int64_t off = 0;
    for (size_t pi = 0; pi < parts.size(); ++pi) {
      const T* src = parts[pi].data<T>();
      int64_t len = lens[pi];
      for (int64_t o = 0; o < outer; ++o)
        std::memcpy(dst + (o * total_axis + off) * inner,
                    src + o * len * inner,
                    static_cast<size_t>(len * inner) * sizeof(T));
      off += len;
    }
  });
  return out;
}

}  // namespace lfnr

// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include <vector>

#include "ops_common.hpp"

namespace lfnr {

using detail::check_dtype;
using detail::CMapRM;
using detail::dispatch;
using detail::MapRM;
using detail::MatRM;

namespace {

void check_kernel(int k, const char* op) {
  if (k != 1 && k != 3 && k != 4)
    throw ShapeError(std::string(op) + ": unsupported kernel size " +
                     std::to_string(k));
}

int64_t conv_out(int64_t in, int k, int stride, int pad, const char* op) {
  int64_t out = (in + 2 * pad - k) / stride + 1;
  if (in + 2 * pad < k || out < 1)
    throw ShapeError(std::string(op) + ": spatial extent " +
                     std::to_string(in) + " too small for kernel " +
                     std::to_string(k));
  return out;
}

// col: (Cin*k*k, Ho*Wo) from x: (Cin,H,W).
template <typename T>
void im2col2d(const T* x, int64_t cin, int64_t h, int64_t w, int k, int s,
              int p, int64_t ho, int64_t wo, T* col) {
  for (int64_t c = 0; c < cin; ++c)
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        T* row = col + ((c * k + i) * k + j) * ho * wo;
        const T* src = x + c * h * w;
        for (int64_t oy = 0; oy < ho; ++oy) {
          int64_t iy = oy * s + i - p;
          if (iy < 0 || iy >= h) {
            for (int64_t ox = 0; ox < wo; ++ox) row[oy * wo + ox] = T(0);
            continue;
          }
          for (int64_t ox = 0; ox < wo; ++ox) {
            int64_t ix = ox * s + j - p;
            row[oy * wo + ox] =
                (ix >= 0 && ix < w) ? src[iy * w + ix] : T(0);
          }
        }
      }
}

// Scatter-add transpose of im2col2d.
template <typename T>
void col2im2d(const T* col, int64_t cin, int64_t h, int64_t w, int k, int s,
              int p, int64_t ho, int64_t wo, T* x) {
  for (int64_t c = 0; c < cin; ++c)
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        const T* row = col + ((c * k + i) * k + j) * ho * wo;
        T* dst = x + c * h * w;
        for (int64_t oy = 0; oy < ho; ++oy) {
          int64_t iy = oy * s + i - p;
          if (iy < 0 || iy >= h) continue;
          for (int64_t ox = 0; ox < wo; ++ox) {
            int64_t ix = ox * s + j - p;
            if (ix >= 0 && ix < w) dst[iy * w + ix] += row[oy * wo + ox];
          }
        }
      }
}

// col: (Cin*k^3, Do*Ho*Wo) from x: (Cin,D,H,W).
template <typename T>
void im2col3d(const T* x, int64_t cin, int64_t d, int64_t h, int64_t w, int k,
              int s, int p, int64_t dout, int64_t ho, int64_t wo, T* col) {
  for (int64_t c = 0; c < cin; ++c)
    for (int a = 0; a < k; ++a)
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
          T* row = col + (((c * k + a) * k + i) * k + j) * dout * ho * wo;
          const T* src = x + c * d * h * w;
          for (int64_t oz = 0; oz < dout; ++oz) {
            int64_t iz = oz * s + a - p;
            for (int64_t oy = 0; oy < ho; ++oy) {
              int64_t iy = oy * s + i - p;
              T* rr = row + (oz * ho + oy) * wo;
              if (iz < 0 || iz >= d || iy < 0 || iy >= h) {
                for (int64_t ox = 0; ox < wo; ++ox) rr[ox] = T(0);
                continue;
              }
              const T* ss = src + (iz * h + iy) * w;
              for (int64_t ox = 0; ox < wo; ++ox) {
                int64_t ix = ox * s + j - p;
                rr[ox] = (ix >= 0 && ix < w) ? ss[ix] : T(0);
              }
            }
          }
        }
}

template <typename T>
void col2im3d(const T* col, int64_t cin, int64_t d, int64_t h, int64_t w,
              int k, int s, int p, int64_t dout, int64_t ho, int64_t wo,
              T* x) {
  for (int64_t c = 0; c < cin; ++c)
    for (int a = 0; a < k; ++a)
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
          const T* row = col + (((c * k + a) * k + i) * k + j) * dout * ho * wo;
          T* dst = x + c * d * h * w;
          for (int64_t oz = 0; oz < dout; ++oz) {
            int64_t iz = oz * s + a - p;
            if (iz < 0 || iz >= d) continue;
            for (int64_t oy = 0; oy < ho; ++oy) {
              int64_t iy = oy * s + i - p;
              if (iy < 0 || iy >= h) continue;
              const T* rr = row + (oz * ho + oy) * wo;
              T* ss = dst + (iz * h + iy) * w;
              for (int64_t ox = 0; ox < wo; ++ox) {
                int64_t ix = ox * s + j - p;
                if (ix >= 0 && ix < w) ss[ix] += rr[ox];
              }
            }
          }
        }
}

template <typename T>
void add_bias_rows(T* y, const T* b, int64_t rows, int64_t cols) {
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t c = 0; c < cols; ++c) y[r * cols + c] += b[r];
}

template <typename T>
void bias_grad_rows(const T* go, T* gb, int64_t rows, int64_t cols) {
  for (int64_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (int64_t c = 0; c < cols; ++c)
      acc += static_cast<double>(go[r * cols + c]);
    gb[r] = static_cast<T>(acc);
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int padding) {
  if (x.ndim() != 3 || w.ndim() != 4)
    throw ShapeError("conv2d: x " + shape_str(x.shape()) + ", w " +
                     shape_str(w.shape()));
  check_dtype(x, w, "conv2d");
  int64_t cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  int64_t cout = w.dim(0);
  int k = static_cast<int>(w.dim(2));
  check_kernel(k, "conv2d");
  if (w.dim(1) != cin || w.dim(3) != k)
    throw ShapeError("conv2d: x " + shape_str(x.shape()) + " vs w " +
                     shape_str(w.shape()));
  int64_t ho = conv_out(h, k, stride, padding, "conv2d");
  int64_t wo = conv_out(wd, k, stride, padding, "conv2d");
  int64_t kk = cin * k * k, m = ho * wo;

  Tensor out = make_op_result(
      {cout, ho, wo}, x.dtype(), {x, w, b}, "conv2d",
      [=](const Tensor& gout, std::vector<Tensor>& gin) {
        Tensor gx = Tensor::zeros(x.shape(), x.dtype());
        Tensor gw = Tensor::zeros(w.shape(), w.dtype());
        dispatch(x.dtype(), [&](auto tag) {
          using T = decltype(tag);
          std::vector<T> col(static_cast<size_t>(kk * m));
          im2col2d(x.data<T>(), cin, h, wd, k, stride, padding, ho, wo,
                   col.data());
          CMapRM<T> GO(gout.data<T>(), cout, m), COL(col.data(), kk, m),
              W(w.data<T>(), cout, kk);
          MapRM<T> GW(gw.data<T>(), cout, kk);
          GW.noalias() = GO * COL.transpose();
          MatRM<T> gcol(kk, m);
          gcol.noalias() = W.transpose() * GO;
          col2im2d(gcol.data(), cin, h, wd, k, stride, padding, ho, wo,
                   gx.data<T>());
        });
        gin[0] = gx;
        gin[1] = gw;
        if (b.defined()) {
          Tensor gb = Tensor::zeros({cout}, x.dtype());
          dispatch(x.dtype(), [&](auto tag) {
            using T = decltype(tag);
            bias_grad_rows(gout.data<T>(), gb.data<T>(), cout, m);
          });
          gin[2] = gb;
        }
      });
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    std::vector<T> col(static_cast<size_t>(kk * m));
    im2col2d(x.data<T>(), cin, h, wd, k, stride, padding, ho, wo, col.data());
    CMapRM<T> W(w.data<T>(), cout, kk), COL(col.data(), kk, m);
    MapRM<T> Y(out.data<T>(), cout, m);
    Y.noalias() = W * COL;
    if (b.defined()) add_bias_rows(out.data<T>(), b.data<T>(), cout, m);
  });
  return out;
}

Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b,
                        int stride, int padding) {
  if (x.ndim() != 3 || w.ndim() != 4)
    throw ShapeError("conv_transpose2d: x " + shape_str(x.shape()) + ", w " +
                     shape_str(w.shape()));
  check_dtype(x, w, "conv_transpose2d");
  int64_t cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  if (w.dim(0) != cin)
    throw ShapeError("conv_transpose2d: x " + shape_str(x.shape()) + " vs w " +
                     shape_str(w.shape()));
  int64_t cout = w.dim(1);
  int k = static_cast<int>(w.dim(2));
  check_kernel(k, "conv_transpose2d");
  int64_t ho = (h - 1) * stride - 2 * padding + k;
  int64_t wo = (wd - 1) * stride - 2 * padding + k;
  if (ho < 1 || wo < 1) throw ShapeError("conv_transpose2d: empty output");
  int64_t kk = cout * k * k, m = h * wd;

  Tensor out = make_op_result(
      {cout, ho, wo}, x.dtype(), {x, w, b}, "conv_transpose2d",
      [=](const Tensor& gout, std::vector<Tensor>& gin) {
        Tensor gx = Tensor::zeros(x.shape(), x.dtype());
        Tensor gw = Tensor::zeros(w.shape(), w.dtype());
        dispatch(x.dtype(), [&](auto tag) {
          using T = decltype(tag);
          // im2col over gout has spatial count exactly h*wd.
          std::vector<T> col(static_cast<size_t>(kk * m));
          im2col2d(gout.data<T>(), cout, ho, wo, k, stride, padding, h, wd,
                   col.data());
          CMapRM<T> X(x.data<T>(), cin, m), W(w.data<T>(), cin, kk),
              COL(col.data(), kk, m);
          MapRM<T> GX(gx.data<T>(), cin, m), GW(gw.data<T>(), cin, kk);
          GX.noalias() = W * COL;
          GW.noalias() = X * COL.transpose();
        });
        gin[0] = gx;
        gin[1] = gw;
        if (b.defined()) {
          Tensor gb = Tensor::zeros({cout}, x.dtype());
          dispatch(x.dtype(), [&](auto tag) {
            using T = decltype(tag);
            bias_grad_rows(gout.data<T>(), gb.data<T>(), cout, ho * wo);
          });
          gin[2] = gb;
        }
      });
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    CMapRM<T> W(w.data<T>(), cin, kk), X(x.data<T>(), cin, m);
    MatRM<T> col(kk, m);
    col.noalias() = W.transpose() * X;
    col2im2d(col.data(), cout, ho, wo, k, stride, padding, h, wd,
             out.data<T>());
    if (b.defined()) add_bias_rows(out.data<T>(), b.data<T>(), cout, ho * wo);
  });
  return out;
}

Tensor conv3d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int padding) {
  if (x.ndim() != 4 || w.ndim() != 5)
    throw ShapeError("conv3d: x " + shape_str(x.shape()) + ", w " +
                     shape_str(w.shape()));
  check_dtype(x, w, "conv3d");
  int64_t cin = x.dim(0), d = x.dim(1), h = x.dim(2), wd = x.dim(3);
  int64_t cout = w.dim(0);
  int k = static_cast<int>(w.dim(2));
  check_kernel(k, "conv3d");
  if (w.dim(1) != cin || w.dim(3) != k || w.dim(4) != k)
    throw ShapeError("conv3d: x " + shape_str(x.shape()) + " vs w " +
                     shape_str(w.shape()));
  int64_t dout = conv_out(d, k, stride, padding, "conv3d");
  int64_t ho = conv_out(h, k, stride, padding, "conv3d");
  int64_t wo = conv_out(wd, k, stride, padding, "conv3d");
  int64_t kk = cin * k * k * k, m = dout * ho * wo;

  Tensor out = make_op_result(
      {cout, dout, ho, wo}, x.dtype(), {x, w, b}, "conv3d",
      [=](const Tensor& gout, std::vector<Tensor>& gin) {
        Tensor gx = Tensor::zeros(x.shape(), x.dtype());
        Tensor gw = Tensor::zeros(w.shape(), w.dtype());
        dispatch(x.dtype(), [&](auto tag) {
          using T = decltype(tag);
          std::vector<T> col(static_cast<size_t>(kk * m));
          im2col3d(x.data<T>(), cin, d, h, wd, k, stride, padding, dout, ho,
                   wo, col.data());
          CMapRM<T> GO(gout.data<T>(), cout, m), COL(col.data(), kk, m),
              W(w.data<T>(), cout, kk);
          MapRM<T> GW(gw.data<T>(), cout, kk);
          GW.noalias() = GO * COL.transpose();
          MatRM<T> gcol(kk, m);
          gcol.noalias() = W.transpose() * GO;
          col2im3d(gcol.data(), cin, d, h, wd, k, stride, padding, dout, ho,
                   wo, gx.data<T>());
        });
        gin[0] = gx;
        gin[1] = gw;
        if (b.defined()) {
          Tensor gb = Tensor::zeros({cout}, x.dtype());
          dispatch(x.dtype(), [&](auto tag) {
            using T = decltype(tag);
            bias_grad_rows(gout.data<T>(), gb.data<T>(), cout, m);
          });
          gin[2] = gb;
        }
      });
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    std::vector<T> col(static_cast<size_t>(kk * m));
    im2col3d(x.data<T>(), cin, d, h, wd, k, stride, padding, dout, ho, wo,
             col.data());
    CMapRM<T> W(w.data<T>(), cout, kk), COL(col.data(), kk, m);
    MapRM<T> Y(out.data<T>(), cout, m);
    Y.noalias() = W * COL;
    if (b.defined()) add_bias_rows(out.data<T>(), b.data<T>(), cout, m);
  });
  return out;
}

Tensor conv_transpose3d(const Tensor& x, const Tensor& w, const Tensor& b,
                        int stride, int padding) {
  if (x.ndim() != 4 || w.ndim() != 5)
    throw ShapeError("conv_transpose3d: x " + shape_str(x.shape()) + ", w " +
                     shape_str(w.shape()));
  check_dtype(x, w, "conv_transpose3d");
  int64_t cin = x.dim(0), d = x.dim(1), h = x.dim(2), wd = x.dim(3);
  if (w.dim(0) != cin)
    throw ShapeError("conv_transpose3d: x " + shape_str(x.shape()) + " vs w " +
                     shape_str(w.shape()));
  int64_t cout = w.dim(1);
  int k = static_cast<int>(w.dim(2));
  check_kernel(k, "conv_transpose3d");
  int64_t dout = (d - 1) * stride - 2 * padding + k;
  int64_t ho = (h - 1) * stride - 2 * padding + k;
  int64_t wo = (wd - 1) * stride - 2 * padding + k;
  if (dout < 1 || ho < 1 || wo < 1)
    throw ShapeError("conv_transpose3d: empty output");
  int64_t kk = cout * k * k * k, m = d * h * wd;

  Tensor out = make_op_result(
      {cout, dout, ho, wo}, x.dtype(), {x, w, b}, "conv_transpose3d",
      [=](const Tensor& gout, std::vector<Tensor>& gin) {
        Tensor gx = Tensor::zeros(x.shape(), x.dtype());
        Tensor gw = Tensor::zeros(w.shape(), w.dtype());
        dispatch(x.dtype(), [&](auto tag) {
          using T = decltype(tag);
          std::vector<T> col(static_cast<size_t>(kk * m));
          im2col3d(gout.data<T>(), cout, dout, ho, wo, k, stride, padding, d,
                   h, wd, col.data());
          CMapRM<T> X(x.data<T>(), cin, m), W(w.data<T>(), cin, kk),
              COL(col.data(), kk, m);
          MapRM<T> GX(gx.data<T>(), cin, m), GW(gw.data<T>(), cin, kk);
          GX.noalias() = W * COL;
          GW.noalias() = X * COL.transpose();
        });
        gin[0] = gx;
        gin[1] = gw;
        if (b.defined()) {
          Tensor gb = Tensor::zeros({cout}, x.dtype());
          dispatch(x.dtype(), [&](auto tag) {
            using T = decltype(tag);
            bias_grad_rows(gout.data<T>(), gb.data<T>(), cout,
                           dout * ho * wo);
          });
          gin[2] = gb;
        }
      });
  dispatch(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    CMapRM<T> W(w.data<T>(), cin, kk), X(x.data<T>(), cin, m);
    MatRM<T> col(kk, m);
    col.noalias() = W.transpose() * X;
    col2im3d(col.data(), cout, dout, ho, wo, k, stride, padding, d, h, wd,
             out.data<T>());
    if (b.defined())
      add_bias_rows(out.data<T>(), b.data<T>(), cout, dout * ho * wo);
  });
  return out;
}

}  // namespace lfnr

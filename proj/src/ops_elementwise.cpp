// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "ops_common.hpp"

namespace lfnr {

using detail::check_same;
using detail::dispatch;

namespace {

// Shared skeleton for unary maps: y = f(x), gx = df(x, y) .* gout.
template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& a, const char* name, Fwd fwd, Bwd bwd) {
  Tensor out = make_op_result(
      a.shape(), a.dtype(), {a}, name,
      [a, bwd](const Tensor& gout, std::vector<Tensor>& gin) {
        Tensor g = Tensor::zeros(a.shape(), a.dtype());
        dispatch(a.dtype(), [&](auto tag) {
          using T = decltype(tag);
          const T* x = a.data<T>();
          const T* go = gout.data<T>();
          T* gx = g.data<T>();
          int64_t n = a.numel();
          for (int64_t i = 0; i < n; ++i)
            gx[i] = static_cast<T>(bwd(static_cast<double>(x[i])) *
                                   static_cast<double>(go[i]));
        });
        gin[0] = g;
      });
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* x = a.data<T>();
    T* y = out.data<T>();
    int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i)
      y[i] = static_cast<T>(fwd(static_cast<double>(x[i])));
  });
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same(a, b, "add");
  Tensor out = make_op_result(
      a.shape(), a.dtype(), {a, b}, "add",
      [](const Tensor& gout, std::vector<Tensor>& gin) {
        gin[0] = gout.clone();
        gin[1] = gout.clone();
      });
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = a.data<T>();
    const T* pb = b.data<T>();
    T* py = out.data<T>();
    int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) py[i] = pa[i] + pb[i];
  });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same(a, b, "sub");
  Tensor out = make_op_result(
      a.shape(), a.dtype(), {a, b}, "sub",
      [](const Tensor& gout, std::vector<Tensor>& gin) {
        gin[0] = gout.clone();
        Tensor gb = Tensor::zeros(gout.shape(), gout.dtype());
        dispatch(gout.dtype(), [&](auto tag) {
          using T = decltype(tag);
          const T* go = gout.data<T>();
          T* g = gb.data<T>();
          int64_t n = gout.numel();
          for (int64_t i = 0; i < n; ++i) g[i] = -go[i];
        });
        gin[1] = gb;
      });
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = a.data<T>();
    const T* pb = b.data<T>();
    T* py = out.data<T>();
    int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) py[i] = pa[i] - pb[i];
  });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same(a, b, "mul");
  Tensor out = make_op_result(
      a.shape(), a.dtype(), {a, b}, "mul",
      [a, b](const Tensor& gout, std::vector<Tensor>& gin) {
        Tensor ga = Tensor::zeros(a.shape(), a.dtype());
        Tensor gb = Tensor::zeros(b.shape(), b.dtype());
        dispatch(a.dtype(), [&](auto tag) {
          using T = decltype(tag);
          const T* pa = a.data<T>();
          const T* pb = b.data<T>();
          const T* go = gout.data<T>();
          T* pga = ga.data<T>();
          T* pgb = gb.data<T>();
          int64_t n = a.numel();
          for (int64_t i = 0; i < n; ++i) {
            pga[i] = go[i] * pb[i];
            pgb[i] = go[i] * pa[i];
          }
        });
        gin[0] = ga;
        gin[1] = gb;
      });
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* pa = a.data<T>();
    const T* pb = b.data<T>();
    T* py = out.data<T>();
    int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) py[i] = pa[i] * pb[i];
  });
  return out;
}

Tensor scale(const Tensor& a, double s) {
  return unary_op(
      a, "scale", [s](double x) { return s * x; },
      [s](double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary_op(
      a, "add_scalar", [s](double x) { return x + s; },
      [](double) { return 1.0; });
}

Tensor abs(const Tensor& a) {
  return unary_op(
      a, "abs", [](double x) { return std::fabs(x); },
      [](double x) { return x < 0.0 ? -1.0 : 1.0; });
}

Tensor relu(const Tensor& a) {
  return unary_op(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary_op(
      a, "sigmoid",
      [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double x) {
        double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 - s);
      });
}

Tensor softplus(const Tensor& a) {
  // log(1+e^x) in overflow-safe form; derivative is sigmoid.
  return unary_op(
      a, "softplus",
      [](double x) { return std::log1p(std::exp(-std::fabs(x))) +
                            (x > 0.0 ? x : 0.0); },
      [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

Tensor softmax(const Tensor& a, int axis) {
  int nd = a.ndim();
  if (axis < 0 || axis >= nd)
    throw ShapeError("softmax: axis " + std::to_string(axis) +
                     " out of range for shape " + shape_str(a.shape()));
  const Shape& s = a.shape();
  int64_t n_axis = s[static_cast<size_t>(axis)];
  int64_t inner = 1, outer = 1;
  for (int i = axis + 1; i < nd; ++i) inner *= s[static_cast<size_t>(i)];
  for (int i = 0; i < axis; ++i) outer *= s[static_cast<size_t>(i)];

  Tensor out = Tensor::zeros(s, a.dtype());
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* x = a.data<T>();
    T* y = out.data<T>();
    for (int64_t o = 0; o < outer; ++o)
      for (int64_t i = 0; i < inner; ++i) {
        const T* xs = x + o * n_axis * inner + i;
        T* ys = y + o * n_axis * inner + i;
        double mx = -1e300;
        for (int64_t k = 0; k < n_axis; ++k)
          mx = std::max(mx, static_cast<double>(xs[k * inner]));
        double z = 0.0;
        for (int64_t k = 0; k < n_axis; ++k)
          z += std::exp(static_cast<double>(xs[k * inner]) - mx);
        for (int64_t k = 0; k < n_axis; ++k)
          ys[k * inner] = static_cast<T>(
              std::exp(static_cast<double>(xs[k * inner]) - mx) / z);
      }
  });

  Tensor result = make_op_result(
      s, a.dtype(), {a}, "softmax",
      [out, n_axis, inner, outer](const Tensor& gout,
                                  std::vector<Tensor>& gin) {
        // gx_k = y_k (g_k - sum_j y_j g_j)
        Tensor g = Tensor::zeros(out.shape(), out.dtype());
        dispatch(out.dtype(), [&](auto tag) {
          using T = decltype(tag);
          const T* y = out.data<T>();
          const T* go = gout.data<T>();
          T* gx = g.data<T>();
          for (int64_t o = 0; o < outer; ++o)
            for (int64_t i = 0; i < inner; ++i) {
              int64_t base = o * n_axis * inner + i;
              double dot = 0.0;
              for (int64_t k = 0; k < n_axis; ++k)
                dot += static_cast<double>(y[base + k * inner]) *
                       static_cast<double>(go[base + k * inner]);
              for (int64_t k = 0; k < n_axis; ++k)
                gx[base + k * inner] = static_cast<T>(
                    static_cast<double>(y[base + k * inner]) *
                    (static_cast<double>(go[base + k * inner]) - dot));
            }
        });
        gin[0] = g;
      });
  // make_op_result allocated zeros; adopt the computed values.
  result.impl()->f32 = out.impl()->f32;
  result.impl()->f64 = out.impl()->f64;
  return result;
}

Tensor broadcast_hw(const Tensor& v, int64_t h, int64_t w) {
  if (v.ndim() != 1) throw ShapeError("broadcast_hw: expected 1-D vector");
  int64_t c = v.dim(0);
  Tensor out = make_op_result(
      {c, h, w}, v.dtype(), {v}, "broadcast_hw",
      [c, h, w](const Tensor& gout, std::vector<Tensor>& gin) {
        Tensor g = Tensor::zeros({c}, gout.dtype());
        dispatch(gout.dtype(), [&](auto tag) {
          using T = decltype(tag);
          const T* go = gout.data<T>();
          T* gv = g.data<T>();
          for (int64_t k = 0; k < c; ++k) {
            double acc = 0.0;
            const T* p = go + k * h * w;
            for (int64_t i = 0; i < h * w; ++i) acc += p[i];
            gv[k] = static_cast<T>(acc);
          }
        });
        gin[0] = g;
      });
  dispatch(v.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* src = v.data<T>();
    T* dst = out.data<T>();
    for (int64_t k = 0; k < c; ++k)
      for (int64_t i = 0; i < h * w; ++i) dst[k * h * w + i] = src[k];
  });
  return out;
}

Tensor sum_all(const Tensor& a) {
  Tensor out = make_op_result(
      {1}, a.dtype(), {a}, "sum_all",
      [a](const Tensor& gout, std::vector<Tensor>& gin) {
        gin[0] = Tensor::full(a.shape(), gout.item(), a.dtype());
      });
  double acc = 0.0;
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* x = a.data<T>();
    int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) acc += static_cast<double>(x[i]);
  });
  if (a.dtype() == DType::F32)
    out.data<float>()[0] = static_cast<float>(acc);
  else
    out.data<double>()[0] = acc;
  return out;
}

Tensor mean_all(const Tensor& a) {
  int64_t n = a.numel();
  Tensor out = make_op_result(
      {1}, a.dtype(), {a}, "mean_all",
      [a, n](const Tensor& gout, std::vector<Tensor>& gin) {
        gin[0] = Tensor::full(a.shape(), gout.item() / static_cast<double>(n),
                              a.dtype());
      });
  double acc = 0.0;
  dispatch(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* x = a.data<T>();
    for (int64_t i = 0; i < n; ++i) acc += static_cast<double>(x[i]);
  });
  acc /= static_cast<double>(n);
  if (a.dtype() == DType::F32)
    out.data<float>()[0] = static_cast<float>(acc);
  else
    out.data<double>()[0] = acc;
  return out;
}

void adam_step(Tensor& param, const Tensor& grad, AdamState& state,
               int64_t step, double lr, double beta1, double beta2,
               double eps) {
  check_same(param, grad, "adam_step");
  if (!state.m.defined()) {
    state.m = Tensor::zeros(param.shape(), param.dtype());
    state.v = Tensor::zeros(param.shape(), param.dtype());
  }
  check_same(param, state.m, "adam_step");
  int64_t n = param.numel();
  dispatch(param.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const T* g = grad.data<T>();
    for (int64_t i = 0; i < n; ++i)
      if (!std::isfinite(static_cast<double>(g[i])))
        throw NumericError("adam_step: non-finite gradient");
    T* p = param.data<T>();
    T* m = state.m.data<T>();
    T* v = state.v.data<T>();
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (int64_t i = 0; i < n; ++i) {
      double gi = static_cast<double>(g[i]);
      double mi = beta1 * static_cast<double>(m[i]) + (1.0 - beta1) * gi;
      double vi = beta2 * static_cast<double>(v[i]) + (1.0 - beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      double mhat = mi / bc1;
      double vhat = vi / bc2;
      p[i] = static_cast<T>(static_cast<double>(p[i]) -
                            lr * mhat / (std::sqrt(vhat) + eps));
    }
  });
}

}  // namespace lfnr

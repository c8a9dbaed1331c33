// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "lfnr/ops.hpp"
#include "lfnr/tensor.hpp"

namespace lfnr {

// Ordered registry of named parameter tensors. Entries alias the tensors
// owned by the layer structs (Tensor is a shared handle), so stepping a
// registered tensor updates the layer in place. Registration order defines
// the checkpoint layout.
struct ParamStore {
  std::vector<std::string> order;
  std::unordered_map<std::string, Tensor> by_name;

  void add(const std::string& name, const Tensor& t);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const { return by_name.count(name) > 0; }
  int64_t total_numel() const;
  void zero_grads();
};

// U(-1/sqrt(fan), 1/sqrt(fan)) with fan = numel/shape[0]; requires_grad set.
Tensor init_uniform_fan(const Shape& s, Rng& rng, DType dt);
Tensor init_zero_param(const Shape& s, DType dt);

struct Linear {
  Tensor w, b;  // w: (out, in)
  void init(int64_t in, int64_t out, Rng& rng, DType dt);
  void reg(ParamStore& ps, const std::string& prefix);
  Tensor operator()(const Tensor& x) const { return linear(x, w, b); }
};

struct Conv2dLayer {
  Tensor w, b;  // w: (cout, cin, k, k)
  int stride = 1, padding = 0;
  void init(int64_t cin, int64_t cout, int k, int stride, int padding,
            Rng& rng, DType dt);
  void reg(ParamStore& ps, const std::string& prefix);
  Tensor operator()(const Tensor& x) const {
    return conv2d(x, w, b, stride, padding);
  }
};

struct ConvT2dLayer {
  Tensor w, b;  // w: (cin, cout, k, k)
  int stride = 1, padding = 0;
  void init(int64_t cin, int64_t cout, int k, int stride, int padding,
            Rng& rng, DType dt);
  void reg(ParamStore& ps, const std::string& prefix);
  Tensor operator()(const Tensor& x) const {
    return conv_transpose2d(x, w, b, stride, padding);
  }
};

struct Conv3dLayer {
  Tensor w, b;  // w: (cout, cin, k, k, k)
  int stride = 1, padding = 0;
  void init(int64_t cin, int64_t cout, int k, int stride, int padding,
            Rng& rng, DType dt);
  void reg(ParamStore& ps, const std::string& prefix);
  Tensor operator()(const Tensor& x) const {
    return conv3d(x, w, b, stride, padding);
  }
};

struct ConvT3dLayer {
  Tensor w, b;  // w: (cin, cout, k, k, k)
  int stride = 1, padding = 0;
  void init(int64_t cin, int64_t cout, int k, int stride, int padding,
            Rng& rng, DType dt);
  void reg(ParamStore& ps, const std::string& prefix);
  Tensor operator()(const Tensor& x) const {
    return conv_transpose3d(x, w, b, stride, padding);
  }
};

// Post-activation residual block: relu(x + c2(relu(c1(x)))); the trailing
// relu is dropped when trailing_relu is false so logits stay signed.
struct ResBlock2d {
  Conv2dLayer c1, c2;
  bool trailing_relu = true;
  void init(int64_t ch, Rng& rng, DType dt);
  void reg(ParamStore& ps, const std::string& prefix);
  Tensor operator()(const Tensor& x) const;
};

struct ResBlock3d {
  Conv3dLayer c1, c2;
  bool trailing_relu = true;
  void init(int64_t ch, Rng& rng, DType dt);
  void reg(ParamStore& ps, const std::string& prefix);
  Tensor operator()(const Tensor& x) const;
};

// Throws NumericError naming `stage` if any element is not finite.
void check_finite(const Tensor& t, const char* stage);

}  // namespace lfnr

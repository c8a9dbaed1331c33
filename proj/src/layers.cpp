// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include "lfnr/layers.hpp"

#include <cmath>

namespace lfnr {

void ParamStore::add(const std::string& name, const Tensor& t) {
  if (by_name.count(name))
    throw ContractError("ParamStore: duplicate parameter " + name);
  order.push_back(name);
  by_name.emplace(name, t);
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = by_name.find(name);
  if (it == by_name.end())
    throw ContractError("ParamStore: unknown parameter " + name);
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = by_name.find(name);
  if (it == by_name.end())
    throw ContractError("ParamStore: unknown parameter " + name);
  return it->second;
}

int64_t ParamStore::total_numel() const {
  int64_t n = 0;
  for (const auto& name : order) n += by_name.at(name).numel();
  return n;
}

void ParamStore::zero_grads() {
  for (const auto& name : order) by_name.at(name).zero_grad();
}

Tensor init_uniform_fan(const Shape& s, Rng& rng, DType dt) {
  int64_t fan = shape_numel(s) / s[0];
  double bound = 1.0 / std::sqrt(static_cast<double>(fan));
  return Tensor::uniform(s, -bound, bound, rng, dt, true);
}

Tensor init_zero_param(const Shape& s, DType dt) {
  return Tensor::zeros(s, dt, true);
}

void Linear::init(int64_t in, int64_t out, Rng& rng, DType dt) {
  w = init_uniform_fan({out, in}, rng, dt);
  b = init_zero_param({out}, dt);
}

void Linear::reg(ParamStore& ps, const std::string& prefix) {
  ps.add(prefix + ".w", w);
  ps.add(prefix + ".b", b);
}

void Conv2dLayer::init(int64_t cin, int64_t cout, int k, int stride_,
                       int padding_, Rng& rng, DType dt) {
  stride = stride_;
  padding = padding_;
  w = init_uniform_fan({cout, cin, k, k}, rng, dt);
  b = init_zero_param({cout}, dt);
}

void Conv2dLayer::reg(ParamStore& ps, const std::string& prefix) {
  ps.add(prefix + ".w", w);
  ps.add(prefix + ".b", b);
}

void ConvT2dLayer::init(int64_t cin, int64_t cout, int k, int stride_,
                        int padding_, Rng& rng, DType dt) {
  stride = stride_;
  padding = padding_;
  w = init_uniform_fan({cin, cout, k, k}, rng, dt);
  b = init_zero_param({cout}, dt);
}

void ConvT2dLayer::reg(ParamStore& ps, const std::string& prefix) {
  ps.add(prefix + ".w", w);
  ps.add(prefix + ".b", b);
}

void Conv3dLayer::init(int64_t cin, int64_t cout, int k, int stride_,
                       int padding_, Rng& rng, DType dt) {
  stride = stride_;
  padding = padding_;
  w = init_uniform_fan({cout, cin, k, k, k}, rng, dt);
  b = init_zero_param({cout}, dt);
}

void Conv3dLayer::reg(ParamStore& ps, const std::string& prefix) {
  ps.add(prefix + ".w", w);
  ps.add(prefix + ".b", b);
}

void ConvT3dLayer::init(int64_t cin, int64_t cout, int k, int stride_,
                        int padding_, Rng& rng, DType dt) {
  stride = stride_;
  padding = padding_;
  w = init_uniform_fan({cin, cout, k, k, k}, rng, dt);
  b = init_zero_param({cout}, dt);
}

void ConvT3dLayer::reg(ParamStore& ps, const std::string& prefix) {
  ps.add(prefix + ".w", w);
  ps.add(prefix + ".b", b);
}

void ResBlock2d::init(int64_t ch, Rng& rng, DType dt) {
  c1.init(ch, ch, 3, 1, 1, rng, dt);
  c2.init(ch, ch, 3, 1, 1, rng, dt);
}

void ResBlock2d::reg(ParamStore& ps, const std::string& prefix) {
  c1.reg(ps, prefix + ".c1");
  c2.reg(ps, prefix + ".c2");
}

Tensor ResBlock2d::operator()(const Tensor& x) const {
  Tensor y = add(x, c2(relu(c1(x))));
  return trailing_relu ? relu(y) : y;
}

void ResBlock3d::init(int64_t ch, Rng& rng, DType dt) {
  c1.init(ch, ch, 3, 1, 1, rng, dt);
  c2.init(ch, ch, 3, 1, 1, rng, dt);
}

void ResBlock3d::reg(ParamStore& ps, const std::string& prefix) {
  c1.reg(ps, prefix + ".c1");
  c2.reg(ps, prefix + ".c2");
}

Tensor ResBlock3d::operator()(const Tensor& x) const {
  Tensor y = add(x, c2(relu(c1(x))));
  return trailing_relu ? relu(y) : y;
}

void check_finite(const Tensor& t, const char* stage) {
  bool ok = true;
  if (t.dtype() == DType::F32) {
    const float* p = t.data<float>();
    for (int64_t i = 0, n = t.numel(); i < n; ++i)
      if (!std::isfinite(p[i])) {
        ok = false;
        break;
      }
  } else {
    const double* p = t.data<double>();
    for (int64_t i = 0, n = t.numel(); i < n; ++i)
      if (!std::isfinite(p[i])) {
        ok = false;
        break;
      }
  }
  if (!ok)
    throw NumericError(std::string("non-finite values in stage ") + stage);
}

}  // namespace lfnr

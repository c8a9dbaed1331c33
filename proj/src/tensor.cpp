// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include "lfnr/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace lfnr {

namespace {

std::atomic<uint64_t> g_seq{1};
thread_local int g_no_grad_depth = 0;

std::shared_ptr<TensorImpl> alloc_impl(const Shape& s, DType dt) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = s;
  impl->dtype = dt;
  int64_t n = shape_numel(s);
  if (dt == DType::F32)
    impl->f32.assign(static_cast<size_t>(n), 0.0f);
  else
    impl->f64.assign(static_cast<size_t>(n), 0.0);
  return impl;
}

}  // namespace

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t e : s) n *= e;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '(';
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ')';
  return os.str();
}

bool grad_enabled() { return g_no_grad_depth == 0; }

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }

Tensor Tensor::zeros(const Shape& s, DType dt, bool requires_grad) {
  Tensor t(alloc_impl(s, dt));
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::full(const Shape& s, double value, DType dt) {
  Tensor t = zeros(s, dt);
  if (dt == DType::F32)
    std::fill(t.impl_->f32.begin(), t.impl_->f32.end(),
              static_cast<float>(value));
  else
    std::fill(t.impl_->f64.begin(), t.impl_->f64.end(), value);
  return t;
}

Tensor Tensor::from_vector(const std::vector<double>& v, const Shape& s,
                           DType dt) {
  if (static_cast<int64_t>(v.size()) != shape_numel(s))
    throw ShapeError("from_vector: " + std::to_string(v.size()) +
                     " values for shape " + shape_str(s));
  Tensor t = zeros(s, dt);
  if (dt == DType::F32) {
    for (size_t i = 0; i < v.size(); ++i)
      t.impl_->f32[i] = static_cast<float>(v[i]);
  } else {
    std::copy(v.begin(), v.end(), t.impl_->f64.begin());
  }
  return t;
}

Tensor Tensor::uniform(const Shape& s, double lo, double hi, Rng& rng,
                       DType dt, bool requires_grad) {
  Tensor t = zeros(s, dt, requires_grad);
  int64_t n = t.numel();
  if (dt == DType::F32) {
    float* p = t.data<float>();
    for (int64_t i = 0; i < n; ++i)
      p[i] = static_cast<float>(rng.uniform(lo, hi));
  } else {
    double* p = t.data<double>();
    for (int64_t i = 0; i < n; ++i) p[i] = rng.uniform(lo, hi);
  }
  return t;
}

const Shape& Tensor::shape() const {
  if (!impl_) throw ContractError("shape() on undefined tensor");
  return impl_->shape;
}

int64_t Tensor::numel() const { return shape_numel(shape()); }

DType Tensor::dtype() const {
  if (!impl_) throw ContractError("dtype() on undefined tensor");
  return impl_->dtype;
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool v) {
  if (!impl_) throw ContractError("set_requires_grad on undefined tensor");
  if (v && impl_->node)
    throw ContractError("set_requires_grad: tensor is not a leaf");
  impl_->requires_grad = v;
  return *this;
}

template <>
float* Tensor::data<float>() {
  if (dtype() != DType::F32) throw ContractError("tensor is not f32");
  return impl_->f32.data();
}
template <>
double* Tensor::data<double>() {
  if (dtype() != DType::F64) throw ContractError("tensor is not f64");
  return impl_->f64.data();
}
template <>
const float* Tensor::data<float>() const {
  if (dtype() != DType::F32) throw ContractError("tensor is not f32");
  return impl_->f32.data();
}
template <>
const double* Tensor::data<double>() const {
  if (dtype() != DType::F64) throw ContractError("tensor is not f64");
  return impl_->f64.data();
}

double Tensor::item() const {
  if (numel() != 1)
    throw ContractError("item() on tensor of shape " + shape_str(shape()));
  return dtype() == DType::F32 ? static_cast<double>(impl_->f32[0])
                               : impl_->f64[0];
}

double Tensor::at(std::initializer_list<int64_t> idx) const {
  const Shape& s = shape();
  if (idx.size() != s.size())
    throw ShapeError("at(): rank mismatch for shape " + shape_str(s));
  int64_t flat = 0;
  size_t k = 0;
  for (int64_t i : idx) {
    flat = flat * s[k] + i;
    ++k;
  }
  return dtype() == DType::F32
             ? static_cast<double>(impl_->f32[static_cast<size_t>(flat)])
             : impl_->f64[static_cast<size_t>(flat)];
}

std::vector<double> Tensor::to_vector() const {
  std::vector<double> out(static_cast<size_t>(numel()));
  if (dtype() == DType::F32)
    for (size_t i = 0; i < out.size(); ++i)
      out[i] = static_cast<double>(impl_->f32[i]);
  else
    std::copy(impl_->f64.begin(), impl_->f64.end(), out.begin());
  return out;
}

Tensor Tensor::grad() const {
  if (!impl_ || !impl_->grad) return Tensor();
  return Tensor(impl_->grad);
}

void Tensor::zero_grad() {
  if (impl_) impl_->grad.reset();
}

Tensor Tensor::detach() const {
  if (!impl_) return Tensor();
  auto d = std::make_shared<TensorImpl>();
  d->shape = impl_->shape;
  d->dtype = impl_->dtype;
  d->f32 = impl_->f32;
  d->f64 = impl_->f64;
  return Tensor(std::move(d));
}

Tensor Tensor::clone() const {
  if (!impl_) return Tensor();
  Tensor t = zeros(impl_->shape, impl_->dtype, impl_->requires_grad);
  t.impl_->f32 = impl_->f32;
  t.impl_->f64 = impl_->f64;
  return t;
}

Tensor Tensor::to(DType dt) const {
  if (!impl_) return Tensor();
  if (dt == dtype()) return clone();
  Tensor t = zeros(impl_->shape, dt);
  int64_t n = numel();
  if (dt == DType::F32)
    for (int64_t i = 0; i < n; ++i)
      t.impl_->f32[static_cast<size_t>(i)] =
          static_cast<float>(impl_->f64[static_cast<size_t>(i)]);
  else
    for (int64_t i = 0; i < n; ++i)
      t.impl_->f64[static_cast<size_t>(i)] =
          static_cast<double>(impl_->f32[static_cast<size_t>(i)]);
  return t;
}

Tensor make_op_result(
    const Shape& shape, DType dt, std::vector<Tensor> inputs, const char* name,
    std::function<void(const Tensor&, std::vector<Tensor>&)> backward_fn) {
  Tensor out = Tensor::zeros(shape, dt);
  bool needs = false;
  if (grad_enabled())
    for (const Tensor& in : inputs)
      if (in.defined() && in.requires_grad()) needs = true;
  if (needs) {
    auto node = std::make_shared<Node>();
    node->seq = g_seq.fetch_add(1);
    node->name = name;
    for (Tensor& in : inputs)
      node->inputs.push_back(in.defined() ? in.impl() : nullptr);
    node->backward = std::move(backward_fn);
    out.impl()->node = std::move(node);
    out.impl()->requires_grad = true;
  }
  return out;
}

void accumulate_into(Tensor& dst, const Tensor& src) {
  if (dst.dtype() != src.dtype() || dst.shape() != src.shape())
    throw ShapeError("accumulate_into: " + shape_str(dst.shape()) + " vs " +
                     shape_str(src.shape()));
  int64_t n = dst.numel();
  if (dst.dtype() == DType::F32) {
    float* d = dst.data<float>();
    const float* s = src.data<float>();
    for (int64_t i = 0; i < n; ++i) d[i] += s[i];
  } else {
    double* d = dst.data<double>();
    const double* s = src.data<double>();
    for (int64_t i = 0; i < n; ++i) d[i] += s[i];
  }
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw ContractError("backward: loss must be a defined scalar");
  if (!loss.impl()->node && !loss.requires_grad()) return;

  // Collect every impl reachable through producer nodes.
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> seen;
  std::unordered_map<TensorImpl*, std::shared_ptr<TensorImpl>> keep;
  std::vector<std::shared_ptr<TensorImpl>> stack{loss.impl()};
  while (!stack.empty()) {
    auto cur = stack.back();
    stack.pop_back();
    if (!cur || seen.count(cur.get())) continue;
    seen.insert(cur.get());
    keep[cur.get()] = cur;
    if (cur->node) {
      order.push_back(cur.get());
      for (auto& in : cur->node->inputs) stack.push_back(in);
    }
  }
  std::sort(order.begin(), order.end(), [](TensorImpl* a, TensorImpl* b) {
    return a->node->seq > b->node->seq;
  });

  std::unordered_map<TensorImpl*, Tensor> gradbuf;
  gradbuf[loss.raw()] = Tensor::full({1}, 1.0, loss.dtype());

  // Backward fns hand over exclusively owned tensors per input slot (ops
  // that pass gout through clone it), so the first contribution is adopted
  // without a copy.
  auto sink = [&](const std::shared_ptr<TensorImpl>& into, const Tensor& g) {
    if (!into || !g.defined()) return;
    if (!into->requires_grad && !into->node) return;
    auto it = gradbuf.find(into.get());
    if (it == gradbuf.end()) {
      gradbuf.emplace(into.get(), g);
    } else {
      accumulate_into(it->second, g);
    }
  };

  for (TensorImpl* impl : order) {
    auto it = gradbuf.find(impl);
    if (it == gradbuf.end()) continue;  // not on any path to the loss
    Tensor gout = it->second;
    std::vector<Tensor> gin(impl->node->inputs.size());
    impl->node->backward(gout, gin);
    for (size_t i = 0; i < gin.size(); ++i)
      sink(impl->node->inputs[i], gin[i]);
    gradbuf.erase(it);  // transient grads die as soon as they are consumed
  }

  // Whatever remains belongs to leaves; fold into persistent accumulators.
  for (auto& [ptr, g] : gradbuf) {
    auto holder = keep[ptr];
    if (!holder || !holder->requires_grad || holder->node) continue;
    if (!holder->grad) {
      holder->grad = std::make_shared<TensorImpl>();
      holder->grad->shape = holder->shape;
      holder->grad->dtype = holder->dtype;
      holder->grad->f32.assign(holder->f32.size(), 0.0f);
      holder->grad->f64.assign(holder->f64.size(), 0.0);
    }
    Tensor acc(holder->grad);
    accumulate_into(acc, g);
  }
}

}  // namespace lfnr

// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <initializer_list>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "lfnr/error.hpp"
#include "lfnr/rng.hpp"

namespace lfnr {

enum class DType { F32, F64 };

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorImpl;
class Tensor;

// One recorded operation. Nodes own their input impls (keeps the upstream
// graph alive); `seq` is the creation order used for topological traversal.
struct Node {
  uint64_t seq = 0;
  const char* name = "";
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  // Fills gin (one slot per input; undefined Tensor = no gradient).
  std::function<void(const Tensor& gout, std::vector<Tensor>& gin)> backward;
};

// Storage is pinned to 64-byte alignment so Eigen's vectorized reductions
// split head/tail at the same element every run; heap-address-dependent
// accumulation order would break bit-exact reproducibility.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  AlignedAllocator() noexcept = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) {
    const std::size_t bytes = (n * sizeof(T) + 63u) / 64u * 64u;
    void* p = std::aligned_alloc(64u, bytes ? bytes : 64u);
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { std::free(p); }
  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
  template <typename U>
  bool operator!=(const AlignedAllocator<U>&) const noexcept {
    return false;
  }
};

template <typename T>
using AlignedVec = std::vector<T, AlignedAllocator<T>>;

struct TensorImpl {
  Shape shape;
  DType dtype = DType::F32;
  AlignedVec<float> f32;
  AlignedVec<double> f64;
  bool requires_grad = false;
  std::shared_ptr<Node> node;        // producer; null for leaves
  std::shared_ptr<TensorImpl> grad;  // leaf accumulator, allocated lazily
};

// Value-semantic handle onto a shared dense array plus its autograd hookup.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(const Shape& s, DType dt = DType::F32,
                      bool requires_grad = false);
  static Tensor full(const Shape& s, double value, DType dt = DType::F32);
  static Tensor from_vector(const std::vector<double>& v, const Shape& s,
                            DType dt = DType::F32);
  static Tensor uniform(const Shape& s, double lo, double hi, Rng& rng,
                        DType dt = DType::F32, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  int ndim() const { return static_cast<int>(shape().size()); }
  int64_t dim(int i) const { return shape()[static_cast<size_t>(i)]; }
  int64_t numel() const;
  DType dtype() const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool v);

  template <typename T>
  T* data();
  template <typename T>
  const T* data() const;

  double item() const;
  double at(std::initializer_list<int64_t> idx) const;
  std::vector<double> to_vector() const;

  Tensor grad() const;  // undefined Tensor when no grad has accumulated
  void zero_grad();

  Tensor detach() const;     // shares storage, drops graph and grad flag
  Tensor clone() const;      // deep copy, leaf
  Tensor to(DType dt) const; // cast, leaf (no graph)

  std::shared_ptr<TensorImpl> impl() const { return impl_; }
  TensorImpl* raw() const { return impl_.get(); }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

template <>
float* Tensor::data<float>();
template <>
double* Tensor::data<double>();
template <>
const float* Tensor::data<float>() const;
template <>
const double* Tensor::data<double>() const;

// Reverse-mode sweep from a scalar loss. Accumulates into the .grad of every
// reachable requires_grad leaf; repeated calls keep accumulating.
void backward(const Tensor& loss);

bool grad_enabled();

struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

// Helper for op implementations: allocates the result, wires the node when
// grad mode is on and any input requires grad.
Tensor make_op_result(const Shape& shape, DType dt,
                      std::vector<Tensor> inputs, const char* name,
                      std::function<void(const Tensor&, std::vector<Tensor>&)>
                          backward_fn);

// dst += src, matching shapes/dtypes (used by the backward driver and tests).
void accumulate_into(Tensor& dst, const Tensor& src);

}  // namespace lfnr

// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include "bindings.hpp"
#include "lfnr/ops.hpp"

namespace py = pybind11;

namespace lfnr::bindings {

namespace {

DType dtype_from_str(const std::string& s) {
  if (s == "f32") return DType::F32;
  if (s == "f64") return DType::F64;
  throw ConfigError("dtype must be 'f32' or 'f64'");
}

std::string dtype_to_str(DType dt) {
  return dt == DType::F32 ? "f32" : "f64";
}

py::array tensor_to_numpy(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  if (t.dtype() == DType::F32) {
    py::array_t<float> a(shape);
    std::copy_n(t.data<float>(), t.numel(), a.mutable_data());
    return a;
  }
  py::array_t<double> a(shape);
  std::copy_n(t.data<double>(), t.numel(), a.mutable_data());
  return a;
}

Tensor numpy_to_tensor(const py::array& arr, bool requires_grad) {
  Shape shape(arr.ndim());
  for (py::ssize_t i = 0; i < arr.ndim(); ++i)
    shape[static_cast<size_t>(i)] = arr.shape(i);
  Tensor t;
  if (py::isinstance<py::array_t<float>>(arr)) {
    auto a = py::array_t<float, py::array::c_style | py::array::forcecast>(arr);
    t = Tensor::zeros(shape, DType::F32);
    std::copy_n(a.data(), t.numel(), t.data<float>());
  } else {
    auto a =
        py::array_t<double, py::array::c_style | py::array::forcecast>(arr);
    t = Tensor::zeros(shape, DType::F64);
    std::copy_n(a.data(), t.numel(), t.data<double>());
  }
  t.set_requires_grad(requires_grad);
  return t;
}

}  // namespace

void BindTensor(py::module_& m) {
  // Translators run most-recent-first: register the base before the derived
  // class so NumericError is not swallowed by the generic handler.
  py::register_exception<Error>(m, "LfnrError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError",
                                       PyExc_ArithmeticError);

  py::class_<Tensor>(m, "Tensor")
      .def_static(
          "zeros",
          [](const Shape& s, const std::string& dt, bool rg) {
            return Tensor::zeros(s, dtype_from_str(dt), rg);
          },
          py::arg("shape"), py::arg("dtype") = "f32",
          py::arg("requires_grad") = false)
      .def_static("from_numpy", &numpy_to_tensor, py::arg("array"),
                  py::arg("requires_grad") = false)
      .def("numpy", &tensor_to_numpy)
      .def_property_readonly(
          "shape",
          [](const Tensor& t) {
            return py::tuple(py::cast(t.shape()));
          })
      .def_property_readonly(
          "dtype", [](const Tensor& t) { return dtype_to_str(t.dtype()); })
      .def_property_readonly("requires_grad",
                             [](const Tensor& t) { return t.requires_grad(); })
      .def("numel", &Tensor::numel)
      .def("item", &Tensor::item)
      .def("grad",
           [](const Tensor& t) -> py::object {
             Tensor g = t.grad();
             return g.defined() ? py::cast(g) : py::none();
           })
      .def("zero_grad", &Tensor::zero_grad)
      .def("detach", &Tensor::detach)
      .def("clone", &Tensor::clone)
      .def("to", [](const Tensor& t, const std::string& dt) {
        return t.to(dtype_from_str(dt));
      });

  m.def("backward", &backward, py::arg("loss"),
        "reverse-mode sweep from a scalar loss");
}

}  // namespace lfnr::bindings

// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/stl.h>

#include "bindings.hpp"
#include "lfnr/image.hpp"
#include "lfnr/ops.hpp"

namespace py = pybind11;

namespace lfnr::bindings {

void BindOps(py::module_& m) {
  m.def("add", &add);
  m.def("sub", &sub);
  m.def("mul", &mul);
  m.def("scale", &scale);
  m.def("add_scalar", &add_scalar);
  m.def("abs", &lfnr::abs);
  m.def("relu", &relu);
  m.def("sigmoid", &sigmoid);
  m.def("softplus", &softplus);
  m.def("softmax", &softmax, py::arg("a"), py::arg("axis"));
  m.def("linear", &linear, py::arg("x"), py::arg("w"), py::arg("b"));
  m.def("transpose2", &transpose2);
  m.def("reshape", &reshape);
  m.def("slice", &lfnr::slice, py::arg("a"), py::arg("axis"),
        py::arg("start"), py::arg("len"));
  m.def("concat", &concat, py::arg("parts"), py::arg("axis"));
  m.def("conv2d", &conv2d, py::arg("x"), py::arg("w"), py::arg("b"),
        py::arg("stride") = 1, py::arg("padding") = 0);
  m.def("conv_transpose2d", &conv_transpose2d, py::arg("x"), py::arg("w"),
        py::arg("b"), py::arg("stride") = 2, py::arg("padding") = 1);
  m.def("conv3d", &conv3d, py::arg("x"), py::arg("w"), py::arg("b"),
        py::arg("stride") = 1, py::arg("padding") = 0);
  m.def("conv_transpose3d", &conv_transpose3d, py::arg("x"), py::arg("w"),
        py::arg("b"), py::arg("stride") = 2, py::arg("padding") = 1);
  m.def("trilinear_sample", &trilinear_sample, py::arg("volume"),
        py::arg("coords"));
  m.def("upsample2x", &upsample2x);
  m.def("broadcast_hw", &broadcast_hw, py::arg("v"), py::arg("h"),
        py::arg("w"));
  m.def("sum_all", &sum_all);
  m.def("mean_all", &mean_all);
  m.def("aggregate_views", &aggregate_views, py::arg("views"),
        "confidence-softmax fusion of per-view volumes");
  m.def("composite_pack", &composite_pack, py::arg("volume"),
        py::arg("depths"), py::arg("delta_cap"),
        "alpha-composite (C,n,h,w) into features+depth+opacity");
  m.def("box_downsample4", &box_downsample4);
  m.def("load_png", &load_png);
  m.def("save_png", &save_png, py::arg("path"), py::arg("image"));
}

}  // namespace lfnr::bindings

// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/eigen.h>
#include <pybind11/stl.h>

#include "bindings.hpp"
#include "lfnr/scenes.hpp"

namespace py = pybind11;

namespace lfnr::bindings {

void BindScenes(py::module_& m) {
  py::class_<Scene>(m, "Scene")
      .def_property_readonly(
          "n_primitives",
          [](const Scene& s) { return s.primitives.size(); })
      .def_property_readonly("background",
                             [](const Scene& s) { return s.background; });

  m.def("generate_scene", &generate_scene, py::arg("seed"));
  m.def("scene_hash", &scene_hash);
  m.def("raytrace_gt", &raytrace_gt, py::arg("scene"), py::arg("cam"));
  m.def("camera_ring", &camera_ring, py::arg("n_views"), py::arg("radius"),
        py::arg("elevation_deg"), py::arg("look_at"), py::arg("height"),
        py::arg("width"), py::arg("focal_rel") = 0.9,
        py::arg("az_offset_deg") = 0.0);
  m.def("psnr", &psnr, py::arg("pred"), py::arg("gt"));
  m.def("ssim", &ssim, py::arg("pred"), py::arg("gt"));
}

}  // namespace lfnr::bindings

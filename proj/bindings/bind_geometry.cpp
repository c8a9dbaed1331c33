// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/eigen.h>
#include <pybind11/stl.h>

#include "bindings.hpp"
#include "lfnr/geometry.hpp"
#include "lfnr/rng.hpp"

namespace py = pybind11;

namespace lfnr::bindings {

void BindGeometry(py::module_& m) {
  py::class_<Camera>(m, "Camera")
      .def(py::init<>())
      .def_readwrite("K", &Camera::K)
      .def_readwrite("R", &Camera::R)
      .def_readwrite("T", &Camera::T)
      .def_readwrite("z_near", &Camera::z_near)
      .def_readwrite("z_far", &Camera::z_far)
      .def_readwrite("height", &Camera::height)
      .def_readwrite("width", &Camera::width)
      .def("validate", &Camera::validate);

  py::class_<PluckerRay>(m, "PluckerRay")
      .def_readonly("coords", &PluckerRay::coords)
      .def_readonly("encoded", &PluckerRay::encoded);

  py::class_<Rng>(m, "Rng").def(py::init<uint64_t>(), py::arg("seed"));

  m.def("ray_direction", &ray_direction, py::arg("cam"), py::arg("u"),
        py::arg("v"));
  m.def("plucker_encode", &plucker_encode, py::arg("origin"),
        py::arg("direction"));
  m.def("positional_encode", &positional_encode);
  m.def(
      "stratified_depths",
      [](double zn, double zf, int n, Rng& rng) {
        return stratified_depths(zn, zf, n, rng);
      },
      py::arg("z_near"), py::arg("z_far"), py::arg("n"), py::arg("rng"));
  m.def(
      "importance_depths",
      [](const std::vector<double>& coarse, const std::vector<double>& w,
         int n_fine, double zn, double zf, Rng& rng) {
        return importance_depths(coarse, w, n_fine, zn, zf, rng);
      },
      py::arg("coarse"), py::arg("weights"), py::arg("n_fine"),
      py::arg("z_near"), py::arg("z_far"), py::arg("rng"));
  m.def(
      "world_to_input_ndc",
      [](const Vec3& p, const Camera& cam) {
        NdcPoint q = world_to_input_ndc(p, cam);
        return py::make_tuple(q.ndc, q.behind);
      },
      py::arg("point"), py::arg("cam"));
  m.def("ndc_to_world", &ndc_to_world, py::arg("ndc"), py::arg("cam"));
}

}  // namespace lfnr::bindings

// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/stl.h>

#include "bindings.hpp"
#include "lfnr/gradcheck.hpp"

namespace py = pybind11;

namespace lfnr::bindings {

void BindGradcheck(py::module_& m) {
  m.def(
      "run_gradcheck",
      [](const std::string& component, int seeds) {
        GradReport rep = run_gradcheck(component, seeds);
        py::list rows;
        for (const auto& r : rep.rows)
          rows.append(py::make_tuple(r.name, r.max_err, r.tol, r.pass));
        return py::make_tuple(rep.all_pass, rows);
      },
      py::arg("component") = "", py::arg("seeds") = 2,
      "returns (all_pass, [(name, max_err, tol, pass), ...])");
}

}  // namespace lfnr::bindings

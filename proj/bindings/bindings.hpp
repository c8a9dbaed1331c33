// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <pybind11/pybind11.h>

namespace lfnr::bindings {

void BindTensor(pybind11::module_& m);
void BindOps(pybind11::module_& m);
void BindGeometry(pybind11::module_& m);
void BindScenes(pybind11::module_& m);
void BindGradcheck(pybind11::module_& m);

}  // namespace lfnr::bindings

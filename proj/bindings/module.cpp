// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include "bindings.hpp"

PYBIND11_MODULE(_core, m) {
  m.doc() = "lfnr core: tensors, autodiff ops, geometry, scenes, metrics";

  lfnr::bindings::BindTensor(m);
  lfnr::bindings::BindOps(m);
  lfnr::bindings::BindGeometry(m);
  lfnr::bindings::BindScenes(m);
  lfnr::bindings::BindGradcheck(m);
}

// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lfnr/tensor.hpp"

namespace lfnr {

// Central-difference check of backward() against the forward map. `f` maps
// the (f64, requires_grad) inputs to any output tensor; the harness
// contracts the output with fixed random weights, backprops, and compares
// against (L(x+h)-L(x-h))/2h on up to `max_coords` coordinates per input.
// Returns the max relative error, |a-n| / max(1, |a|, |n|).
double fd_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                std::vector<Tensor> inputs, uint64_t seed,
                int max_coords = 24, double h = 1e-4);

struct GradCase {
  std::string name;
  std::function<double(uint64_t seed)> run;  // returns max relative error
  double tol = 1e-3;
};

// Every diffcore primitive, the loss paths, and the end-to-end pipeline
// ("pipeline.e2e", tol 2e-3). "fixture.corrupted" carries a deliberately
// wrong backward rule and is skipped unless selected by name.
const std::vector<GradCase>& gradcheck_registry();

struct GradReport {
  struct Row {
    std::string name;
    double max_err = 0;
    double tol = 0;
    bool pass = false;
  };
  std::vector<Row> rows;
  bool all_pass = true;
};

// component "" or a name prefix filter; `seeds` seeds per case.
GradReport run_gradcheck(const std::string& component, int seeds);

}  // namespace lfnr

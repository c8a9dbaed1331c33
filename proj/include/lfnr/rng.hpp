// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace lfnr {

// Deterministic random source. u01 derives doubles from raw engine output
// directly (53 mantissa bits) so sequences are bit-stable across platforms,
// unlike std::uniform_real_distribution.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : eng_(seed) {}

  double u01() { return (eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // Modulo bias is negligible for n << 2^64 and irrelevant here; only
  // determinism matters.
  uint64_t uniform_int(uint64_t n) { return eng_() % n; }

  uint64_t raw() { return eng_(); }

  std::string state() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
  }

  void set_state(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace lfnr

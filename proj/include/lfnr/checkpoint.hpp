// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lfnr/model.hpp"
#include "nlohmann/json.hpp"

namespace lfnr {

using AdamMap = std::map<std::string, AdamState>;

// On-disk layout: 8-byte magic "LFNCKPT1", u32 LE version, u64 LE header
// byte length, UTF-8 JSON header {config, step, rng, tensors:[{name, shape,
// offset, numel}]}, then the tensors' contiguous little-endian f32 payloads
// in header order. Offsets are bytes from the payload start.
struct Checkpoint {
  uint32_t version = 1;
  nlohmann::ordered_json config;
  int64_t step = 0;
  std::string rng_state;
  std::vector<std::pair<std::string, std::vector<float>>> tensors;
  std::vector<Shape> shapes;
};

// Parameter order from the store, then "opt.m." / "opt.v." moments.
Checkpoint make_checkpoint(const Model& model, const AdamMap& adam,
                           int64_t step, const std::string& rng_state,
                           const nlohmann::ordered_json& config);

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

// Fills the model parameters and Adam moments by name; the name/shape table
// must match the model exactly.
void apply_checkpoint(const Checkpoint& ckpt, Model& model, AdamMap& adam);

// Rebuilds a ModelConfig from the checkpoint's config snapshot.
ModelConfig model_config_from_json(const nlohmann::ordered_json& config);

}  // namespace lfnr

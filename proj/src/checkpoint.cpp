// Copyright 2026 lfnr authors
// SPDX-License-Identifier: Apache-2.0

#include "lfnr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace lfnr {

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'L', 'F', 'N', 'C', 'K', 'P', 'T', '1'};

std::vector<float> tensor_f32(const Tensor& t) {
  std::vector<float> out(static_cast<size_t>(t.numel()));
  if (t.dtype() == DType::F32) {
    const float* p = t.data<float>();
    std::copy(p, p + t.numel(), out.begin());
  } else {
    const double* p = t.data<double>();
    for (int64_t i = 0; i < t.numel(); ++i)
      out[static_cast<size_t>(i)] = static_cast<float>(p[i]);
  }
  return out;
}

void fill_from_f32(Tensor& t, const std::vector<float>& v) {
  if (static_cast<int64_t>(v.size()) != t.numel())
    throw IoError("checkpoint: payload size mismatch");
  if (t.dtype() == DType::F32) {
    std::copy(v.begin(), v.end(), t.data<float>());
  } else {
    double* p = t.data<double>();
    for (size_t i = 0; i < v.size(); ++i) p[i] = static_cast<double>(v[i]);
  }
}

}  // namespace

Checkpoint make_checkpoint(const Model& model, const AdamMap& adam,
                           int64_t step, const std::string& rng_state,
                           const nlohmann::ordered_json& config) {
  Checkpoint c;
  c.step = step;
  c.rng_state = rng_state;
  c.config = config;
  for (const std::string& name : model.params.order) {
    const Tensor& t = model.params.at(name);
    c.tensors.emplace_back(name, tensor_f32(t));
    c.shapes.push_back(t.shape());
  }
  for (const std::string& name : model.params.order) {
    auto it = adam.find(name);
    if (it == adam.end())
      throw ContractError("checkpoint: missing Adam state for " + name);
    c.tensors.emplace_back("opt.m." + name, tensor_f32(it->second.m));
    c.shapes.push_back(it->second.m.shape());
    c.tensors.emplace_back("opt.v." + name, tensor_f32(it->second.v));
    c.shapes.push_back(it->second.v.shape());
  }
  return c;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::ordered_json header;
  header["config"] = ckpt.config;
  header["step"] = ckpt.step;
  header["rng"] = ckpt.rng_state;
  header["tensors"] = nlohmann::ordered_json::array();
  uint64_t offset = 0;
  for (size_t i = 0; i < ckpt.tensors.size(); ++i) {
    nlohmann::ordered_json tj;
    tj["name"] = ckpt.tensors[i].first;
    tj["shape"] = ckpt.shapes[i];
    tj["offset"] = offset;
    tj["numel"] = ckpt.tensors[i].second.size();
    header["tensors"].push_back(tj);
    offset += ckpt.tensors[i].second.size() * sizeof(float);
  }
  std::string hs = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("checkpoint: cannot write " + path);
  os.write(kMagic, 8);
  uint32_t version = ckpt.version;
  os.write(reinterpret_cast<const char*>(&version), 4);
  uint64_t hlen = hs.size();
  os.write(reinterpret_cast<const char*>(&hlen), 8);
  os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& [name, data] : ckpt.tensors)
    os.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!os) throw IoError("checkpoint: short write to " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw IoError("checkpoint: bad magic in " + path);
  Checkpoint c;
  is.read(reinterpret_cast<char*>(&c.version), 4);
  uint64_t hlen = 0;
  is.read(reinterpret_cast<char*>(&hlen), 8);
  if (!is || hlen > (1ull << 30))
    throw IoError("checkpoint: bad header length in " + path);
  std::string hs(hlen, '\0');
  is.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!is) throw IoError("checkpoint: truncated header in " + path);
  nlohmann::ordered_json header;
  try {
    header = nlohmann::ordered_json::parse(hs);
  } catch (const std::exception& e) {
    throw IoError("checkpoint: bad header JSON in " + path + ": " + e.what());
  }
  try {
    c.config = header.at("config");
    c.step = header.at("step").get<int64_t>();
    c.rng_state = header.at("rng").get<std::string>();
    for (const auto& tj : header.at("tensors")) {
      std::string name = tj.at("name").get<std::string>();
      Shape shape = tj.at("shape").get<Shape>();
      size_t numel = tj.at("numel").get<size_t>();
      if (static_cast<int64_t>(numel) != shape_numel(shape))
        throw IoError("checkpoint: shape/numel mismatch for " + name);
      c.tensors.emplace_back(name, std::vector<float>(numel));
      c.shapes.push_back(shape);
    }
  } catch (const nlohmann::ordered_json::exception& e) {
    throw IoError("checkpoint: invalid header in " + path + ": " + e.what());
  }
  for (auto& [name, data] : c.tensors) {
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!is) throw IoError("checkpoint: truncated payload in " + path);
  }
  return c;
}

void apply_checkpoint(const Checkpoint& ckpt, Model& model, AdamMap& adam) {
  size_t np = model.params.order.size();
  if (ckpt.tensors.size() != 3 * np)
    throw IoError("checkpoint: tensor count does not match the model");
  for (size_t i = 0; i < np; ++i) {
    const auto& [name, data] = ckpt.tensors[i];
    if (!model.params.has(name))
      throw IoError("checkpoint: unknown parameter " + name);
    Tensor& t = model.params.at(name);
    if (t.shape() != ckpt.shapes[i])
      throw IoError("checkpoint: shape mismatch for " + name);
    fill_from_f32(t, data);
  }
  for (size_t i = np; i < ckpt.tensors.size(); ++i) {
    const auto& [name, data] = ckpt.tensors[i];
    bool is_m = name.rfind("opt.m.", 0) == 0;
    bool is_v = name.rfind("opt.v.", 0) == 0;
    if (!is_m && !is_v)
      throw IoError("checkpoint: unexpected tensor " + name);
    std::string pname = name.substr(6);
    if (!model.params.has(pname))
      throw IoError("checkpoint: moments for unknown parameter " + pname);
    AdamState& st = adam[pname];
    Tensor& param = model.params.at(pname);
    if (!st.m.defined()) {
      st.m = Tensor::zeros(param.shape(), param.dtype());
      st.v = Tensor::zeros(param.shape(), param.dtype());
    }
    fill_from_f32(is_m ? st.m : st.v, data);
  }
}

ModelConfig model_config_from_json(const nlohmann::ordered_json& config) {
  ModelConfig mc;
  try {
    mc.enc.channels = config.at("channels").get<int>();
    mc.enc.depth = config.at("depth").get<int>();
    mc.enc.base2d = config.at("base2d").get<int>();
    mc.hidden = config.at("hidden").get<int>();
    mc.baseline_hidden = config.at("baseline_hidden").get<int>();
    mc.n_coarse = config.at("n_coarse").get<int>();
    mc.n_fine = config.at("n_fine").get<int>();
    mc.dtype =
        config.at("precision").get<std::string>() == "f64" ? DType::F64
                                                           : DType::F32;
  } catch (const nlohmann::ordered_json::exception& e) {
    throw IoError(std::string("checkpoint: bad config snapshot: ") +
                  e.what());
  }
  mc.validate();
  return mc;
}

}  // namespace lfnr

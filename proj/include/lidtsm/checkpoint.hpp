// lidtsm/checkpoint.hpp

// Copyright 2026  The lidtsm Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Model checkpoints:
//   "LTCK" | u32 version | architecture JSON (u32 length + bytes) | u32 count
//   | count x (name | u32 ndim | ndim x u32 dims | f32 row-major values)
// all little-endian. Strings carry a u32 length prefix.

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lidtsm/nnet.hpp"
#include "lidtsm/util.hpp"

namespace lidtsm::checkpoint {

using nlohmann::json;

inline constexpr char kMagic[] = "LTCK";
inline constexpr uint32_t kVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<uint32_t> dims;
  std::vector<float> values;
};

struct Checkpoint {
  json architecture;  // includes a "kind" key
  std::vector<NamedTensor> tensors;

  const NamedTensor &get(const std::string &name) const {
    for (const auto &t : tensors)
      if (t.name == name) return t;
    fail(ErrorCode::kBadContainer, "checkpoint has no tensor '" + name + "'");
  }
  bool has(const std::string &name) const {
    for (const auto &t : tensors)
      if (t.name == name) return true;
    return false;
  }
};

inline std::vector<unsigned char> encode(const Checkpoint &c) {
  ByteWriter out;
  out.put_bytes(std::string_view(kMagic, 4));
  out.put<uint32_t>(kVersion);
  out.put_string(c.architecture.dump());
  out.put<uint32_t>(static_cast<uint32_t>(c.tensors.size()));
  for (const auto &t : c.tensors) {
    out.put_string(t.name);
    out.put<uint32_t>(static_cast<uint32_t>(t.dims.size()));
    for (uint32_t d : t.dims) out.put<uint32_t>(d);
    for (float v : t.values) out.put<float>(v);
  }
  return out.bytes();
}

inline Checkpoint decode(std::span<const unsigned char> bytes) {
  ByteReader in(bytes);
  require(in.get_bytes(4) == std::string_view(kMagic, 4), ErrorCode::kBadContainer,
          "not a model checkpoint");
  const uint32_t version = in.get<uint32_t>();
  require(version == kVersion, ErrorCode::kBadContainer,
          "unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  try {
    c.architecture = json::parse(in.get_string());
  } catch (const json::exception &e) {
    fail(ErrorCode::kBadContainer, std::string("bad architecture descriptor: ") + e.what());
  }
  const uint32_t count = in.get<uint32_t>();
  for (uint32_t k = 0; k < count; ++k) {
    NamedTensor t;
    t.name = in.get_string();
    const uint32_t ndim = in.get<uint32_t>();
    size_t n = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
      t.dims.push_back(in.get<uint32_t>());
      n *= t.dims.back();
    }
    require(in.remaining() >= n * 4, ErrorCode::kBadContainer, "truncated tensor " + t.name);
    t.values.resize(n);
    for (float &v : t.values) v = in.get<float>();
    c.tensors.push_back(std::move(t));
  }
  require(in.done(), ErrorCode::kBadContainer, "trailing bytes after checkpoint");
  return c;
}

inline void save(const Checkpoint &c, const std::string &path) {
  write_file_bytes(path, encode(c));
}

inline Checkpoint load(const std::string &path) {
  const auto bytes = read_file_bytes(path);
  return decode(bytes);
}

template <typename T>
NamedTensor tensor_from(const std::string &name, const Matrix<T> &m) {
  NamedTensor t;
  t.name = name;
  t.dims = {static_cast<uint32_t>(m.rows), static_cast<uint32_t>(m.cols)};
  t.values.reserve(m.size());
  for (T v : m.data) t.values.push_back(static_cast<float>(v));
  return t;
}

template <typename T>
void tensor_into(const NamedTensor &t, Matrix<T> &m) {
  require(t.dims.size() == 2 && t.dims[0] == m.rows && t.dims[1] == m.cols,
          ErrorCode::kShapeMismatch, "tensor " + t.name + " has the wrong shape");
  for (size_t k = 0; k < m.size(); ++k) m.data[k] = static_cast<T>(t.values[k]);
}

inline json to_json(const nnet::BnDnnArch &a) {
  return {{"kind", "bn-dnn"}, {"input_dim", a.input_dim}, {"hidden_layers", a.hidden_layers},
          {"hidden_width", a.hidden_width}, {"bottleneck_width", a.bottleneck_width},
          {"num_classes", a.num_classes}};
}

inline json to_json(const nnet::ClassifierArch &a) {
  return {{"kind", "lstm-classifier"}, {"input_dim", a.input_dim}, {"lstm1", a.lstm1},
          {"lstm2", a.lstm2}, {"relu_width", a.relu_width}, {"num_classes", a.num_classes}};
}

inline void expect_kind(const json &arch, const std::string &kind) {
  require(arch.value("kind", std::string()) == kind, ErrorCode::kBadContainer,
          "checkpoint is not a " + kind + " model");
}

template <typename Model>
Checkpoint make(const Model &m, json architecture) {
  Checkpoint c;
  c.architecture = std::move(architecture);
  m.visit([&](const std::string &name, const auto &t) { c.tensors.push_back(tensor_from(name, t)); });
  return c;
}

template <typename Model>
void fill(const Checkpoint &c, Model &m) {
  m.visit([&](const std::string &name, auto &t) { tensor_into(c.get(name), t); });
}

template <typename T>
nnet::BnDnn<T> load_bn_dnn(const Checkpoint &c) {
  expect_kind(c.architecture, "bn-dnn");
  nnet::BnDnnArch a;
  try {
    const auto &j = c.architecture;
    a.input_dim = j.at("input_dim").get<size_t>();
    a.hidden_layers = j.at("hidden_layers").get<size_t>();
    a.hidden_width = j.at("hidden_width").get<size_t>();
    a.bottleneck_width = j.at("bottleneck_width").get<size_t>();
    a.num_classes = j.at("num_classes").get<size_t>();
  } catch (const json::exception &e) {
    fail(ErrorCode::kBadContainer, std::string("bad bn-dnn descriptor: ") + e.what());
  }
  nnet::BnDnn<T> m(a);
  fill(c, m);
  return m;
}

template <typename T>
nnet::Classifier<T> load_classifier(const Checkpoint &c) {
  expect_kind(c.architecture, "lstm-classifier");
  nnet::ClassifierArch a;
  try {
    const auto &j = c.architecture;
    a.input_dim = j.at("input_dim").get<size_t>();
    a.lstm1 = j.at("lstm1").get<size_t>();
    a.lstm2 = j.at("lstm2").get<size_t>();
    a.relu_width = j.at("relu_width").get<size_t>();
    a.num_classes = j.at("num_classes").get<size_t>();
  } catch (const json::exception &e) {
    fail(ErrorCode::kBadContainer, std::string("bad classifier descriptor: ") + e.what());
  }
  nnet::Classifier<T> m(a);
  fill(c, m);
  return m;
}

}  // namespace lidtsm::checkpoint

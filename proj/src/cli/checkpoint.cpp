/*
 * Copyright (c) 2026, The APT Workbench Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "apt/cli/checkpoint.hpp"

#include <fstream>

#include "apt/numerics/binary_io.hpp"

namespace apt::cli {

using numerics::BinaryReader;
using numerics::BinaryWriter;
using numerics::FormatError;

namespace {

constexpr std::uint8_t kFloat32 = 0;
constexpr std::uint32_t kMaxDims = 8;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 34;

void write_tensor(BinaryWriter& w, const Tensor<float>& t) {
  w.u8(kFloat32);
  w.u32(static_cast<std::uint32_t>(t.ndim()));
  for (auto d : t.shape()) w.u64(d);
  for (float v : t.data()) w.f32(v);
}

Tensor<float> read_tensor(BinaryReader& r) {
  const std::uint8_t dtype = r.u8();
  if (dtype != kFloat32) throw FormatError("unsupported tensor dtype " + std::to_string(dtype));
  const std::uint32_t ndim = r.u32();
  if (ndim == 0 || ndim > kMaxDims) throw FormatError("bad tensor rank " + std::to_string(ndim));
  numerics::Shape shape(ndim);
  std::uint64_t count = 1;
  for (auto& d : shape) {
    d = r.u64();
    if (d == 0 || d > kMaxElements || count * d > kMaxElements) {
      throw FormatError("bad tensor extent in checkpoint");
    }
    count *= d;
  }
  std::vector<float> data(count);
  for (auto& v : data) v = r.f32();
  return Tensor<float>(std::move(shape), std::move(data));
}

bool same_tensor(const Tensor<float>& a, const Tensor<float>& b) {
  if (a.empty() || b.empty()) return a.empty() == b.empty();
  return a.identical(b);
}

}  // namespace

bool Checkpoint::operator==(const Checkpoint& o) const {
  if (arch_hash != o.arch_hash || mode_tag != o.mode_tag || tensors.size() != o.tensors.size() ||
      has_optimizer != o.has_optimizer || optimizer_steps != o.optimizer_steps ||
      optimizer.size() != o.optimizer.size()) {
    return false;
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].first != o.tensors[i].first || !same_tensor(tensors[i].second, o.tensors[i].second)) {
      return false;
    }
  }
  for (std::size_t i = 0; i < optimizer.size(); ++i) {
    if (optimizer[i].name != o.optimizer[i].name || !same_tensor(optimizer[i].m, o.optimizer[i].m) ||
        !same_tensor(optimizer[i].v, o.optimizer[i].v)) {
      return false;
    }
  }
  return true;
}

Checkpoint capture(const prompt::TunedModel<float>& model) {
  Checkpoint c;
  c.arch_hash = model.backbone.arch.hash();
  c.mode_tag = prompt::mode_tag(model.mode);
  for (const auto& p : model.all_parameters()) c.tensors.emplace_back(p.name, p.var.value());
  return c;
}

void restore(prompt::TunedModel<float>& model, const Checkpoint& checkpoint) {
  if (checkpoint.arch_hash != model.backbone.arch.hash()) {
    throw ArtifactMismatch("checkpoint architecture hash " + std::to_string(checkpoint.arch_hash) +
                           " does not match " + std::to_string(model.backbone.arch.hash()) +
                           " (" + model.backbone.arch.canonical() + ")");
  }
  const std::string tag = prompt::mode_tag(model.mode);
  if (checkpoint.mode_tag != tag) {
    throw ArtifactMismatch("checkpoint mode '" + checkpoint.mode_tag + "' does not match '" + tag + "'");
  }
  auto params = model.all_parameters();
  if (params.size() != checkpoint.tensors.size()) {
    throw ArtifactMismatch("checkpoint holds " + std::to_string(checkpoint.tensors.size()) +
                           " tensors, model has " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, value] = checkpoint.tensors[i];
    if (name != params[i].name || value.shape() != params[i].var.shape()) {
      throw ArtifactMismatch("checkpoint tensor '" + name + "' " + numerics::shape_str(value.shape()) +
                             " does not match '" + params[i].name + "' " +
                             numerics::shape_str(params[i].var.shape()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto var = params[i].var;
    var.mutable_value() = checkpoint.tensors[i].second;
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  BinaryWriter w(os);
  w.bytes("APTC");
  w.u32(kCheckpointVersion);
  w.u64(c.arch_hash);
  w.str(c.mode_tag);
  w.u32(static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto& [name, t] : c.tensors) {
    w.str(name);
    write_tensor(w, t);
  }
  w.u8(c.has_optimizer ? 1 : 0);
  if (c.has_optimizer) {
    w.u64(c.optimizer_steps);
    w.u32(static_cast<std::uint32_t>(c.optimizer.size()));
    for (const auto& s : c.optimizer) {
      w.str(s.name);
      w.u8(s.m.empty() ? 0 : 1);
      if (!s.m.empty()) {
        write_tensor(w, s.m);
        write_tensor(w, s.v);
      }
    }
  }
  if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint '" + path + "'");
  BinaryReader r(is);
  if (r.bytes(4) != "APTC") throw FormatError("'" + path + "' is not an APTC checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  c.arch_hash = r.u64();
  c.mode_tag = r.str(4096);
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str(4096);
    c.tensors.emplace_back(std::move(name), read_tensor(r));
  }
  c.has_optimizer = r.u8() != 0;
  if (c.has_optimizer) {
    c.optimizer_steps = r.u64();
    const std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
      trainer::AdamState s;
      s.name = r.str(4096);
      if (r.u8() != 0) {
        s.m = read_tensor(r);
        s.v = read_tensor(r);
      }
      c.optimizer.push_back(std::move(s));
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in checkpoint");
  return c;
}

}  // namespace apt::cli

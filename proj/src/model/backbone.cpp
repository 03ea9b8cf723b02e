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

#include "apt/model/backbone.hpp"

#include <cmath>
#include <cstring>

#include "apt/numerics/rng.hpp"

namespace apt::model {

using numerics::Rng;
using numerics::StreamPurpose;

const char* group_name(ParamGroup group) {
  switch (group) {
    case ParamGroup::Backbone:
      return "backbone";
    case ParamGroup::Head:
      return "head";
    case ParamGroup::Prompt:
      return "prompt";
  }
  return "?";
}

template <typename T>
Tensor<T> sinusoid_table(std::size_t n, std::size_t d) {
  Tensor<T> table({n, d});
  for (std::size_t pos = 0; pos < n; ++pos) {
    for (std::size_t j = 0; j < d; ++j) {
      const double angle = static_cast<double>(pos) /
                           std::pow(10000.0, 2.0 * static_cast<double>(j / 2) / static_cast<double>(d));
      table(pos, j) = static_cast<T>(j % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return table;
}

namespace {

template <typename T>
Var<T> normal_matrix(Rng& rng, std::size_t rows, std::size_t cols, double std) {
  Tensor<T> t({rows, cols});
  for (auto& v : t.data()) v = static_cast<T>(rng.truncated_normal(std));
  return Var<T>(std::move(t));
}

template <typename T>
Var<T> constant_vector(std::size_t n, T value) {
  return Var<T>(Tensor<T>({n}, value));
}

}  // namespace

template <typename T>
Backbone<T> Backbone<T>::init(const ArchSpec& arch, std::uint64_t seed, const InitScales& scales) {
  arch.validate();
  Rng rng(seed, numerics::stream_id(StreamPurpose::Init));
  const std::size_t d = arch.embed_dim, hidden = arch.mlp_hidden();
  const double weight_std = scales.weight_std;
  const double out_std = weight_std / std::sqrt(2.0 * static_cast<double>(arch.depth));

  Backbone b;
  b.arch = arch;
  b.patch_weight = normal_matrix<T>(rng, arch.patch_dim(), d, scales.embed_std);
  b.patch_bias = constant_vector<T>(d, T(0));
  b.pos_table = sinusoid_table<T>(arch.num_tokens(), d);
  for (std::size_t i = 0; i < arch.depth; ++i) {
    BlockWeights<T> w;
    w.norm1_gamma = constant_vector<T>(d, T(1));
    w.norm1_beta = constant_vector<T>(d, T(0));
    w.wq = normal_matrix<T>(rng, d, d, weight_std);
    w.bq = constant_vector<T>(d, T(0));
    w.wk = normal_matrix<T>(rng, d, d, weight_std);
    w.wv = normal_matrix<T>(rng, d, d, weight_std);
    w.bv = constant_vector<T>(d, T(0));
    w.wo = normal_matrix<T>(rng, d, d, out_std);
    w.bo = constant_vector<T>(d, T(0));
    w.norm2_gamma = constant_vector<T>(d, T(1));
    w.norm2_beta = constant_vector<T>(d, T(0));
    w.w1 = normal_matrix<T>(rng, d, hidden, weight_std);
    w.b1 = constant_vector<T>(hidden, T(0));
    w.w2 = normal_matrix<T>(rng, hidden, d, out_std);
    w.b2 = constant_vector<T>(d, T(0));
    b.blocks.push_back(std::move(w));
  }
  b.fc_norm_gamma = constant_vector<T>(d, T(1));
  b.fc_norm_beta = constant_vector<T>(d, T(0));
  b.head_weight = normal_matrix<T>(rng, d, arch.num_classes, scales.head_std);
  b.head_bias = constant_vector<T>(arch.num_classes, T(0));

  for (auto& p : b.parameters()) p.var.set_name(p.name);
  return b;
}

template <typename T>
std::vector<NamedParam<T>> Backbone<T>::parameters() const {
  std::vector<NamedParam<T>> out;
  auto add = [&out](std::string name, const Var<T>& v, ParamGroup g) {
    out.push_back({std::move(name), v, g});
  };
  add("patch_embed.weight", patch_weight, ParamGroup::Backbone);
  add("patch_embed.bias", patch_bias, ParamGroup::Backbone);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& w = blocks[i];
    const std::string p = "blocks." + std::to_string(i) + ".";
    add(p + "norm1.weight", w.norm1_gamma, ParamGroup::Backbone);
    add(p + "norm1.bias", w.norm1_beta, ParamGroup::Backbone);
    add(p + "attn.q.weight", w.wq, ParamGroup::Backbone);
    add(p + "attn.q.bias", w.bq, ParamGroup::Backbone);
    add(p + "attn.k.weight", w.wk, ParamGroup::Backbone);
    add(p + "attn.v.weight", w.wv, ParamGroup::Backbone);
    add(p + "attn.v.bias", w.bv, ParamGroup::Backbone);
    add(p + "attn.proj.weight", w.wo, ParamGroup::Backbone);
    add(p + "attn.proj.bias", w.bo, ParamGroup::Backbone);
    add(p + "norm2.weight", w.norm2_gamma, ParamGroup::Backbone);
    add(p + "norm2.bias", w.norm2_beta, ParamGroup::Backbone);
    add(p + "mlp.fc1.weight", w.w1, ParamGroup::Backbone);
    add(p + "mlp.fc1.bias", w.b1, ParamGroup::Backbone);
    add(p + "mlp.fc2.weight", w.w2, ParamGroup::Backbone);
    add(p + "mlp.fc2.bias", w.b2, ParamGroup::Backbone);
  }
  add("fc_norm.weight", fc_norm_gamma, ParamGroup::Head);
  add("fc_norm.bias", fc_norm_beta, ParamGroup::Head);
  add("head.weight", head_weight, ParamGroup::Head);
  add("head.bias", head_bias, ParamGroup::Head);
  return out;
}

template <typename T>
std::size_t Backbone<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.var.value().size();
  return n;
}

template <typename T>
std::uint64_t checksum(const std::vector<NamedParam<T>>& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const unsigned char* bytes, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& p : params) {
    mix(reinterpret_cast<const unsigned char*>(p.name.data()), p.name.size());
    const auto data = p.var.value().data();
    mix(reinterpret_cast<const unsigned char*>(data.data()), data.size_bytes());
  }
  return h;
}

template Tensor<float> sinusoid_table<float>(std::size_t, std::size_t);
template Tensor<double> sinusoid_table<double>(std::size_t, std::size_t);
template std::uint64_t checksum<float>(const std::vector<NamedParam<float>>&);
template std::uint64_t checksum<double>(const std::vector<NamedParam<double>>&);
template struct Backbone<float>;
template struct Backbone<double>;

}  // namespace apt::model

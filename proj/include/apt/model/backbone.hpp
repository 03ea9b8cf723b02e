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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "apt/model/arch.hpp"
#include "apt/numerics/variable.hpp"

namespace apt::model {

using numerics::Tensor;
using numerics::Var;

/// Which optimizer group (and weight decay) a parameter belongs to.
enum class ParamGroup { Backbone, Head, Prompt };

const char* group_name(ParamGroup group);

template <typename T>
struct NamedParam {
  std::string name;
  Var<T> var;
  ParamGroup group = ParamGroup::Backbone;
};

/// Weights of one pre-norm transformer block. Layouts are [in x out]; the key
/// projection carries no bias (queries and values do).
template <typename T>
struct BlockWeights {
  Var<T> norm1_gamma, norm1_beta;
  Var<T> wq, bq, wk, wv, bv;
  Var<T> wo, bo;
  Var<T> norm2_gamma, norm2_beta;
  Var<T> w1, b1, w2, b2;
};

/// Frozen-by-default video ViT weights plus the trainable head. `pos_table`
/// is a fixed sinusoidal buffer and is not part of the parameter inventory.
/// Standard deviations of the random stand-in weights.
struct InitScales {
  double weight_std = 0.02;  // attention and MLP matrices
  double embed_std = 0.02;   // tubelet projection
  double head_std = 0.02;    // classifier

  bool operator==(const InitScales&) const = default;
};

template <typename T>
struct Backbone {
  ArchSpec arch;
  Var<T> patch_weight, patch_bias;
  Tensor<T> pos_table;
  std::vector<BlockWeights<T>> blocks;
  Var<T> fc_norm_gamma, fc_norm_beta;
  Var<T> head_weight, head_bias;

  /// Random stand-in for pretrained weights: truncated normal (+-2 std) for
  /// matrices, output projections of each block additionally scaled by
  /// 1/sqrt(2*depth); zero biases, unit norm gains. Deterministic in `seed`.
  static Backbone init(const ArchSpec& arch, std::uint64_t seed, const InitScales& scales = {});

  /// Every parameter, in a fixed order, with stable dotted names.
  std::vector<NamedParam<T>> parameters() const;
  std::size_t parameter_count() const;

  /// Deep copy with values converted to U (requires_grad flags kept).
  template <typename U>
  Backbone<U> cast() const;
};

/// Fixed sinusoidal position table [n x d].
template <typename T>
Tensor<T> sinusoid_table(std::size_t n, std::size_t d);

/// FNV-1a over names and raw bytes of the given parameters.
template <typename T>
std::uint64_t checksum(const std::vector<NamedParam<T>>& params);

extern template struct Backbone<float>;
extern template struct Backbone<double>;

template <typename T>
template <typename U>
Backbone<U> Backbone<T>::cast() const {
  auto conv = [](const Var<T>& v) {
    return Var<U>(v.value().template cast<U>(), v.requires_grad(), v.name());
  };
  Backbone<U> out;
  out.arch = arch;
  out.patch_weight = conv(patch_weight);
  out.patch_bias = conv(patch_bias);
  out.pos_table = pos_table.template cast<U>();
  for (const auto& b : blocks) {
    BlockWeights<U> c;
    c.norm1_gamma = conv(b.norm1_gamma);
    c.norm1_beta = conv(b.norm1_beta);
    c.wq = conv(b.wq);
    c.bq = conv(b.bq);
    c.wk = conv(b.wk);
    c.wv = conv(b.wv);
    c.bv = conv(b.bv);
    c.wo = conv(b.wo);
    c.bo = conv(b.bo);
    c.norm2_gamma = conv(b.norm2_gamma);
    c.norm2_beta = conv(b.norm2_beta);
    c.w1 = conv(b.w1);
    c.b1 = conv(b.b1);
    c.w2 = conv(b.w2);
    c.b2 = conv(b.b2);
    out.blocks.push_back(std::move(c));
  }
  out.fc_norm_gamma = conv(fc_norm_gamma);
  out.fc_norm_beta = conv(fc_norm_beta);
  out.head_weight = conv(head_weight);
  out.head_bias = conv(head_bias);
  return out;
}

}  // namespace apt::model

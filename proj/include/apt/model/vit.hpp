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

#include <cstddef>
#include <span>
#include <vector>

#include "apt/model/backbone.hpp"

namespace apt::model {

/// Extra key/value rows appended inside attention, [n_p x head_dim] each and
/// shared by every head and every sample. Undefined vars mean no injection.
template <typename T>
struct Injection {
  Var<T> keys;
  Var<T> values;

  bool empty() const { return !keys.defined(); }
  std::size_t num_prompts() const { return empty() ? 0 : keys.value().rows(); }
};

/// Lets a tuning mode intervene around each block: VPT appends and strips
/// token rows, APT supplies per-block key/value injections.
template <typename T>
class ForwardHook {
 public:
  virtual ~ForwardHook() = default;
  virtual Var<T> before_block(std::size_t /*block*/, const Var<T>& x, std::size_t /*batch*/) {
    return x;
  }
  virtual Injection<T> injection(std::size_t /*block*/) { return {}; }
  virtual Var<T> after_block(std::size_t /*block*/, const Var<T>& x, std::size_t /*batch*/) {
    return x;
  }
};

/// Optional capture of the token activations entering each block.
template <typename T>
struct ForwardTrace {
  std::vector<Tensor<T>> block_inputs;
};

/// Rearranges a [T x H x W x C] clip into [n_x x patch_dim] tubelet rows.
/// Tokens are ordered (t, y, x); each row is ordered (dt, dy, dx, c).
template <typename T>
Tensor<T> patchify(const Tensor<T>& video, const ArchSpec& arch);

/// Tubelet projection plus positional table for a batch of clips:
/// returns [batch*n_x x d].
template <typename T>
Var<T> tubelet_embed(std::span<const Tensor<T>> videos, const Backbone<T>& backbone);

/// Scaled dot-product attention over `heads` heads for `batch` stacked
/// sequences. q, k, v are [batch*n x d]; injected rows are concatenated to
/// every head's keys/values. Output has the shape of q. Reports MACs.
template <typename T>
Var<T> attention_core(const Var<T>& q, const Var<T>& k, const Var<T>& v, std::size_t heads,
                      std::size_t batch, const Injection<T>& injection = {});

/// Projections + attention_core + output projection.
template <typename T>
Var<T> mha_forward(const Var<T>& x, const BlockWeights<T>& w, std::size_t heads,
                   std::size_t batch, const Injection<T>& injection = {});

/// Pre-norm block: x + MHA(LN1(x)), then + MLP(LN2(.)) with GELU.
template <typename T>
Var<T> block_forward(const Var<T>& x, const BlockWeights<T>& w, std::size_t heads,
                     std::size_t batch, const Injection<T>& injection = {});

/// Two-layer GELU MLP of a block (exposed for compositional tests).
template <typename T>
Var<T> mlp_forward(const Var<T>& x, const BlockWeights<T>& w);

/// Embedding, all blocks, token mean-pool, fc_norm, linear head.
/// Returns logits [batch x num_classes].
template <typename T>
Var<T> model_forward(std::span<const Tensor<T>> videos, const Backbone<T>& backbone,
                     ForwardHook<T>* hook = nullptr, ForwardTrace<T>* trace = nullptr);

inline constexpr double kLayerNormEps = 1e-6;

}  // namespace apt::model

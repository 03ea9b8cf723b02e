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
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "apt/model/vit.hpp"
#include "apt/numerics/rng.hpp"

namespace apt::prompt {

using model::ArchSpec;
using model::NamedParam;
using model::ParamGroup;
using numerics::Rng;
using numerics::Tensor;
using numerics::Var;

/// Which transformer blocks receive prompts.
class DepthPlacement {
 public:
  DepthPlacement() = default;
  explicit DepthPlacement(std::vector<bool> placed) : placed_(std::move(placed)) {}

  static DepthPlacement all(std::size_t depth);
  /// The last k blocks (k clamped to depth).
  static DepthPlacement deepest(std::size_t depth, std::size_t k);
  /// The first k blocks (k clamped to depth).
  static DepthPlacement shallowest(std::size_t depth, std::size_t k);
  /// Parses "all", "deepest:K" or "shallowest:K".
  static DepthPlacement parse(const std::string& text, std::size_t depth);

  bool placed(std::size_t block) const { return block < placed_.size() && placed_[block]; }
  std::size_t depth() const { return placed_.size(); }
  std::size_t count() const;
  /// Inverse of parse() for the three canonical shapes; explicit lists
  /// otherwise ("blocks:0,2").
  std::string to_string() const;

  bool operator==(const DepthPlacement&) const = default;

 private:
  std::vector<bool> placed_;
};

struct FullTuning {
  bool operator==(const FullTuning&) const = default;
};
struct LinearProbe {
  bool operator==(const LinearProbe&) const = default;
};
struct VptDeep {
  std::size_t num_prompts = 0;
  bool operator==(const VptDeep&) const = default;
};
struct AptMode {
  std::size_t num_prompts = 0;
  DepthPlacement placement;
  double dropout_rate = 0.10;
  bool reparam = true;
  bool operator==(const AptMode&) const = default;
};

using TuningMode = std::variant<FullTuning, LinearProbe, VptDeep, AptMode>;

/// "full", "linear", "vpt" or "apt".
std::string mode_name(const TuningMode& mode);
std::size_t mode_num_prompts(const TuningMode& mode);
/// Stable tag used in checkpoint headers, e.g. "apt:n_p=16:all:dropout=0.1:reparam=1".
std::string mode_tag(const TuningMode& mode);
/// Apt with all blocks placed, default dropout and reparameterization.
AptMode apt_all(std::size_t depth, std::size_t num_prompts);
/// Builds a mode from its name ("full", "linear", "vpt", "apt"); apt gets
/// apt_all() defaults.
TuningMode make_mode(const std::string& name, std::size_t num_prompts, std::size_t depth);

/// K/V prompts of one placed block, in per-head space, shared across heads.
template <typename T>
struct AptBlockPrompts {
  Var<T> keys;          // [n_p x head_dim]
  Var<T> values;        // [n_p x head_dim]
  Var<T> key_scales;    // [n_p], initialised to exactly 1
  Var<T> value_scales;  // [n_p], initialised to exactly 1
};

template <typename T>
struct AptPromptSet {
  std::size_t num_prompts = 0;
  double dropout_rate = 0.0;
  bool reparam = true;
  std::vector<std::optional<AptBlockPrompts<T>>> blocks;  // one slot per block

  static AptPromptSet init(const ArchSpec& arch, const AptMode& mode, std::uint64_t seed,
                           double init_std);
  std::vector<NamedParam<T>> parameters() const;
};

/// VPT-deep: a fresh [n_p x d] token prompt per block.
template <typename T>
struct VptPromptSet {
  std::size_t num_prompts = 0;
  std::vector<Var<T>> prompts;

  static VptPromptSet init(const ArchSpec& arch, std::size_t num_prompts, std::uint64_t seed,
                           double init_std);
  std::vector<NamedParam<T>> parameters() const;
};

/// out[i,:] = max(scales[i], 1) * prompts[i,:]. The clamp's subgradient at
/// exactly 1 is taken as 1 so scalars initialised at 1 still learn.
template <typename T>
Var<T> scale_rows_clamped(const Var<T>& prompts, const Var<T>& scales);

/// Scaled reparameterization of one placed block (raw prompts when disabled).
template <typename T>
std::pair<Var<T>, Var<T>> reparameterize(const AptPromptSet<T>& prompts, std::size_t block);

/// Reparameterize, then inverted dropout (training only) on keys and values
/// independently. Unplaced blocks yield an empty injection.
template <typename T>
model::Injection<T> prepare_injection(const AptPromptSet<T>& prompts, std::size_t block, Rng& rng,
                                      bool training);

/// Appends P after each sample's tokens: [batch*n_x x d] -> [batch*(n_x+n_p) x d].
template <typename T>
Var<T> inject_vpt(const Var<T>& x, std::size_t batch, const Var<T>& prompts);
/// Drops the trailing prompt rows again: keeps the first n_x rows per sample.
template <typename T>
Var<T> strip_vpt(const Var<T>& x, std::size_t batch, std::size_t num_tokens);

struct InitOptions {
  model::InitScales backbone;
  double prompt_std = 0.02;

  bool operator==(const InitOptions&) const = default;
};

/// Backbone plus whatever prompt state the tuning mode needs.
template <typename T>
struct TunedModel {
  TuningMode mode;
  model::Backbone<T> backbone;
  AptPromptSet<T> apt;
  VptPromptSet<T> vpt;

  static TunedModel create(const ArchSpec& arch, const TuningMode& mode, std::uint64_t seed,
                           const InitOptions& init = {});

  /// Backbone inventory followed by prompt tensors.
  std::vector<NamedParam<T>> all_parameters() const;

  /// Logits [batch x classes]. `dropout_rng` is only drawn from when training.
  Var<T> forward(std::span<const Tensor<T>> videos, Rng& dropout_rng, bool training,
                 model::ForwardTrace<T>* trace = nullptr) const;
};

/// Parameters optimized under `mode`; everything else is frozen.
template <typename T>
std::vector<NamedParam<T>> trainable_parameters(const TunedModel<T>& model);
template <typename T>
std::vector<NamedParam<T>> frozen_parameters(const TunedModel<T>& model);

/// Sets requires_grad on exactly the trainable set.
template <typename T>
void apply_trainability(TunedModel<T>& model);

}  // namespace apt::prompt

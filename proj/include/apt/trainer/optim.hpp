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
#include <vector>

#include "apt/model/backbone.hpp"
#include "apt/numerics/tensor.hpp"

namespace apt::trainer {

using model::NamedParam;
using numerics::Tensor;
using numerics::Var;

struct OptimConfig {
  double base_lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double wd_prompts = 1e-5;
  double wd_head = 1e-5;
  double wd_backbone = 0.05;  // only reached in full tuning
  std::optional<std::size_t> warmup_epochs;  // unset: 10% of total_epochs
  std::size_t total_epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  std::size_t resolved_warmup_epochs() const {
    return warmup_epochs ? *warmup_epochs : total_epochs / 10;
  }
  /// Throws numerics::ConfigError naming the offending field.
  void validate() const;

  bool operator==(const OptimConfig&) const = default;
};

/// base_lr * batch / 256.
double scaled_lr(double base_lr, std::size_t batch_size);

/// Step-level view of the schedule.
struct Schedule {
  double peak_lr = 0.0;
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 0;
};

Schedule make_schedule(const OptimConfig& config, std::size_t steps_per_epoch);

/// Linear 0 -> peak over the warmup steps, then half-cosine reaching 0 at
/// step total_steps - 1.
double lr_at(std::size_t step, const Schedule& schedule);

struct ParamGroupConfig {
  std::string name;
  double weight_decay = 0.0;
  std::vector<NamedParam<float>> params;
};

/// Moments of one parameter; empty tensors until the first step.
struct AdamState {
  std::string name;
  Tensor<float> m;
  Tensor<float> v;
};

/// Groups trainable parameters by role: "prompts", "head", "backbone".
/// Empty groups are dropped.
std::vector<ParamGroupConfig> group_parameters(const std::vector<NamedParam<float>>& trainable,
                                               const OptimConfig& config);

/// AdamW with decoupled weight decay: theta *= (1 - lr*wd), then the
/// bias-corrected adaptive update. A parameter without a gradient is treated
/// as having a zero gradient.
class AdamW {
 public:
  AdamW(std::vector<ParamGroupConfig> groups, double beta1, double beta2, double eps);
  AdamW(std::vector<ParamGroupConfig> groups, const OptimConfig& config)
      : AdamW(std::move(groups), config.beta1, config.beta2, config.eps) {}

  /// Throws numerics::NumericError naming the parameter on a non-finite gradient;
  /// no parameter is modified in that case.
  void step(double lr);
  void zero_grad();

  const std::vector<ParamGroupConfig>& groups() const { return groups_; }
  std::uint64_t steps_taken() const { return t_; }
  const std::vector<AdamState>& state() const { return state_; }
  /// Restores moments and step count; names and shapes must match.
  void load_state(std::vector<AdamState> state, std::uint64_t steps);

 private:
  std::vector<ParamGroupConfig> groups_;
  std::vector<AdamState> state_;  // flattened over groups in order
  double beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
};

}  // namespace apt::trainer

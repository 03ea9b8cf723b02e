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

#include "apt/trainer/optim.hpp"

#include <cmath>
#include <numbers>

#include "apt/numerics/binary_io.hpp"

namespace apt::trainer {

using numerics::ConfigError;
using numerics::NumericError;

void OptimConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(std::isfinite(base_lr) && base_lr >= 0, "base_lr must be a finite value >= 0");
  require(beta1 >= 0 && beta1 < 1, "beta1 must lie in [0, 1)");
  require(beta2 >= 0 && beta2 < 1, "beta2 must lie in [0, 1)");
  require(eps > 0, "eps must be > 0");
  require(wd_prompts >= 0, "wd_prompts must be >= 0");
  require(wd_head >= 0, "wd_head must be >= 0");
  require(wd_backbone >= 0, "wd_backbone must be >= 0");
  require(batch_size > 0, "batch_size must be > 0");
  if (total_epochs > 0) {
    require(resolved_warmup_epochs() < total_epochs,
            "warmup_epochs (" + std::to_string(resolved_warmup_epochs()) +
                ") must be smaller than total_epochs (" + std::to_string(total_epochs) + ")");
  }
}

double scaled_lr(double base_lr, std::size_t batch_size) {
  return base_lr * static_cast<double>(batch_size) / 256.0;
}

Schedule make_schedule(const OptimConfig& config, std::size_t steps_per_epoch) {
  return {scaled_lr(config.base_lr, config.batch_size),
          config.resolved_warmup_epochs() * steps_per_epoch, config.total_epochs * steps_per_epoch};
}

double lr_at(std::size_t step, const Schedule& s) {
  if (step < s.warmup_steps) {
    return s.peak_lr * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
  }
  if (s.total_steps <= s.warmup_steps + 1) return s.peak_lr;
  const double span = static_cast<double>(s.total_steps - 1 - s.warmup_steps);
  const double progress = std::min(1.0, static_cast<double>(step - s.warmup_steps) / span);
  return s.peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

std::vector<ParamGroupConfig> group_parameters(const std::vector<NamedParam<float>>& trainable,
                                               const OptimConfig& config) {
  std::vector<ParamGroupConfig> groups{{"prompts", config.wd_prompts, {}},
                                       {"head", config.wd_head, {}},
                                       {"backbone", config.wd_backbone, {}}};
  for (const auto& p : trainable) {
    switch (p.group) {
      case model::ParamGroup::Prompt: groups[0].params.push_back(p); break;
      case model::ParamGroup::Head: groups[1].params.push_back(p); break;
      case model::ParamGroup::Backbone: groups[2].params.push_back(p); break;
    }
  }
  std::erase_if(groups, [](const ParamGroupConfig& g) { return g.params.empty(); });
  return groups;
}

AdamW::AdamW(std::vector<ParamGroupConfig> groups, double beta1, double beta2, double eps)
    : groups_(std::move(groups)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& g : groups_) {
    for (const auto& p : g.params) state_.push_back({p.name, {}, {}});
  }
}

void AdamW::step(double lr) {
  for (const auto& g : groups_) {
    for (const auto& p : g.params) {
      if (p.var.has_grad() && !p.var.grad().all_finite()) {
        throw NumericError("non-finite gradient in parameter '" + p.name + "' at step " +
                           std::to_string(t_ + 1));
      }
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  std::size_t slot = 0;
  for (auto& g : groups_) {
    const auto decay = static_cast<float>(1.0 - lr * g.weight_decay);
    for (auto& p : g.params) {
      AdamState& st = state_[slot++];
      Var<float> var = p.var;
      auto theta = var.mutable_value().data();
      if (st.m.empty()) {
        st.m = Tensor<float>::zeros_like(var.value());
        st.v = Tensor<float>::zeros_like(var.value());
      }
      const bool has_grad = var.has_grad();
      const float* grad = has_grad ? var.grad().raw() : nullptr;
      float* m = st.m.raw();
      float* v = st.v.raw();
      for (std::size_t i = 0; i < theta.size(); ++i) {
        if (g.weight_decay != 0.0) theta[i] *= decay;
        const double gi = has_grad ? grad[i] : 0.0;
        m[i] = static_cast<float>(beta1_ * m[i] + (1.0 - beta1_) * gi);
        v[i] = static_cast<float>(beta2_ * v[i] + (1.0 - beta2_) * gi * gi);
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        theta[i] = static_cast<float>(theta[i] - lr * m_hat / (std::sqrt(v_hat) + eps_));
      }
    }
  }
}

void AdamW::zero_grad() {
  for (auto& g : groups_) {
    for (auto& p : g.params) {
      Var<float> var = p.var;
      var.zero_grad();
    }
  }
}

void AdamW::load_state(std::vector<AdamState> state, std::uint64_t steps) {
  if (state.size() != state_.size()) {
    throw numerics::FormatError("optimizer state holds " + std::to_string(state.size()) +
                                " tensors, expected " + std::to_string(state_.size()));
  }
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (state[i].name != state_[i].name) {
      throw numerics::FormatError("optimizer state order mismatch at '" + state[i].name + "'");
    }
  }
  std::size_t slot = 0;
  for (const auto& g : groups_) {
    for (const auto& p : g.params) {
      const auto& st = state[slot++];
      if (!st.m.empty() && (st.m.shape() != p.var.shape() || st.v.shape() != p.var.shape())) {
        throw numerics::FormatError("optimizer moment shape mismatch for '" + p.name + "'");
      }
    }
  }
  state_ = std::move(state);
  t_ = steps;
}

}  // namespace apt::trainer

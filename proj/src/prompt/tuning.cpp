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

#include "apt/prompt/tuning.hpp"

#include <algorithm>
#include <sstream>

#include "apt/numerics/ops.hpp"

namespace apt::prompt {

using numerics::ConfigError;
using numerics::DimensionError;
using numerics::Node;
using numerics::StreamPurpose;
namespace nx = apt::numerics;

// ---- placement ------------------------------------------------------------

DepthPlacement DepthPlacement::all(std::size_t depth) {
  return DepthPlacement(std::vector<bool>(depth, true));
}

DepthPlacement DepthPlacement::deepest(std::size_t depth, std::size_t k) {
  std::vector<bool> placed(depth, false);
  k = std::min(k, depth);
  for (std::size_t i = depth - k; i < depth; ++i) placed[i] = true;
  return DepthPlacement(std::move(placed));
}

DepthPlacement DepthPlacement::shallowest(std::size_t depth, std::size_t k) {
  std::vector<bool> placed(depth, false);
  k = std::min(k, depth);
  for (std::size_t i = 0; i < k; ++i) placed[i] = true;
  return DepthPlacement(std::move(placed));
}

DepthPlacement DepthPlacement::parse(const std::string& text, std::size_t depth) {
  if (text == "all") return all(depth);
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("placement '" + text + "' is not all, deepest:K, shallowest:K or blocks:I,J");
  }
  const std::string kind = text.substr(0, colon), arg = text.substr(colon + 1);
  auto to_count = [&](const std::string& s) -> std::size_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("placement '" + text + "' has a non-integer argument");
    }
    return std::stoul(s);
  };
  if (kind == "deepest") return deepest(depth, to_count(arg));
  if (kind == "shallowest") return shallowest(depth, to_count(arg));
  if (kind == "blocks") {
    std::vector<bool> placed(depth, false);
    std::stringstream ss(arg);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      const std::size_t idx = to_count(item);
      if (idx >= depth) throw ConfigError("placement block " + item + " exceeds depth");
      placed[idx] = true;
    }
    return DepthPlacement(std::move(placed));
  }
  throw ConfigError("unknown placement kind '" + kind + "'");
}

std::size_t DepthPlacement::count() const {
  return static_cast<std::size_t>(std::count(placed_.begin(), placed_.end(), true));
}

std::string DepthPlacement::to_string() const {
  const std::size_t depth = placed_.size(), k = count();
  if (k == depth) return "all";
  if (*this == deepest(depth, k)) return "deepest:" + std::to_string(k);
  if (*this == shallowest(depth, k)) return "shallowest:" + std::to_string(k);
  std::string out = "blocks:";
  bool first = true;
  for (std::size_t i = 0; i < depth; ++i) {
    if (!placed_[i]) continue;
    if (!first) out += ",";
    out += std::to_string(i);
    first = false;
  }
  return out;
}

// ---- modes ----------------------------------------------------------------

std::string mode_name(const TuningMode& mode) {
  struct Visitor {
    std::string operator()(const FullTuning&) const { return "full"; }
    std::string operator()(const LinearProbe&) const { return "linear"; }
    std::string operator()(const VptDeep&) const { return "vpt"; }
    std::string operator()(const AptMode&) const { return "apt"; }
  };
  return std::visit(Visitor{}, mode);
}

std::size_t mode_num_prompts(const TuningMode& mode) {
  if (const auto* v = std::get_if<VptDeep>(&mode)) return v->num_prompts;
  if (const auto* a = std::get_if<AptMode>(&mode)) return a->num_prompts;
  return 0;
}

std::string mode_tag(const TuningMode& mode) {
  std::ostringstream os;
  os << mode_name(mode);
  if (const auto* v = std::get_if<VptDeep>(&mode)) os << ":n_p=" << v->num_prompts;
  if (const auto* a = std::get_if<AptMode>(&mode)) {
    os << ":n_p=" << a->num_prompts << ":" << a->placement.to_string()
       << ":dropout=" << a->dropout_rate << ":reparam=" << (a->reparam ? 1 : 0);
  }
  return os.str();
}

AptMode apt_all(std::size_t depth, std::size_t num_prompts) {
  AptMode m;
  m.num_prompts = num_prompts;
  m.placement = DepthPlacement::all(depth);
  return m;
}

TuningMode make_mode(const std::string& name, std::size_t num_prompts, std::size_t depth) {
  if (name == "full") return FullTuning{};
  if (name == "linear") return LinearProbe{};
  if (name == "vpt") return VptDeep{num_prompts};
  if (name == "apt") return apt_all(depth, num_prompts);
  throw ConfigError("unknown mode '" + name + "' (expected full, linear, vpt, apt)");
}

// ---- prompt sets ----------------------------------------------------------

namespace {

template <typename T>
Var<T> normal_tensor(Rng& rng, nx::Shape shape, double std, std::string name) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(rng.truncated_normal(std));
  return Var<T>(std::move(t), false, std::move(name));
}

}  // namespace

template <typename T>
AptPromptSet<T> AptPromptSet<T>::init(const ArchSpec& arch, const AptMode& mode,
                                      std::uint64_t seed, double init_std) {
  if (mode.placement.depth() != arch.depth) {
    throw ConfigError("placement covers " + std::to_string(mode.placement.depth()) +
                      " blocks but the model has " + std::to_string(arch.depth));
  }
  if (!(mode.dropout_rate >= 0.0 && mode.dropout_rate < 1.0)) {
    throw ConfigError("prompt dropout must lie in [0, 1)");
  }
  AptPromptSet set;
  set.num_prompts = mode.num_prompts;
  set.dropout_rate = mode.dropout_rate;
  set.reparam = mode.reparam;
  set.blocks.resize(arch.depth);
  if (mode.num_prompts == 0) return set;
  Rng rng(seed, nx::stream_id(StreamPurpose::Prompt));
  const std::size_t np = mode.num_prompts, hd = arch.head_dim();
  for (std::size_t b = 0; b < arch.depth; ++b) {
    if (!mode.placement.placed(b)) continue;
    const std::string p = "prompt.blocks." + std::to_string(b) + ".";
    AptBlockPrompts<T> bp;
    bp.keys = normal_tensor<T>(rng, {np, hd}, init_std, p + "keys");
    bp.values = normal_tensor<T>(rng, {np, hd}, init_std, p + "values");
    bp.key_scales = Var<T>(Tensor<T>({np}, T(1)), false, p + "key_scales");
    bp.value_scales = Var<T>(Tensor<T>({np}, T(1)), false, p + "value_scales");
    set.blocks[b] = std::move(bp);
  }
  return set;
}

template <typename T>
std::vector<NamedParam<T>> AptPromptSet<T>::parameters() const {
  std::vector<NamedParam<T>> out;
  for (const auto& slot : blocks) {
    if (!slot) continue;
    for (const Var<T>* v : {&slot->keys, &slot->values, &slot->key_scales, &slot->value_scales}) {
      out.push_back({v->name(), *v, ParamGroup::Prompt});
    }
  }
  return out;
}

template <typename T>
VptPromptSet<T> VptPromptSet<T>::init(const ArchSpec& arch, std::size_t num_prompts,
                                      std::uint64_t seed, double init_std) {
  VptPromptSet set;
  set.num_prompts = num_prompts;
  if (num_prompts == 0) return set;
  Rng rng(seed, nx::stream_id(StreamPurpose::Prompt, 1));
  for (std::size_t b = 0; b < arch.depth; ++b) {
    set.prompts.push_back(normal_tensor<T>(rng, {num_prompts, arch.embed_dim}, init_std,
                                           "vpt.blocks." + std::to_string(b) + ".prompts"));
  }
  return set;
}

template <typename T>
std::vector<NamedParam<T>> VptPromptSet<T>::parameters() const {
  std::vector<NamedParam<T>> out;
  for (const auto& p : prompts) out.push_back({p.name(), p, ParamGroup::Prompt});
  return out;
}

// ---- reparameterization and injection --------------------------------------

template <typename T>
Var<T> scale_rows_clamped(const Var<T>& prompts, const Var<T>& scales) {
  const std::size_t rows = prompts.value().rows(), cols = prompts.value().cols();
  if (scales.value().size() != rows) {
    throw DimensionError("scale_rows_clamped: " + std::to_string(scales.value().size()) +
                         " scales for " + std::to_string(rows) + " prompt rows");
  }
  Tensor<T> out = prompts.value();
  for (std::size_t i = 0; i < rows; ++i) {
    const T s = std::max(scales.value()[i], T(1));
    for (std::size_t j = 0; j < cols; ++j) out(i, j) *= s;
  }
  nx::require_finite(out, "scale_rows_clamped");
  return nx::make_result<T>(std::move(out), {prompts, scales}, [rows, cols](Node<T>& self) {
    auto& pp = *self.parents[0];
    auto& ps = *self.parents[1];
    const T* g = self.grad.raw();
    const T* s = ps.value.raw();
    if (pp.requires_grad) {
      T* gp = pp.grad_buffer().raw();
      for (std::size_t i = 0; i < rows; ++i) {
        const T eff = std::max(s[i], T(1));
        for (std::size_t j = 0; j < cols; ++j) gp[i * cols + j] += eff * g[i * cols + j];
      }
    }
    if (ps.requires_grad) {
      T* gs = ps.grad_buffer().raw();
      const T* p = pp.value.raw();
      for (std::size_t i = 0; i < rows; ++i) {
        if (s[i] < T(1)) continue;
        T dot = 0;
        for (std::size_t j = 0; j < cols; ++j) dot += g[i * cols + j] * p[i * cols + j];
        gs[i] += dot;
      }
    }
  });
}

template <typename T>
std::pair<Var<T>, Var<T>> reparameterize(const AptPromptSet<T>& prompts, std::size_t block) {
  const auto& slot = prompts.blocks.at(block);
  if (!slot) throw std::invalid_argument("reparameterize: block has no prompts");
  if (!prompts.reparam) return {slot->keys, slot->values};
  return {scale_rows_clamped(slot->keys, slot->key_scales),
          scale_rows_clamped(slot->values, slot->value_scales)};
}

template <typename T>
model::Injection<T> prepare_injection(const AptPromptSet<T>& prompts, std::size_t block, Rng& rng,
                                      bool training) {
  if (block >= prompts.blocks.size() || !prompts.blocks[block]) return {};
  auto [keys, values] = reparameterize(prompts, block);
  model::Injection<T> inj;
  inj.keys = nx::dropout(keys, prompts.dropout_rate, rng, training);
  inj.values = nx::dropout(values, prompts.dropout_rate, rng, training);
  return inj;
}

template <typename T>
Var<T> inject_vpt(const Var<T>& x, std::size_t batch, const Var<T>& prompts) {
  if (!prompts.defined()) return x;
  return nx::append_rows(x, batch, prompts);
}

template <typename T>
Var<T> strip_vpt(const Var<T>& x, std::size_t batch, std::size_t num_tokens) {
  return nx::take_rows(x, batch, num_tokens);
}

// ---- tuned model ----------------------------------------------------------

namespace {

template <typename T>
class AptHook final : public model::ForwardHook<T> {
 public:
  AptHook(const AptPromptSet<T>& prompts, Rng& rng, bool training)
      : prompts_(prompts), rng_(rng), training_(training) {}
  model::Injection<T> injection(std::size_t block) override {
    return prepare_injection(prompts_, block, rng_, training_);
  }

 private:
  const AptPromptSet<T>& prompts_;
  Rng& rng_;
  bool training_;
};

template <typename T>
class VptHook final : public model::ForwardHook<T> {
 public:
  VptHook(const VptPromptSet<T>& prompts, std::size_t num_tokens)
      : prompts_(prompts), num_tokens_(num_tokens) {}
  Var<T> before_block(std::size_t block, const Var<T>& x, std::size_t batch) override {
    return inject_vpt(x, batch, prompts_.prompts.at(block));
  }
  Var<T> after_block(std::size_t, const Var<T>& x, std::size_t batch) override {
    return strip_vpt(x, batch, num_tokens_);
  }

 private:
  const VptPromptSet<T>& prompts_;
  std::size_t num_tokens_;
};

}  // namespace

template <typename T>
TunedModel<T> TunedModel<T>::create(const ArchSpec& arch, const TuningMode& mode,
                                    std::uint64_t seed, const InitOptions& init) {
  TunedModel m;
  m.mode = mode;
  m.backbone = model::Backbone<T>::init(arch, seed, init.backbone);
  if (const auto* a = std::get_if<AptMode>(&mode)) {
    m.apt = AptPromptSet<T>::init(arch, *a, seed, init.prompt_std);
  } else {
    m.apt.blocks.resize(arch.depth);
  }
  if (const auto* v = std::get_if<VptDeep>(&mode)) {
    m.vpt = VptPromptSet<T>::init(arch, v->num_prompts, seed, init.prompt_std);
  }
  apply_trainability(m);
  return m;
}

template <typename T>
std::vector<NamedParam<T>> TunedModel<T>::all_parameters() const {
  auto out = backbone.parameters();
  for (auto& p : apt.parameters()) out.push_back(std::move(p));
  for (auto& p : vpt.parameters()) out.push_back(std::move(p));
  return out;
}

template <typename T>
Var<T> TunedModel<T>::forward(std::span<const Tensor<T>> videos, Rng& dropout_rng, bool training,
                              model::ForwardTrace<T>* trace) const {
  if (std::holds_alternative<AptMode>(mode) && apt.num_prompts > 0) {
    AptHook<T> hook(apt, dropout_rng, training);
    return model::model_forward(videos, backbone, &hook, trace);
  }
  if (std::holds_alternative<VptDeep>(mode) && vpt.num_prompts > 0) {
    VptHook<T> hook(vpt, backbone.arch.num_tokens());
    return model::model_forward(videos, backbone, &hook, trace);
  }
  return model::model_forward<T>(videos, backbone, nullptr, trace);
}

template <typename T>
std::vector<NamedParam<T>> trainable_parameters(const TunedModel<T>& model) {
  if (std::holds_alternative<FullTuning>(model.mode)) return model.backbone.parameters();
  std::vector<NamedParam<T>> out;
  if (std::holds_alternative<AptMode>(model.mode)) out = model.apt.parameters();
  if (std::holds_alternative<VptDeep>(model.mode)) out = model.vpt.parameters();
  for (auto& p : model.backbone.parameters()) {
    if (p.group == ParamGroup::Head) out.push_back(std::move(p));
  }
  return out;
}

template <typename T>
std::vector<NamedParam<T>> frozen_parameters(const TunedModel<T>& model) {
  const auto trainable = trainable_parameters(model);
  std::vector<NamedParam<T>> out;
  for (auto& p : model.all_parameters()) {
    const bool is_trainable = std::any_of(trainable.begin(), trainable.end(),
                                          [&](const auto& t) { return t.var.same_node(p.var); });
    if (!is_trainable) out.push_back(std::move(p));
  }
  return out;
}

template <typename T>
void apply_trainability(TunedModel<T>& model) {
  for (auto& p : frozen_parameters(model)) {
    p.var.set_requires_grad(false);
    p.var.zero_grad();
  }
  for (auto& p : trainable_parameters(model)) p.var.set_requires_grad(true);
}

#define APT_INSTANTIATE_PROMPT(T)                                                                \
  template struct AptPromptSet<T>;                                                              \
  template struct VptPromptSet<T>;                                                              \
  template struct TunedModel<T>;                                                                \
  template Var<T> scale_rows_clamped<T>(const Var<T>&, const Var<T>&);                          \
  template std::pair<Var<T>, Var<T>> reparameterize<T>(const AptPromptSet<T>&, std::size_t);   \
  template model::Injection<T> prepare_injection<T>(const AptPromptSet<T>&, std::size_t, Rng&, \
                                                    bool);                                      \
  template Var<T> inject_vpt<T>(const Var<T>&, std::size_t, const Var<T>&);                     \
  template Var<T> strip_vpt<T>(const Var<T>&, std::size_t, std::size_t);                        \
  template std::vector<NamedParam<T>> trainable_parameters<T>(const TunedModel<T>&);           \
  template std::vector<NamedParam<T>> frozen_parameters<T>(const TunedModel<T>&);              \
  template void apply_trainability<T>(TunedModel<T>&);

APT_INSTANTIATE_PROMPT(float)
APT_INSTANTIATE_PROMPT(double)

#undef APT_INSTANTIATE_PROMPT

}  // namespace apt::prompt

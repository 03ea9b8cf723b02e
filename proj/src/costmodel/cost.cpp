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

#include "apt/costmodel/cost.hpp"

#include <variant>

namespace apt::cost {
namespace {

using u64 = std::uint64_t;

u64 block_params(const ArchSpec& a) {
  const u64 d = a.embed_dim, hidden = a.mlp_hidden();
  const u64 norms = 2 * (2 * d);
  const u64 attention = 4 * d * d + 3 * d;  // q, k, v, proj weights; q, v, proj biases
  const u64 mlp = d * hidden + hidden + hidden * d + d;
  return norms + attention + mlp;
}

u64 head_params(const ArchSpec& a, bool include_fc_norm) {
  const u64 d = a.embed_dim, c = a.num_classes;
  return d * c + c + (include_fc_norm ? 2 * d : 0);
}

u64 prompt_params(const TuningMode& mode, const ArchSpec& a) {
  if (const auto* v = std::get_if<prompt::VptDeep>(&mode)) {
    return static_cast<u64>(a.depth) * v->num_prompts * a.embed_dim;
  }
  if (const auto* p = std::get_if<prompt::AptMode>(&mode)) {
    const u64 placed = p->placement.depth() == 0 ? a.depth : p->placement.count();
    const u64 per_block = 2 * static_cast<u64>(p->num_prompts) * a.head_dim() +
                          (p->reparam ? 2 * static_cast<u64>(p->num_prompts) : 0);
    return placed * per_block;
  }
  return 0;
}

/// Encoder-block MACs for a sequence of `rows` tokens attending over
/// `rows + extra_kv` keys.
u64 block_macs(const ArchSpec& a, u64 rows, u64 extra_kv) {
  const u64 d = a.embed_dim, hidden = a.mlp_hidden();
  const u64 qkv = 3 * rows * d * d;
  const u64 scores_and_mix = 2 * rows * (rows + extra_kv) * d;
  const u64 proj = rows * d * d;
  const u64 mlp = 2 * rows * d * hidden;
  return qkv + scores_and_mix + proj + mlp;
}

}  // namespace

u64 backbone_params(const ArchSpec& a) {
  const u64 embed = static_cast<u64>(a.patch_dim()) * a.embed_dim + a.embed_dim;
  return embed + a.depth * block_params(a) + head_params(a, true);
}

u64 count_params(const TuningMode& mode, const ArchSpec& a, bool include_fc_norm) {
  if (std::holds_alternative<prompt::FullTuning>(mode)) return backbone_params(a);
  return prompt_params(mode, a) + head_params(a, include_fc_norm);
}

u64 total_params(const TuningMode& mode, const ArchSpec& a) {
  return backbone_params(a) + prompt_params(mode, a);
}

u64 count_macs(const TuningMode& mode, const ArchSpec& a) {
  const u64 n = a.num_tokens(), d = a.embed_dim;
  const u64 embed = n * a.patch_dim() * d;
  const u64 head = d * a.num_classes;
  u64 blocks = 0;
  for (std::size_t b = 0; b < a.depth; ++b) {
    u64 rows = n, extra = 0;
    if (const auto* v = std::get_if<prompt::VptDeep>(&mode)) rows += v->num_prompts;
    if (const auto* p = std::get_if<prompt::AptMode>(&mode)) {
      if (p->placement.placed(b)) extra = p->num_prompts;
    }
    blocks += block_macs(a, rows, extra);
  }
  return embed + blocks + head;
}

CostReport report(const TuningMode& mode, const ArchSpec& a) {
  CostReport r;
  r.mode = prompt::mode_name(mode);
  r.arch = a;
  r.num_prompts = prompt::mode_num_prompts(mode);
  r.trainable_params = count_params(mode, a);
  r.total_params = total_params(mode, a);
  r.macs = count_macs(mode, a);
  r.gflops = static_cast<double>(r.macs) / 1e9;
  return r;
}

std::vector<SweepRow> sweep(const ArchSpec& a, std::span<const std::string> modes,
                            std::span<const std::size_t> prompt_counts) {
  std::vector<SweepRow> rows;
  const double full = static_cast<double>(backbone_params(a));
  for (const auto& name : modes) {
    for (const std::size_t np : prompt_counts) {
      const TuningMode mode = prompt::make_mode(name, np, a.depth);
      const CostReport r = report(mode, a);
      rows.push_back({name, np, r.trainable_params,
                      100.0 * static_cast<double>(r.trainable_params) / full, r.macs, r.gflops});
    }
  }
  return rows;
}

}  // namespace apt::cost

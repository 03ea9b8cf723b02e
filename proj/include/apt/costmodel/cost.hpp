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
#include <span>
#include <string>
#include <vector>

#include "apt/model/arch.hpp"
#include "apt/prompt/tuning.hpp"

namespace apt::cost {

using model::ArchSpec;
using prompt::TuningMode;

/// Closed-form cost of one (mode, architecture) pair. MACs follow the
/// flop-counter convention used for the published tables: one
/// multiply-accumulate is one FLOP, and only matrix products are counted
/// (softmax, norms, activations, pooling and bias adds are free).
struct CostReport {
  std::string mode;
  ArchSpec arch;
  std::size_t num_prompts = 0;
  std::uint64_t trainable_params = 0;
  std::uint64_t total_params = 0;
  std::uint64_t macs = 0;
  double gflops = 0.0;
};

/// Size of the full backbone inventory (embedding, blocks, fc_norm, head).
std::uint64_t backbone_params(const ArchSpec& arch);

/// Trainable scalars under `mode`. `include_fc_norm` controls whether the
/// final norm counts as trainable for the parameter-efficient modes.
std::uint64_t count_params(const TuningMode& mode, const ArchSpec& arch,
                           bool include_fc_norm = true);

/// Backbone inventory plus any prompt tensors the mode adds.
std::uint64_t total_params(const TuningMode& mode, const ArchSpec& arch);

/// Per-clip forward MACs.
std::uint64_t count_macs(const TuningMode& mode, const ArchSpec& arch);

CostReport report(const TuningMode& mode, const ArchSpec& arch);

struct SweepRow {
  std::string mode;
  std::size_t num_prompts = 0;
  std::uint64_t trainable_params = 0;
  double trainable_pct = 0.0;  // of the full-tuning parameter count
  std::uint64_t macs = 0;
  double gflops = 0.0;
};

/// One row per (mode name, n_p), modes in the given order, n_p innermost.
std::vector<SweepRow> sweep(const ArchSpec& arch, std::span<const std::string> modes,
                            std::span<const std::size_t> prompt_counts);

}  // namespace apt::cost

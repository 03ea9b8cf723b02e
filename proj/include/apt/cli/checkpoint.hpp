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
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "apt/prompt/tuning.hpp"
#include "apt/trainer/optim.hpp"

namespace apt::cli {

using numerics::Tensor;

/// A stored artifact does not belong to the requested architecture or mode.
class ArtifactMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Little-endian "APTC" file: version u32, arch hash u64, mode tag, then a
/// table of (name, dtype u8, ndim u32, dims u64..., raw data) and an
/// optional optimizer section (flag u8, step u64, per-parameter moments).
struct Checkpoint {
  std::uint64_t arch_hash = 0;
  std::string mode_tag;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;
  bool has_optimizer = false;
  std::uint64_t optimizer_steps = 0;
  std::vector<trainer::AdamState> optimizer;

  bool operator==(const Checkpoint& other) const;
};

/// Snapshot of every parameter of `model` (backbone and prompts).
Checkpoint capture(const prompt::TunedModel<float>& model);

/// Copies stored tensors into `model`. Throws ArtifactMismatch when the
/// architecture hash, mode tag, tensor names or shapes disagree.
void restore(prompt::TunedModel<float>& model, const Checkpoint& checkpoint);

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
/// Throws numerics::FormatError on a malformed or truncated file.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace apt::cli

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
#include <string>

namespace apt::model {

/// Architecture hyperparameters shared by the network and the cost model.
struct ArchSpec {
  std::size_t embed_dim = 64;
  std::size_t num_heads = 4;
  std::size_t depth = 4;
  double mlp_ratio = 4.0;
  std::size_t frames = 8;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t channels = 1;
  std::size_t tubelet_t = 2;
  std::size_t patch = 4;
  std::size_t num_classes = 4;

  std::size_t head_dim() const { return embed_dim / num_heads; }
  std::size_t mlp_hidden() const;
  std::size_t patch_dim() const { return tubelet_t * patch * patch * channels; }
  std::size_t temporal_tokens() const { return frames / tubelet_t; }
  std::size_t grid_h() const { return height / patch; }
  std::size_t grid_w() const { return width / patch; }
  std::size_t num_tokens() const { return temporal_tokens() * grid_h() * grid_w(); }

  /// Throws numerics::ConfigError naming the first violated constraint.
  void validate() const;

  /// Canonical one-line description; the checkpoint hash is taken over it.
  std::string canonical() const;
  std::uint64_t hash() const;

  bool operator==(const ArchSpec&) const = default;
};

/// d=384, h=6, L=12 on 16x224x224x3 clips, tubelet 2x16x16.
ArchSpec vit_small_video(std::size_t num_classes = 174);
/// d=768, h=12, L=12 on 16x224x224x3 clips, tubelet 2x16x16.
ArchSpec vit_base_video(std::size_t num_classes = 101);
/// d=64, h=4, L=4 on 8x16x16x1 clips, tubelet 2x4x4 (64 tokens).
ArchSpec toy_arch(std::size_t num_classes = 4);

/// Looks up "vit-small-video", "vit-base-video" or "toy".
ArchSpec preset(const std::string& name);

}  // namespace apt::model

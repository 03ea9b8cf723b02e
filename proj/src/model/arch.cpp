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

#include "apt/model/arch.hpp"

#include <cmath>
#include <sstream>

#include "apt/numerics/tensor.hpp"

namespace apt::model {

using numerics::ConfigError;

std::size_t ArchSpec::mlp_hidden() const {
  return static_cast<std::size_t>(std::llround(mlp_ratio * static_cast<double>(embed_dim)));
}

void ArchSpec::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(embed_dim, "embed_dim");
  positive(num_heads, "num_heads");
  positive(depth, "depth");
  positive(frames, "frames");
  positive(height, "height");
  positive(width, "width");
  positive(channels, "channels");
  positive(tubelet_t, "tubelet_t");
  positive(patch, "patch");
  positive(num_classes, "num_classes");
  if (!(mlp_ratio > 0.0) || mlp_hidden() == 0) throw ConfigError("mlp_ratio must be positive");
  if (embed_dim % num_heads != 0) {
    throw ConfigError("embed_dim " + std::to_string(embed_dim) + " is not divisible by num_heads " +
                      std::to_string(num_heads));
  }
  if (frames % tubelet_t != 0) {
    throw ConfigError("frames " + std::to_string(frames) + " is not divisible by tubelet_t " +
                      std::to_string(tubelet_t));
  }
  if (height % patch != 0 || width % patch != 0) {
    throw ConfigError("spatial size " + std::to_string(height) + "x" + std::to_string(width) +
                      " is not divisible by patch " + std::to_string(patch));
  }
}

std::string ArchSpec::canonical() const {
  std::ostringstream os;
  os << "d=" << embed_dim << ";h=" << num_heads << ";L=" << depth << ";mlp=" << mlp_hidden()
     << ";T=" << frames << ";H=" << height << ";W=" << width << ";C=" << channels
     << ";t=" << tubelet_t << ";p=" << patch << ";classes=" << num_classes;
  return os.str();
}

std::uint64_t ArchSpec::hash() const {
  // FNV-1a, 64-bit.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ArchSpec vit_small_video(std::size_t num_classes) {
  ArchSpec a;
  a.embed_dim = 384;
  a.num_heads = 6;
  a.depth = 12;
  a.frames = 16;
  a.height = 224;
  a.width = 224;
  a.channels = 3;
  a.tubelet_t = 2;
  a.patch = 16;
  a.num_classes = num_classes;
  return a;
}

ArchSpec vit_base_video(std::size_t num_classes) {
  ArchSpec a = vit_small_video(num_classes);
  a.embed_dim = 768;
  a.num_heads = 12;
  return a;
}

ArchSpec toy_arch(std::size_t num_classes) {
  ArchSpec a;
  a.num_classes = num_classes;
  return a;
}

ArchSpec preset(const std::string& name) {
  if (name == "vit-small-video") return vit_small_video();
  if (name == "vit-base-video") return vit_base_video();
  if (name == "toy") return toy_arch();
  throw ConfigError("unknown preset '" + name + "' (expected toy, vit-small-video, vit-base-video)");
}

}  // namespace apt::model

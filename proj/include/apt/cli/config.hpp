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

#include "apt/data/synthetic.hpp"
#include "apt/data/views.hpp"
#include "apt/model/arch.hpp"
#include "apt/prompt/tuning.hpp"
#include "apt/trainer/trainer.hpp"

namespace apt::cli {

/// Everything a run needs. All randomness derives from `seed`.
///
/// Text form, one `key = value` per line; `#` starts a comment. `preset`
/// (toy, vit-small-video, vit-base-video) is applied first wherever it
/// appears, then every other key overrides it. Unknown or repeated keys are
/// errors. Booleans are true/false; warmup_epochs accepts "auto" (10% of
/// total_epochs).
struct RunConfig {
  std::string preset = "toy";
  model::ArchSpec arch = model::toy_arch();

  std::string mode = "apt";  // full, linear, vpt, apt
  std::size_t num_prompts = 16;
  std::string placement = "all";
  double prompt_dropout = 0.1;
  bool reparam = true;

  prompt::InitOptions init;
  trainer::OptimConfig optim;

  std::string data_path;  // APTD file to split; empty generates data
  std::size_t train_samples = 2000;
  std::size_t test_samples = 500;
  std::size_t video_frames = 0;  // 0: arch.frames
  double noise_sigma = 0.1;
  data::MotionOptions motion;
  bool augment = false;
  double augment_noise = 0.0;
  std::size_t batch_repeat = 1;
  std::size_t temporal_clips = 1;
  std::size_t spatial_views = 3;
  std::size_t eval_every = 0;

  std::uint64_t seed = 0;
  std::string output_dir = "run";

  bool operator==(const RunConfig&) const = default;

  /// Throws numerics::ConfigError with the offending key in the message.
  void validate() const;

  prompt::TuningMode tuning_mode() const;
  trainer::TrainOptions train_options() const;
  data::ViewSpec view_spec() const;
  data::VideoDims video_dims() const;
};

/// Errors carry the line number and key.
RunConfig parse_config(const std::string& text);
/// Missing or unreadable files raise a ConfigError naming the path.
RunConfig load_config(const std::string& path);
/// Every key, in a fixed order; parse_config(serialize(c)) == c.
std::string serialize(const RunConfig& config);

/// Shortest text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace apt::cli

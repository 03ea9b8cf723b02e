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
#include <ostream>
#include <string>
#include <vector>

#include "apt/cli/config.hpp"
#include "apt/costmodel/cost.hpp"

namespace apt::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailure = 1,
  kExitConfigError = 2,
  kExitInvariantBreach = 3,
  kExitArtifactMismatch = 4,
};

/// Train/test partition described by the config: generated from `seed`
/// unless `data_path` names an APTD file.
data::DatasetSplits load_splits(const RunConfig& config);

/// One metrics.jsonl line (no trailing newline). Wall time is deliberately
/// absent so reruns are byte-identical.
std::string metrics_line(const trainer::EpochMetrics& m);

/// "3.2%" at or above one percent, "0.45%" below.
std::string format_percent(double pct);

/// CSV with header "mode,n_p,trainable_params,trainable_pct,gflops".
std::string cost_csv(const std::vector<cost::SweepRow>& rows);

int cmd_train(const std::string& config_path, std::ostream& out, std::ostream& err);

struct EvalRequest {
  std::string config_path;
  std::string checkpoint_path;
  std::string data_path;                      // empty: the config's test split
  std::optional<std::size_t> temporal_clips;  // overrides the config
};
int cmd_eval(const EvalRequest& request, std::ostream& out, std::ostream& err);

struct CostRequest {
  std::string preset = "vit-base-video";
  std::vector<std::string> modes{"apt"};
  std::vector<std::size_t> prompt_counts{0};
  std::optional<std::size_t> num_classes;  // preset default when unset
};
int cmd_cost(const CostRequest& request, std::ostream& out, std::ostream& err);

struct GradcheckRequest {
  std::string config_path;
  double threshold = 1e-5;
  /// Central-difference step. Some key-prompt gradients are ~1e-7 against a
  /// loss near 2, so at 1e-5 a single ulp of loss noise already costs ~1e-5
  /// relative error; 1e-4 cuts roundoff tenfold while truncation stays ~1e-8.
  double eps = 1e-4;
  std::size_t batch = 2;
  /// Scales the backward pass of the logits; anything but 1 corrupts the
  /// gradient and must make the check fail.
  double fault_factor = 1.0;
};
int cmd_gradcheck(const GradcheckRequest& request, std::ostream& out, std::ostream& err);

struct DatagenRequest {
  std::string config_path;  // optional; supplies dims, classes, noise, motion, seed
  std::string output_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;  // default: train_samples + test_samples
};
int cmd_datagen(const DatagenRequest& request, std::ostream& out, std::ostream& err);

}  // namespace apt::cli

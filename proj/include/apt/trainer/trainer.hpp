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
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "apt/data/synthetic.hpp"
#include "apt/data/views.hpp"
#include "apt/prompt/tuning.hpp"
#include "apt/trainer/optim.hpp"

namespace apt::trainer {

using prompt::TunedModel;

/// A parameter outside the trainable set changed during training.
class FrozenViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvalResult {
  double top1 = 0.0;  // percent
  double top5 = 0.0;  // percent, top-min(5, classes)
  double val_loss = 0.0;
  std::size_t views = 0;  // views per sample
  std::size_t samples = 0;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double lr = 0.0;  // learning rate of the epoch's first step
  double wall_ms = 0.0;
  std::optional<EvalResult> eval;
};

struct TrainOptions {
  OptimConfig optim;
  bool augment = false;
  double augment_noise = 0.0;
  /// Every sample appears this many times per epoch, each with its own
  /// augmentation draw. 1 disables repetition.
  std::size_t batch_repeat = 1;
  data::ViewSpec views;
  /// Evaluate every N epochs; 0 evaluates after the final epoch only.
  std::size_t eval_every = 0;
};

struct TrainResult {
  std::vector<EpochMetrics> epochs;
  std::uint64_t steps = 0;
  std::uint64_t frozen_checksum = 0;
  std::vector<AdamState> optimizer_state;
};

/// Probability-averaged scoring of one prediction per sample.
/// `probs` is [samples x classes]; ties in rank go to the lower class index.
EvalResult score(const std::vector<std::vector<double>>& probs, const std::vector<int>& labels);

/// Multi-view evaluation with dropout off: softmax probabilities averaged
/// over all views of each sample.
EvalResult evaluate(const TunedModel<float>& model, const data::SyntheticVideoSet& set,
                    const data::ViewSpec& views, std::size_t batch_size = 32);

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Optimizes the trainable set of `model` in place. The frozen set is
/// checksummed before and after; a difference throws FrozenViolation.
/// `eval_set` may be null to skip evaluation.
TrainResult train(TunedModel<float>& model, const data::SyntheticVideoSet& train_set,
                  const data::SyntheticVideoSet* eval_set, const TrainOptions& options,
                  const EpochCallback& on_epoch = {});

/// Optimizer steps per epoch; the last batch may be partial.
std::size_t steps_per_epoch(std::size_t n_samples, const TrainOptions& options);

}  // namespace apt::trainer

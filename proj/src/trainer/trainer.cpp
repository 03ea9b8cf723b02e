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

#include "apt/trainer/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "apt/numerics/ops.hpp"

namespace apt::trainer {

using numerics::Rng;
using numerics::StreamPurpose;
using numerics::Tensor;

EvalResult score(const std::vector<std::vector<double>>& probs, const std::vector<int>& labels) {
  if (probs.size() != labels.size()) {
    throw numerics::DimensionError("score: " + std::to_string(probs.size()) + " predictions for " +
                                   std::to_string(labels.size()) + " labels");
  }
  EvalResult r;
  r.samples = probs.size();
  if (probs.empty()) return r;
  std::size_t hit1 = 0, hit5 = 0;
  double loss = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto& p = probs[i];
    const auto label = static_cast<std::size_t>(labels[i]);
    if (label >= p.size()) throw numerics::DimensionError("score: label out of range");
    const std::size_t k5 = std::min<std::size_t>(5, p.size());
    std::size_t rank = 0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (p[j] > p[label] || (p[j] == p[label] && j < label)) ++rank;
    }
    hit1 += rank < 1;
    hit5 += rank < k5;
    loss -= std::log(std::max(p[label], std::numeric_limits<double>::min()));
  }
  const auto n = static_cast<double>(probs.size());
  r.top1 = 100.0 * static_cast<double>(hit1) / n;
  r.top5 = 100.0 * static_cast<double>(hit5) / n;
  r.val_loss = loss / n;
  return r;
}

EvalResult evaluate(const TunedModel<float>& model, const data::SyntheticVideoSet& set,
                    const data::ViewSpec& views, std::size_t batch_size) {
  const std::size_t n_views = views.total_views();
  const std::size_t per_batch = std::max<std::size_t>(1, batch_size);
  std::vector<std::vector<double>> probs;
  std::vector<int> labels;
  probs.reserve(set.size());
  Rng unused;
  for (std::size_t start = 0; start < set.size(); start += per_batch) {
    const std::size_t end = std::min(set.size(), start + per_batch);
    std::vector<Tensor<float>> clips;
    clips.reserve((end - start) * n_views);
    for (std::size_t i = start; i < end; ++i) {
      auto v = data::make_views(set.samples[i].video, views);
      std::move(v.begin(), v.end(), std::back_inserter(clips));
    }
    const auto logits = model.forward(clips, unused, /*training=*/false);
    const auto& out = logits.value();
    const std::size_t classes = out.cols();
    for (std::size_t i = start; i < end; ++i) {
      std::vector<double> avg(classes, 0.0);
      for (std::size_t v = 0; v < n_views; ++v) {
        const auto row = out.row((i - start) * n_views + v);
        double mx = -std::numeric_limits<double>::infinity();
        for (float z : row) mx = std::max(mx, static_cast<double>(z));
        double total = 0.0;
        std::vector<double> e(classes);
        for (std::size_t c = 0; c < classes; ++c) total += e[c] = std::exp(row[c] - mx);
        for (std::size_t c = 0; c < classes; ++c) avg[c] += e[c] / total;
      }
      for (auto& p : avg) p /= static_cast<double>(n_views);
      probs.push_back(std::move(avg));
      labels.push_back(set.samples[i].label);
    }
  }
  auto r = score(probs, labels);
  r.views = n_views;
  return r;
}

std::size_t steps_per_epoch(std::size_t n_samples, const TrainOptions& options) {
  const std::size_t items = n_samples * std::max<std::size_t>(1, options.batch_repeat);
  return (items + options.optim.batch_size - 1) / options.optim.batch_size;
}

TrainResult train(TunedModel<float>& model, const data::SyntheticVideoSet& train_set,
                  const data::SyntheticVideoSet* eval_set, const TrainOptions& options,
                  const EpochCallback& on_epoch) {
  const OptimConfig& cfg = options.optim;
  cfg.validate();
  if (options.batch_repeat == 0) throw numerics::ConfigError("batch_repeat must be >= 1");
  if (train_set.size() == 0 && cfg.total_epochs > 0) {
    throw numerics::ConfigError("training set is empty");
  }

  prompt::apply_trainability(model);
  const auto frozen = prompt::frozen_parameters(model);
  const std::uint64_t frozen_before = model::checksum(frozen);

  AdamW optimizer(group_parameters(prompt::trainable_parameters(model), cfg), cfg);
  const std::size_t spe = steps_per_epoch(train_set.size(), options);
  const Schedule schedule = make_schedule(cfg, spe);

  TrainResult result;
  std::vector<std::size_t> order(train_set.size() * options.batch_repeat);
  for (std::size_t e = 0; e < cfg.total_epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i % train_set.size();
    Rng shuffle_rng(cfg.seed, numerics::stream_id(StreamPurpose::Shuffle, e));
    Rng dropout_rng(cfg.seed, numerics::stream_id(StreamPurpose::Dropout, e));
    Rng augment_rng(cfg.seed, numerics::stream_id(StreamPurpose::Augment, e));
    shuffle_rng.shuffle(std::span<std::size_t>(order));

    EpochMetrics m;
    m.epoch = e + 1;
    m.lr = lr_at(result.steps, schedule);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<Tensor<float>> videos;
      std::vector<int> labels;
      videos.reserve(end - start);
      for (std::size_t j = start; j < end; ++j) {
        const auto& s = train_set.samples[order[j]];
        videos.push_back(options.augment ? data::augment(s.video, augment_rng, options.augment_noise)
                                         : s.video);
        labels.push_back(s.label);
      }
      const auto logits = model.forward(videos, dropout_rng, /*training=*/true);
      const auto loss = numerics::cross_entropy(logits, std::span<const int>(labels));
      optimizer.zero_grad();
      numerics::backward(loss);
      optimizer.step(lr_at(result.steps, schedule));
      ++result.steps;
      loss_sum += static_cast<double>(loss.value()[0]) * static_cast<double>(end - start);
    }
    m.train_loss = loss_sum / static_cast<double>(order.size());

    const bool last = e + 1 == cfg.total_epochs;
    const bool due = options.eval_every > 0 ? (e + 1) % options.eval_every == 0 || last : last;
    if (eval_set != nullptr && due) m.eval = evaluate(model, *eval_set, options.views, cfg.batch_size);
    m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (on_epoch) on_epoch(m);
    result.epochs.push_back(std::move(m));
  }
  optimizer.zero_grad();

  const std::uint64_t frozen_after = model::checksum(frozen);
  if (frozen_after != frozen_before) {
    throw FrozenViolation("frozen parameters changed during training (checksum " +
                          std::to_string(frozen_before) + " -> " + std::to_string(frozen_after) + ")");
  }
  result.frozen_checksum = frozen_after;
  result.optimizer_state = optimizer.state();
  return result;
}

}  // namespace apt::trainer

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

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "apt/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace apt::cli;
  CLI::App app{"Attention prompt tuning workbench for video transformers"};
  app.require_subcommand(1);

  std::string train_config;
  auto* train = app.add_subcommand("train", "Train a model; writes metrics.jsonl and a checkpoint");
  train->add_option("config", train_config, "Run config file")->required();

  EvalRequest eval_req;
  std::size_t clips = 0;
  auto* eval = app.add_subcommand("eval", "Multi-view top-1/top-5 evaluation of a checkpoint");
  eval->add_option("--config", eval_req.config_path, "Run config the checkpoint was trained with")
      ->required();
  eval->add_option("--checkpoint", eval_req.checkpoint_path, "APTC checkpoint")->required();
  eval->add_option("--data", eval_req.data_path, "APTD dataset (default: the config's test split)");
  eval->add_option("--clips", clips, "Temporal clips K (views = 3K)");

  CostRequest cost_req;
  std::size_t classes = 0;
  auto* cost = app.add_subcommand("cost", "Trainable parameters and GFLOPs as CSV");
  cost->add_option("--preset", cost_req.preset, "vit-small-video, vit-base-video or toy");
  cost->add_option("--mode", cost_req.modes, "full, linear, vpt, apt (repeatable)")->delimiter(',');
  cost->add_option("--np", cost_req.prompt_counts, "Prompt counts, comma separated")->delimiter(',');
  cost->add_option("--classes", classes, "Number of classes (default: preset)");

  GradcheckRequest grad_req;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check in double precision");
  grad->add_option("config", grad_req.config_path, "Run config file")->required();
  grad->add_option("--batch", grad_req.batch, "Clips in the probe batch");
  grad->add_option("--threshold", grad_req.threshold, "Maximum relative error");
  grad->add_option("--eps", grad_req.eps, "Central-difference step")->capture_default_str();
  grad->add_option("--fault-factor", grad_req.fault_factor,
                   "Corrupt the logits' backward pass by this factor (negative control)");

  DatagenRequest gen_req;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  auto* gen = app.add_subcommand("datagen", "Write a synthetic motion dataset (APTD)");
  gen->add_option("--config", gen_req.config_path, "Run config supplying sizes and motion settings");
  gen->add_option("--out", gen_req.output_path, "Output file")->required();
  auto* seed_opt = gen->add_option("--seed", seed, "Seed (default: config seed)");
  auto* samples_opt = gen->add_option("--samples", samples, "Number of clips");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  if (*train) return cmd_train(train_config, std::cout, std::cerr);
  if (*eval) {
    if (clips > 0) eval_req.temporal_clips = clips;
    return cmd_eval(eval_req, std::cout, std::cerr);
  }
  if (*cost) {
    if (classes > 0) cost_req.num_classes = classes;
    return cmd_cost(cost_req, std::cout, std::cerr);
  }
  if (*grad) return cmd_gradcheck(grad_req, std::cout, std::cerr);
  if (*gen) {
    if (*seed_opt) gen_req.seed = seed;
    if (*samples_opt) gen_req.samples = samples;
    return cmd_datagen(gen_req, std::cout, std::cerr);
  }
  return kExitConfigError;
}

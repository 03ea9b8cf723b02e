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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. `--only 1,4` restricts the run, `--workdir` moves the
// scratch directory used for configs, runs and checkpoints.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "apt/cli/commands.hpp"
#include "apt/costmodel/cost.hpp"
#include "apt/data/synthetic.hpp"
#include "apt/numerics/kernels.hpp"
#include "apt/prompt/tuning.hpp"
#include "apt/trainer/trainer.hpp"

using namespace apt;
namespace fs = std::filesystem;
using json = nlohmann::json;
using prompt::apt_all;
using prompt::TunedModel;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path g_workdir;

// Settings under which the random toy backbone carries usable motion
// features; see the README section on the learning criteria.
const char* kToyLearningConfig =
    "preset = toy\n"
    "num_prompts = 16\n"
    "weight_std = 0.25\n"
    "embed_std = 0.5\n"
    "prompt_std = 0.5\n"
    "base_lr = 0.4\n"
    "batch_size = 32\n"
    "spatial_views = 1\n";

prompt::InitOptions toy_learning_init() {
  prompt::InitOptions init;
  init.backbone.weight_std = 0.25;
  init.backbone.embed_std = 0.5;
  init.prompt_std = 0.5;
  return init;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const auto path = g_workdir / (name + ".cfg");
  std::ofstream(path) << text;
  return path;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    std::vector<std::string> cells;
    std::istringstream cs(line);
    std::string cell;
    while (std::getline(cs, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

// Trainable parameter counts (in M, rounded to 3 decimals) from cmd_cost.
Outcome cost_table(const std::string& preset, std::size_t classes, const std::vector<std::size_t>& counts,
                   const std::vector<double>& expected, const std::vector<double>& tolerance) {
  const auto t0 = Clock::now();
  cli::CostRequest req;
  req.preset = preset;
  req.modes = {"apt"};
  req.prompt_counts = counts;
  req.num_classes = classes;
  std::ostringstream out, err;
  if (cli::cmd_cost(req, out, err) != cli::kExitOk) return {false, "cmd_cost failed: " + err.str()};
  const auto rows = csv_rows(out.str());
  const double secs = seconds_since(t0);
  bool ok = rows.size() == counts.size() && secs < 1.0;
  std::string detail;
  for (std::size_t i = 0; i < rows.size() && i < expected.size(); ++i) {
    const double m = std::round(std::stod(rows[i][2]) / 1e3) / 1e3;
    const bool hit = std::abs(m - expected[i]) <= tolerance[i] + 1e-9;
    ok = ok && hit;
    detail += rows[i][1] + ":" + fmt("%.3f", m) + (hit ? " " : "(!) ");
  }
  return {ok, detail + fmt("[%.3fs]", secs)};
}

Outcome criterion1() {
  return cost_table("vit-small-video", 174, {400, 600, 800, 1000, 1200, 1400, 1600, 2000},
                    {0.692, 1.003, 1.316, 1.628, 1.940, 2.252, 2.564, 3.188},
                    {0, 0.001, 0, 0, 0, 0, 0, 0});
}

Outcome criterion2() {
  return cost_table("vit-base-video", 101, {1, 5, 100, 200, 400}, {0.081, 0.087, 0.235, 0.391, 0.703},
                    std::vector<double>(5, 0.001));
}

Outcome criterion3() {
  const auto arch = model::vit_small_video(174);
  const auto set = prompt::AptPromptSet<float>::init(arch, apt_all(12, 400), 0, 0.02);
  std::size_t scalars = 0;
  for (const auto& slot : set.blocks) {
    if (slot) scalars += slot->key_scales.value().size() + slot->value_scales.value().size();
  }
  auto plain = apt_all(12, 400);
  plain.reparam = false;
  const auto analytic = cost::count_params(apt_all(12, 400), arch) - cost::count_params(plain, arch);
  return {scalars == 9600 && analytic == 9600,
          "instantiated " + std::to_string(scalars) + ", analytic " + std::to_string(analytic)};
}

Outcome criterion4() {
  const auto t0 = Clock::now();
  const auto arch = model::vit_base_video(101);
  const double base = cost::report(prompt::LinearProbe{}, arch).gflops;
  const double delta = cost::report(apt_all(12, 400), arch).gflops - base;
  const double secs = seconds_since(t0);
  const bool ok = std::abs(base - 180.03) / 180.03 < 0.01 && std::abs(delta - 12.02) / 12.02 < 0.10 &&
                  secs < 1.0;
  return {ok, fmt("baseline %.3f G", base) + fmt(", APT-400 delta %.3f G", delta) + fmt(" [%.3fs]", secs)};
}

Outcome criterion5() {
  const auto t0 = Clock::now();
  std::size_t violations = 0, checked = 0;
  for (const auto& arch : {model::vit_small_video(174), model::vit_base_video(101)}) {
    for (std::size_t np = 1; np <= 2048; ++np) {
      const auto a = cost::report(apt_all(arch.depth, np), arch);
      const auto v = cost::report(prompt::VptDeep{np}, arch);
      ++checked;
      if (!(a.trainable_params < v.trainable_params && a.gflops < v.gflops)) ++violations;
    }
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 5.0,
          std::to_string(checked) + " pairs, " + std::to_string(violations) + " violations" +
              fmt(" [%.2fs]", secs)};
}

Outcome criterion6() {
  const auto t0 = Clock::now();
  const auto cfg = write_config("gradcheck", "preset = toy\nmode = apt\nnum_prompts = 8\nplacement = all\n");
  cli::GradcheckRequest req;
  req.config_path = cfg.string();
  req.threshold = 1e-5;
  std::ostringstream out, err;
  const int code = cli::cmd_gradcheck(req, out, err);
  const double secs = seconds_since(t0);
  std::string worst;
  std::istringstream lines(out.str());
  for (std::string line; std::getline(lines, line);) worst += line.substr(0, line.find(" tensors")) + "; ";
  return {code == cli::kExitOk && secs < 120.0, worst + fmt("[%.1fs]", secs)};
}

Outcome criterion7() {
  const auto arch = model::toy_arch();
  const auto zero = TunedModel<float>::create(arch, apt_all(arch.depth, 0), 13);
  const auto probe = TunedModel<float>::create(arch, prompt::LinearProbe{}, 13);
  numerics::Rng rng(13, numerics::stream_id(numerics::StreamPurpose::Data));
  std::size_t equal = 0;
  for (int batch = 0; batch < 4; ++batch) {
    std::vector<numerics::Tensor<float>> videos;
    for (int i = 0; i < 8; ++i) {
      numerics::Tensor<float> v({arch.frames, arch.height, arch.width, arch.channels});
      for (auto& x : v.data()) x = static_cast<float>(rng.normal());
      videos.push_back(std::move(v));
    }
    numerics::Rng d1(1), d2(1);
    const auto a = zero.forward(videos, d1, true).value();
    const auto b = probe.forward(videos, d2, true).value();
    for (std::size_t i = 0; i < 8; ++i) {
      bool same = true;
      for (std::size_t c = 0; c < arch.num_classes; ++c) {
        same = same && std::bit_cast<std::uint32_t>(a(i, c)) == std::bit_cast<std::uint32_t>(b(i, c));
      }
      equal += same;
    }
  }
  return {equal == 32, std::to_string(equal) + "/32 logit rows bitwise equal"};
}

Outcome criterion8() {
  const auto arch = model::toy_arch();
  auto model = TunedModel<float>::create(arch, apt_all(arch.depth, 16), 21, toy_learning_init());
  bool identity = true;
  for (std::size_t b = 0; b < arch.depth; ++b) {
    const auto [k, v] = prompt::reparameterize(model.apt, b);
    identity = identity && k.value().identical(model.apt.blocks[b]->keys.value()) &&
               v.value().identical(model.apt.blocks[b]->values.value());
  }

  // 80 clips at batch 8 for 50 epochs: 500 optimizer steps.
  const auto set = data::generate(21, 80, {8, 16, 16, 1}, 4, 0.1);
  trainer::TrainOptions opt;
  opt.optim.base_lr = 0.4;
  opt.optim.batch_size = 8;
  opt.optim.total_epochs = 50;
  opt.optim.seed = 21;
  opt.views.spatial_views = 1;
  const auto result = trainer::train(model, set, nullptr, opt);

  double min_effective = 1e30;
  std::size_t below_one = 0, mismatches = 0;
  for (std::size_t b = 0; b < arch.depth; ++b) {
    const auto& slot = *model.apt.blocks[b];
    const auto [k, v] = prompt::reparameterize(model.apt, b);
    for (int which = 0; which < 2; ++which) {
      const auto& raw = which == 0 ? slot.keys.value() : slot.values.value();
      const auto& scaled = which == 0 ? k.value() : v.value();
      const auto& scales = which == 0 ? slot.key_scales.value() : slot.value_scales.value();
      for (std::size_t i = 0; i < raw.rows(); ++i) {
        const float s = scales[i];
        below_one += s < 1.0f;
        const float eff = std::max(s, 1.0f);
        min_effective = std::min(min_effective, static_cast<double>(eff));
        for (std::size_t j = 0; j < raw.cols(); ++j) {
          if (scaled(i, j) != eff * raw(i, j)) ++mismatches;
        }
      }
    }
  }
  const bool ok = identity && result.steps == 500 && mismatches == 0 && min_effective >= 1.0;
  return {ok, std::string("identity at init ") + (identity ? "yes" : "NO") + ", steps " +
                  std::to_string(result.steps) + fmt(", min max(s,1) = %.6f", min_effective) + ", " +
                  std::to_string(below_one) + " raw scalars below 1, " + std::to_string(mismatches) +
                  " mismatched elements"};
}

// Backbone group only: fc_norm and the head train in every mode.
std::uint64_t backbone_checksum(const TunedModel<float>& model) {
  auto params = model.backbone.parameters();
  std::erase_if(params, [](const auto& p) { return p.group != model::ParamGroup::Backbone; });
  return model::checksum(params);
}

Outcome criterion9() {
  const auto arch = model::toy_arch();
  const auto set = data::generate(5, 80, {8, 16, 16, 1}, 4, 0.1);
  trainer::TrainOptions opt;
  opt.optim.base_lr = 0.4;
  opt.optim.batch_size = 8;
  opt.optim.total_epochs = 10;  // 100 steps
  opt.optim.seed = 5;
  opt.views.spatial_views = 1;
  const std::vector<std::pair<std::string, prompt::TuningMode>> modes{
      {"linear", prompt::LinearProbe{}}, {"vpt", prompt::VptDeep{16}}, {"apt", apt_all(arch.depth, 16)},
      {"full", prompt::FullTuning{}}};
  bool ok = true;
  std::string detail;
  for (const auto& [name, mode] : modes) {
    auto model = TunedModel<float>::create(arch, mode, 5, toy_learning_init());
    const auto before = backbone_checksum(model);
    std::uint64_t steps = 0;
    try {
      steps = trainer::train(model, set, nullptr, opt).steps;
    } catch (const trainer::FrozenViolation& e) {
      ok = false;
      detail += name + " violation(" + e.what() + ") ";
      continue;
    }
    const bool changed = backbone_checksum(model) != before;
    const bool want_change = name == "full";
    ok = ok && steps == 100 && changed == want_change;
    detail += name + (changed ? ":changed " : ":unchanged ");
  }
  return {ok, detail + "after 100 steps"};
}

Outcome criterion10() {
  const auto arch = model::toy_arch();
  auto mode = apt_all(arch.depth, 16);
  mode.placement = prompt::DepthPlacement::deepest(arch.depth, 2);
  const auto tuned = TunedModel<float>::create(arch, mode, 17, toy_learning_init());
  const auto plain = TunedModel<float>::create(arch, prompt::LinearProbe{}, 17, toy_learning_init());
  const auto set = data::generate(17, 4, {8, 16, 16, 1}, 4, 0.1);
  std::vector<numerics::Tensor<float>> videos;
  for (const auto& s : set.samples) videos.push_back(s.video);
  model::ForwardTrace<float> ta, tb;
  numerics::Rng r1(0), r2(0);
  tuned.forward(videos, r1, false, &ta);
  plain.forward(videos, r2, false, &tb);
  const bool at2 = ta.block_inputs[2].identical(tb.block_inputs[2]);
  const bool at3 = ta.block_inputs[3].identical(tb.block_inputs[3]);
  return {at2, std::string("block 2 input ") + (at2 ? "bitwise equal" : "DIFFERS") + ", block 3 input " +
                   (at3 ? "equal" : "differs (prompted block 2 upstream)")};
}

struct TrainRun {
  bool ok = false;
  double top1 = 0.0;
  double seconds = 0.0;
  fs::path metrics;
  std::string error;
};

TrainRun run_train(const std::string& name, const std::string& mode, const std::string& out_dir) {
  TrainRun r;
  const auto cfg = write_config(name, std::string(kToyLearningConfig) + "mode = " + mode +
                                          "\ntotal_epochs = 8\ntrain_samples = 2000\ntest_samples = 500\n"
                                          "seed = 7\noutput_dir = " + (g_workdir / out_dir).string() + "\n");
  const auto t0 = Clock::now();
  std::ostringstream out, err;
  const int code = cli::cmd_train(cfg.string(), out, err);
  r.seconds = seconds_since(t0);
  if (code != cli::kExitOk) {
    r.error = err.str();
    return r;
  }
  const auto summary = json::parse(out.str());
  r.top1 = summary["eval"]["top1"].get<double>();
  r.metrics = summary["metrics"].get<std::string>();
  r.ok = true;
  return r;
}

TrainRun g_apt_run;

Outcome criterion11() {
  g_apt_run = run_train("toy_apt", "apt", "toy_apt");
  const auto lin = run_train("toy_linear", "linear", "toy_linear");
  if (!g_apt_run.ok || !lin.ok) return {false, "training failed: " + g_apt_run.error + lin.error};
  const double gap = g_apt_run.top1 - lin.top1;
  const double secs = g_apt_run.seconds + lin.seconds;
  return {gap >= 15.0 && secs < 600.0, fmt("APT %.1f%%", g_apt_run.top1) + fmt(" vs linear %.1f%%", lin.top1) +
                                           fmt(" (gap %.1f pts)", gap) + fmt(" [%.0fs]", secs)};
}

Outcome criterion12() {
  const auto arch = model::toy_arch();
  std::size_t wins = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto set = data::generate(seed, 400, {8, 16, 16, 1}, 4, 0.1);
    double final_loss[2] = {0, 0};
    for (int reparam = 1; reparam >= 0; --reparam) {
      auto mode = apt_all(arch.depth, 16);
      mode.reparam = reparam == 1;
      auto model = TunedModel<float>::create(arch, mode, seed, toy_learning_init());
      trainer::TrainOptions opt;
      opt.optim.base_lr = 0.1;
      opt.optim.batch_size = 32;
      opt.optim.total_epochs = 6;
      opt.optim.seed = seed;
      opt.views.spatial_views = 1;
      final_loss[reparam] = trainer::train(model, set, nullptr, opt).epochs.back().train_loss;
    }
    const bool win = final_loss[1] <= final_loss[0];
    wins += win;
    detail += fmt("%.4f", final_loss[1]) + (win ? "<=" : ">") + fmt("%.4f ", final_loss[0]);
  }
  return {wins >= 4, std::to_string(wins) + "/5 seeds reparam-on <= off at base_lr 0.1: " + detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

Outcome criterion13() {
  if (!g_apt_run.ok) g_apt_run = run_train("toy_apt", "apt", "toy_apt");
  if (!g_apt_run.ok) return {false, "first run failed: " + g_apt_run.error};
  const std::string first = slurp(g_apt_run.metrics);
  const auto again = run_train("toy_apt_rerun", "apt", "toy_apt_rerun");
  if (!again.ok) return {false, "rerun failed: " + again.error};
  const std::string second = slurp(again.metrics);
  return {!first.empty() && first == second,
          std::to_string(first.size()) + " vs " + std::to_string(second.size()) + " bytes, " +
              (first == second ? "identical" : "DIFFERENT")};
}

Outcome criterion14() {
  model::ArchSpec a;
  a.embed_dim = 8;
  a.num_heads = 2;
  a.depth = 2;
  a.frames = 4;
  a.height = 8;
  a.width = 16;
  a.tubelet_t = 2;
  a.patch = 4;
  a.num_classes = 4;
  bool ok = a.num_tokens() == 16;
  std::string detail;
  for (std::size_t np : {0, 3}) {
    for (const auto& mode : std::vector<prompt::TuningMode>{apt_all(2, np), prompt::VptDeep{np}}) {
      const auto model = TunedModel<float>::create(a, mode, 1);
      std::vector<numerics::Tensor<float>> clip{numerics::Tensor<float>({4, 8, 16, 1}, 0.5f)};
      numerics::Rng rng(0);
      std::uint64_t measured = 0;
      {
        numerics::ScopedMacCount scope;
        (void)model.forward(clip, rng, false);
        measured = scope.count();
      }
      const auto analytic = cost::count_macs(mode, a);
      ok = ok && measured == analytic;
      detail += prompt::mode_name(mode) + "/" + std::to_string(np) + ":" + std::to_string(analytic) +
                (measured == analytic ? "=" : "!=") + std::to_string(measured) + " ";
    }
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-14"};
  std::vector<int> only;
  std::string workdir = "acceptance_work";
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',');
  app.add_option("--workdir", workdir, "Scratch directory");
  CLI11_PARSE(app, argc, argv);

  g_workdir = fs::absolute(workdir);
  fs::create_directories(g_workdir);
  const std::vector<std::function<Outcome()>> criteria{
      criterion1, criterion2,  criterion3,  criterion4,  criterion5,  criterion6,  criterion7,
      criterion8, criterion9, criterion10, criterion11, criterion12, criterion13, criterion14};
  const std::set<int> selected(only.begin(), only.end());

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %2d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

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

#include "apt/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace apt::cli {

using numerics::ConfigError;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t parse_size(const std::string& v) {
  std::size_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t parse_u64(const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("expected an unsigned 64-bit integer, got '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& v) {
  double out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("expected a finite real number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

struct Field {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define APT_SIZE(KEY, MEMBER)                                                   \
  Field {                                                                       \
    KEY, [](const RunConfig& c) { return std::to_string(c.MEMBER); },           \
        [](RunConfig& c, const std::string& v) { c.MEMBER = parse_size(v); }    \
  }
#define APT_REAL(KEY, MEMBER)                                                   \
  Field {                                                                       \
    KEY, [](const RunConfig& c) { return format_double(c.MEMBER); },            \
        [](RunConfig& c, const std::string& v) { c.MEMBER = parse_real(v); }    \
  }
#define APT_BOOL(KEY, MEMBER)                                                   \
  Field {                                                                       \
    KEY, [](const RunConfig& c) { return std::string(c.MEMBER ? "true" : "false"); }, \
        [](RunConfig& c, const std::string& v) { c.MEMBER = parse_bool(v); }    \
  }
#define APT_TEXT(KEY, MEMBER)                                                   \
  Field {                                                                       \
    KEY, [](const RunConfig& c) { return c.MEMBER; },                           \
        [](RunConfig& c, const std::string& v) { c.MEMBER = v; }                \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      APT_SIZE("embed_dim", arch.embed_dim),
      APT_SIZE("num_heads", arch.num_heads),
      APT_SIZE("depth", arch.depth),
      APT_REAL("mlp_ratio", arch.mlp_ratio),
      APT_SIZE("frames", arch.frames),
      APT_SIZE("height", arch.height),
      APT_SIZE("width", arch.width),
      APT_SIZE("channels", arch.channels),
      APT_SIZE("tubelet_t", arch.tubelet_t),
      APT_SIZE("patch", arch.patch),
      APT_SIZE("num_classes", arch.num_classes),
      APT_TEXT("mode", mode),
      APT_SIZE("num_prompts", num_prompts),
      APT_TEXT("placement", placement),
      APT_REAL("prompt_dropout", prompt_dropout),
      APT_BOOL("reparam", reparam),
      APT_REAL("weight_std", init.backbone.weight_std),
      APT_REAL("embed_std", init.backbone.embed_std),
      APT_REAL("head_std", init.backbone.head_std),
      APT_REAL("prompt_std", init.prompt_std),
      APT_REAL("base_lr", optim.base_lr),
      APT_REAL("beta1", optim.beta1),
      APT_REAL("beta2", optim.beta2),
      APT_REAL("eps", optim.eps),
      APT_REAL("wd_prompts", optim.wd_prompts),
      APT_REAL("wd_head", optim.wd_head),
      APT_REAL("wd_backbone", optim.wd_backbone),
      Field{"warmup_epochs",
            [](const RunConfig& c) {
              return c.optim.warmup_epochs ? std::to_string(*c.optim.warmup_epochs)
                                           : std::string("auto");
            },
            [](RunConfig& c, const std::string& v) {
              if (v == "auto") {
                c.optim.warmup_epochs.reset();
              } else {
                c.optim.warmup_epochs = parse_size(v);
              }
            }},
      APT_SIZE("total_epochs", optim.total_epochs),
      APT_SIZE("batch_size", optim.batch_size),
      APT_TEXT("data_path", data_path),
      APT_SIZE("train_samples", train_samples),
      APT_SIZE("test_samples", test_samples),
      APT_SIZE("video_frames", video_frames),
      APT_REAL("noise_sigma", noise_sigma),
      APT_REAL("motion_speed", motion.speed),
      APT_REAL("blob_sigma", motion.blob_sigma),
      APT_REAL("blob_amplitude", motion.blob_amplitude),
      APT_REAL("texture_amplitude", motion.texture_amplitude),
      APT_BOOL("augment", augment),
      APT_REAL("augment_noise", augment_noise),
      APT_SIZE("batch_repeat", batch_repeat),
      APT_SIZE("temporal_clips", temporal_clips),
      APT_SIZE("spatial_views", spatial_views),
      APT_SIZE("eval_every", eval_every),
      Field{"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
            [](RunConfig& c, const std::string& v) {
              c.seed = parse_u64(v);
              c.optim.seed = c.seed;
            }},
      APT_TEXT("output_dir", output_dir),
  };
  return table;
}

#undef APT_SIZE
#undef APT_REAL
#undef APT_BOOL
#undef APT_TEXT

const Field* find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (key == f.key) return &f;
  }
  return nullptr;
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& msg) {
    throw ConfigError("invalid config: " + key + ": " + msg);
  };
  try {
    arch.validate();
  } catch (const ConfigError& e) {
    fail("arch", e.what());
  }
  if (mode != "full" && mode != "linear" && mode != "vpt" && mode != "apt") {
    fail("mode", "'" + mode + "' is not one of full, linear, vpt, apt");
  }
  try {
    (void)prompt::DepthPlacement::parse(placement, arch.depth);
  } catch (const ConfigError& e) {
    fail("placement", e.what());
  }
  if (!(prompt_dropout >= 0.0 && prompt_dropout < 1.0)) fail("prompt_dropout", "must lie in [0, 1)");
  if (init.backbone.weight_std < 0 || init.backbone.embed_std < 0 || init.backbone.head_std < 0 ||
      init.prompt_std < 0) {
    fail("weight_std/embed_std/head_std/prompt_std", "must be >= 0");
  }
  try {
    optim.validate();
  } catch (const ConfigError& e) {
    fail("optimizer", e.what());
  }
  if (optim.seed != seed) fail("seed", "optimizer seed differs from run seed");
  if (data_path.empty()) {
    if (arch.num_classes != 4 && arch.num_classes != 8) {
      fail("num_classes", "generated motion data needs 4 or 8 classes");
    }
    if (arch.height < 8 || arch.width < 8) fail("height/width", "generated data needs frames of at least 8x8");
    if (train_samples == 0) fail("train_samples", "must be > 0");
    if (test_samples == 0) fail("test_samples", "must be > 0");
  }
  if (video_frames != 0 && video_frames < arch.frames) {
    fail("video_frames", "must be 0 or at least frames (" + std::to_string(arch.frames) + ")");
  }
  if (noise_sigma < 0) fail("noise_sigma", "must be >= 0");
  if (motion.speed < 0 || motion.blob_sigma <= 0) fail("motion_speed/blob_sigma", "must be positive");
  if (augment_noise < 0) fail("augment_noise", "must be >= 0");
  if (batch_repeat == 0) fail("batch_repeat", "must be >= 1");
  if (temporal_clips == 0) fail("temporal_clips", "must be >= 1");
  if (spatial_views == 0) fail("spatial_views", "must be >= 1");
  if (output_dir.empty()) fail("output_dir", "must not be empty");
}

prompt::TuningMode RunConfig::tuning_mode() const {
  auto m = prompt::make_mode(mode, num_prompts, arch.depth);
  if (auto* a = std::get_if<prompt::AptMode>(&m)) {
    a->placement = prompt::DepthPlacement::parse(placement, arch.depth);
    a->dropout_rate = prompt_dropout;
    a->reparam = reparam;
  }
  return m;
}

trainer::TrainOptions RunConfig::train_options() const {
  trainer::TrainOptions o;
  o.optim = optim;
  o.augment = augment;
  o.augment_noise = augment_noise;
  o.batch_repeat = batch_repeat;
  o.views = view_spec();
  o.eval_every = eval_every;
  return o;
}

data::ViewSpec RunConfig::view_spec() const {
  data::ViewSpec v;
  v.temporal_clips = temporal_clips;
  v.spatial_views = spatial_views;
  v.span_frames = arch.frames;
  v.crop_height = arch.height;
  v.crop_width = arch.width;
  return v;
}

data::VideoDims RunConfig::video_dims() const {
  return {video_frames == 0 ? arch.frames : video_frames, arch.height, arch.width, arch.channels};
}

RunConfig parse_config(const std::string& text) {
  std::vector<std::tuple<std::size_t, std::string, std::string>> entries;
  std::set<std::string> seen;
  std::string preset;
  std::istringstream is(text);
  std::string line;
  for (std::size_t no = 1; std::getline(is, line); ++no) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": missing key");
    if (!seen.insert(key).second) throw ConfigError(where + ": key '" + key + "' repeated");
    if (key == "preset") {
      preset = value;
    } else if (find_field(key) == nullptr) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    } else {
      entries.emplace_back(no, key, value);
    }
  }

  RunConfig c;
  if (!preset.empty()) {
    c.preset = preset;
    try {
      c.arch = model::preset(preset);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config key 'preset': ") + e.what());
    }
  }
  for (const auto& [no, key, value] : entries) {
    try {
      find_field(key)->set(c, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(no) + ": key '" + key + "': " + e.what());
    }
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string serialize(const RunConfig& config) {
  std::ostringstream os;
  os << "preset = " << config.preset << "\n";
  for (const auto& f : fields()) os << f.key << " = " << f.get(config) << "\n";
  return os.str();
}

}  // namespace apt::cli

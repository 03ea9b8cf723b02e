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

#include "apt/data/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "apt/numerics/binary_io.hpp"

namespace apt::data {

using numerics::ConfigError;
using numerics::Rng;
using numerics::StreamPurpose;

std::pair<double, double> direction(int label, std::size_t num_classes) {
  if (num_classes != 4 && num_classes != 8) {
    throw ConfigError("motion classes must be 4 or 8, got " + std::to_string(num_classes));
  }
  const double step = 2.0 * std::numbers::pi / static_cast<double>(num_classes);
  const double angle = step * static_cast<double>(label);
  // Exact axis-aligned vectors for the multiples of 90 degrees.
  double dx = std::cos(angle), dy = std::sin(angle);
  if (std::abs(dx) < 1e-12) dx = 0.0;
  if (std::abs(dy) < 1e-12) dy = 0.0;
  return {dx, dy};
}

namespace {

/// Shortest signed distance on a ring of circumference `period`.
double ring_delta(double a, double b, double period) {
  double d = std::fmod(a - b, period);
  if (d > period / 2) d -= period;
  if (d < -period / 2) d += period;
  return d;
}

Tensor<float> render(Rng& rng, const VideoDims& dims, int label, std::size_t num_classes,
                     double noise_sigma, const MotionOptions& m) {
  const std::size_t T = dims.frames, H = dims.height, W = dims.width, C = dims.channels;
  const double fw = static_cast<double>(W), fh = static_cast<double>(H);

  // Static texture: a few random plane waves per channel.
  constexpr int kWaves = 3;
  std::vector<double> texture(H * W * C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    for (int k = 0; k < kWaves; ++k) {
      const double fx = static_cast<double>(1 + rng.below(3)) * (rng.uniform() < 0.5 ? -1 : 1);
      const double fy = static_cast<double>(rng.below(3));
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double amp = m.texture_amplitude / kWaves * rng.uniform(0.5, 1.0);
      for (std::size_t y = 0; y < H; ++y) {
        for (std::size_t x = 0; x < W; ++x) {
          const double arg = 2.0 * std::numbers::pi *
                                 (fx * static_cast<double>(x) / fw + fy * static_cast<double>(y) / fh) +
                             phase;
          texture[(y * W + x) * C + c] += amp * (0.5 + 0.5 * std::sin(arg));
        }
      }
    }
  }

  const auto [dx, dy] = direction(label, num_classes);
  const double x0 = rng.uniform(0.0, fw), y0 = rng.uniform(0.0, fh);
  const double inv_two_var = 1.0 / (2.0 * m.blob_sigma * m.blob_sigma);

  Tensor<float> video({T, H, W, C});
  float* out = video.raw();
  for (std::size_t t = 0; t < T; ++t) {
    const double cx = x0 + dx * m.speed * static_cast<double>(t);
    const double cy = y0 + dy * m.speed * static_cast<double>(t);
    for (std::size_t y = 0; y < H; ++y) {
      const double ey = ring_delta(static_cast<double>(y), cy, fh);
      for (std::size_t x = 0; x < W; ++x) {
        const double ex = ring_delta(static_cast<double>(x), cx, fw);
        const double blob = m.blob_amplitude * std::exp(-(ex * ex + ey * ey) * inv_two_var);
        for (std::size_t c = 0; c < C; ++c) {
          double v = texture[(y * W + x) * C + c] + blob;
          if (noise_sigma > 0.0) v += noise_sigma * rng.normal();
          *out++ = static_cast<float>(v);
        }
      }
    }
  }
  return video;
}

SyntheticVideoSet subset(const SyntheticVideoSet& set, const std::vector<std::size_t>& order,
                         std::size_t begin, std::size_t end) {
  SyntheticVideoSet out;
  out.seed = set.seed;
  out.dims = set.dims;
  out.num_classes = set.num_classes;
  out.noise_sigma = set.noise_sigma;
  for (std::size_t i = begin; i < end; ++i) out.samples.push_back(set.samples[order[i]]);
  return out;
}

}  // namespace

SyntheticVideoSet generate(std::uint64_t seed, std::size_t n_samples, const VideoDims& dims,
                           std::size_t num_classes, double noise_sigma,
                           const MotionOptions& motion) {
  if (num_classes != 4 && num_classes != 8) {
    throw ConfigError("motion classes must be 4 or 8, got " + std::to_string(num_classes));
  }
  if (dims.height < 8 || dims.width < 8) {
    throw ConfigError("frames of " + std::to_string(dims.height) + "x" +
                      std::to_string(dims.width) + " are too small to render motion (min 8x8)");
  }
  if (dims.frames == 0 || dims.channels == 0) throw ConfigError("frames and channels must be positive");
  if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");

  SyntheticVideoSet set;
  set.seed = seed;
  set.dims = dims;
  set.num_classes = num_classes;
  set.noise_sigma = noise_sigma;
  set.samples.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    Rng rng(seed, numerics::stream_id(StreamPurpose::Data, i));
    const int label = static_cast<int>(i % num_classes);
    set.samples.push_back({render(rng, dims, label, num_classes, noise_sigma, motion), label});
  }
  return set;
}

DatasetSplits split(const SyntheticVideoSet& set, double train_ratio, double val_ratio) {
  if (train_ratio < 0 || val_ratio < 0 || train_ratio + val_ratio > 1.0) {
    throw ConfigError("split ratios must be non-negative and sum to at most 1");
  }
  const std::size_t n = set.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(set.seed, numerics::stream_id(StreamPurpose::Split));
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_train = static_cast<std::size_t>(std::floor(train_ratio * static_cast<double>(n) + 1e-9));
  const auto n_val = std::min(
      n - n_train, static_cast<std::size_t>(std::floor(val_ratio * static_cast<double>(n) + 1e-9)));
  return {subset(set, order, 0, n_train), subset(set, order, n_train, n_train + n_val),
          subset(set, order, n_train + n_val, n)};
}

Tensor<float> augment(const Tensor<float>& video, Rng& rng, double pixel_noise) {
  const std::size_t T = video.dim(0), H = video.dim(1), W = video.dim(2), C = video.dim(3);
  const auto sx = static_cast<std::size_t>(rng.below(3));  // 0, 1, 2 -> shift -1, 0, +1
  const auto sy = static_cast<std::size_t>(rng.below(3));
  Tensor<float> out(video.shape());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t y = 0; y < H; ++y) {
      const std::size_t ys = (y + H + sy - 1) % H;
      for (std::size_t x = 0; x < W; ++x) {
        const std::size_t xs = (x + W + sx - 1) % W;
        const float* src = video.raw() + ((t * H + ys) * W + xs) * C;
        float* dst = out.raw() + ((t * H + y) * W + x) * C;
        for (std::size_t c = 0; c < C; ++c) dst[c] = src[c];
      }
    }
  }
  if (pixel_noise > 0.0) {
    for (auto& v : out.data()) v += static_cast<float>(pixel_noise * rng.normal());
  }
  return out;
}

void write_dataset(const std::string& path, const SyntheticVideoSet& set) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  numerics::BinaryWriter w(os);
  w.bytes("APTD");
  w.u32(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(set.size()));
  w.u32(static_cast<std::uint32_t>(set.dims.frames));
  w.u32(static_cast<std::uint32_t>(set.dims.height));
  w.u32(static_cast<std::uint32_t>(set.dims.width));
  w.u32(static_cast<std::uint32_t>(set.dims.channels));
  w.u32(static_cast<std::uint32_t>(set.num_classes));
  w.u64(set.seed);
  w.f64(set.noise_sigma);
  for (const auto& s : set.samples) {
    for (float v : s.video.data()) w.f32(v);
  }
  for (const auto& s : set.samples) w.u32(static_cast<std::uint32_t>(s.label));
  if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

SyntheticVideoSet read_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open dataset '" + path + "'");
  numerics::BinaryReader r(is);
  if (r.bytes(4) != "APTD") throw numerics::FormatError("'" + path + "' is not an APTD dataset");
  const std::uint32_t version = r.u32();
  if (version != kDatasetVersion) {
    throw numerics::FormatError("unsupported dataset version " + std::to_string(version));
  }
  const std::uint32_t n = r.u32();
  SyntheticVideoSet set;
  set.dims.frames = r.u32();
  set.dims.height = r.u32();
  set.dims.width = r.u32();
  set.dims.channels = r.u32();
  set.num_classes = r.u32();
  set.seed = r.u64();
  set.noise_sigma = r.f64();
  if (set.num_classes == 0) throw numerics::FormatError("dataset declares zero classes");
  const numerics::Shape shape{set.dims.frames, set.dims.height, set.dims.width, set.dims.channels};
  const std::size_t per = numerics::shape_numel(shape);
  set.samples.resize(n);
  for (auto& s : set.samples) {
    std::vector<float> data(per);
    for (auto& v : data) v = r.f32();
    s.video = Tensor<float>(shape, std::move(data));
  }
  for (auto& s : set.samples) {
    const std::uint32_t label = r.u32();
    if (label >= set.num_classes) throw numerics::FormatError("label out of range in dataset");
    s.label = static_cast<int>(label);
  }
  return set;
}

}  // namespace apt::data

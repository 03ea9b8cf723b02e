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

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <vector>

#include "doctest.h"

#include "apt/data/synthetic.hpp"
#include "apt/data/views.hpp"
#include "apt/numerics/binary_io.hpp"
#include "apt/model/vit.hpp"

using namespace apt;
using namespace apt::data;
using numerics::Shape;

namespace {

constexpr VideoDims kToyDims{8, 16, 16, 1};

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("apt_test_data_" + name)).string();
}

// Circular mean of intensity along one axis of frame t.
double circular_centroid(const Tensor<float>& v, std::size_t t, bool along_x) {
  const std::size_t h = v.shape()[1], w = v.shape()[2];
  const double period = along_x ? static_cast<double>(w) : static_cast<double>(h);
  double c = 0, s = 0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double mass = v.data()[(t * h + y) * w + x];
      const double angle = 2 * std::numbers::pi * (along_x ? x : y) / period;
      c += mass * std::cos(angle);
      s += mass * std::sin(angle);
    }
  }
  return std::atan2(s, c) * period / (2 * std::numbers::pi);
}

double unwrap(double delta, double period) {
  while (delta > period / 2) delta -= period;
  while (delta <= -period / 2) delta += period;
  return delta;
}

// Knows the rendering model: tracks the blob and picks the nearest direction.
int centroid_oracle(const Tensor<float>& v, std::size_t classes) {
  const std::size_t frames = v.shape()[0];
  double dx = 0, dy = 0;
  for (std::size_t t = 0; t + 1 < frames; ++t) {
    dx += unwrap(circular_centroid(v, t + 1, true) - circular_centroid(v, t, true), v.shape()[2]);
    dy += unwrap(circular_centroid(v, t + 1, false) - circular_centroid(v, t, false), v.shape()[1]);
  }
  int best = 0;
  double best_dot = -1e300;
  for (std::size_t c = 0; c < classes; ++c) {
    const auto [ux, uy] = direction(static_cast<int>(c), classes);
    const double dot = ux * dx + uy * dy;
    if (dot > best_dot) {
      best_dot = dot;
      best = static_cast<int>(c);
    }
  }
  return best;
}

// Mean over tokens of the tubelet rows: the raw-pixel feature a linear
// probe on an untrained patch embedding could at best see.
std::vector<double> token_mean_features(const Tensor<float>& video) {
  const auto arch = model::toy_arch();
  const auto rows = model::patchify(video, arch);
  std::vector<double> f(rows.cols(), 0.0);
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    for (std::size_t j = 0; j < rows.cols(); ++j) f[j] += rows(i, j) / static_cast<double>(rows.rows());
  }
  return f;
}

// Full-batch multinomial logistic regression on standardized features.
double linear_probe_accuracy(const SyntheticVideoSet& train, const SyntheticVideoSet& test) {
  std::vector<std::vector<double>> xs, xt;
  for (const auto& s : train.samples) xs.push_back(token_mean_features(s.video));
  for (const auto& s : test.samples) xt.push_back(token_mean_features(s.video));
  const std::size_t f = xs[0].size(), k = train.num_classes;
  std::vector<double> mu(f, 0), sd(f, 0);
  for (const auto& x : xs) for (std::size_t j = 0; j < f; ++j) mu[j] += x[j] / xs.size();
  for (const auto& x : xs) for (std::size_t j = 0; j < f; ++j) sd[j] += (x[j] - mu[j]) * (x[j] - mu[j]) / xs.size();
  for (auto* set : {&xs, &xt}) {
    for (auto& x : *set) for (std::size_t j = 0; j < f; ++j) x[j] = (x[j] - mu[j]) / std::sqrt(sd[j] + 1e-12);
  }
  std::vector<double> w((f + 1) * k, 0.0);
  auto logits = [&](const std::vector<double>& x) {
    std::vector<double> z(k);
    for (std::size_t c = 0; c < k; ++c) {
      z[c] = w[f * k + c];
      for (std::size_t j = 0; j < f; ++j) z[c] += w[j * k + c] * x[j];
    }
    return z;
  };
  for (int it = 0; it < 300; ++it) {
    std::vector<double> g(w.size(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      auto z = logits(xs[i]);
      const double mx = *std::max_element(z.begin(), z.end());
      double sum = 0;
      for (auto& v : z) sum += v = std::exp(v - mx);
      for (std::size_t c = 0; c < k; ++c) {
        const double r = z[c] / sum - (train.samples[i].label == static_cast<int>(c));
        for (std::size_t j = 0; j < f; ++j) g[j * k + c] += r * xs[i][j];
        g[f * k + c] += r;
      }
    }
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= 0.5 * g[i] / xs.size();
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < xt.size(); ++i) {
    const auto z = logits(xt[i]);
    correct += static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin()) == test.samples[i].label;
  }
  return static_cast<double>(correct) / xt.size();
}

}  // namespace

TEST_CASE("generation is deterministic and balanced") {
  const auto a = generate(3, 100, kToyDims, 4, 0.1);
  const auto b = generate(3, 100, kToyDims, 4, 0.1);
  const auto c = generate(4, 100, kToyDims, 4, 0.1);
  std::array<int, 4> counts{};
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.samples[i].video.identical(b.samples[i].video));
    CHECK(a.samples[i].label == static_cast<int>(i % 4));
    ++counts[a.samples[i].label];
  }
  CHECK(counts == std::array<int, 4>{25, 25, 25, 25});
  CHECK_FALSE(a.samples[0].video.identical(c.samples[0].video));
  CHECK(a.samples[0].video.shape() == Shape{8, 16, 16, 1});
  // A prefix regenerates the same samples.
  CHECK(generate(3, 10, kToyDims, 4, 0.1).samples[9].video.identical(a.samples[9].video));
}

TEST_CASE("directions") {
  CHECK(direction(0, 4) == std::pair<double, double>{1.0, 0.0});
  CHECK(direction(1, 4) == std::pair<double, double>{0.0, 1.0});
  CHECK(direction(2, 4) == std::pair<double, double>{-1.0, 0.0});
  const auto [x, y] = direction(1, 8);
  CHECK(x == doctest::Approx(std::sqrt(0.5)));
  CHECK(y == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("a blob tracker recovers every label") {
  MotionOptions clean;
  clean.texture_amplitude = 0.0;
  for (std::size_t classes : {4, 8}) {
    const auto set = generate(11, 80, kToyDims, classes, 0.0, clean);
    for (const auto& s : set.samples) CHECK(centroid_oracle(s.video, classes) == s.label);
  }
}

TEST_CASE("motion is invisible to a linear model on token-mean pixels") {
  const auto set = generate(5, 1200, kToyDims, 4, 0.1);
  const auto parts = split(set, 1000.0 / 1200.0, 0.0);
  const double acc = linear_probe_accuracy(parts.train, parts.test);
  CHECK(acc < 0.40);
  std::size_t tracked = 0;
  for (const auto& s : parts.test.samples) tracked += centroid_oracle(s.video, 4) == s.label;
  CHECK(static_cast<double>(tracked) / parts.test.size() > 0.9);
}

TEST_CASE("split is a disjoint partition") {
  const auto set = generate(2, 103, kToyDims, 4, 0.1);
  const auto parts = split(set, 0.6, 0.2);
  CHECK(parts.train.size() == 61);
  CHECK(parts.val.size() == 20);
  CHECK(parts.test.size() == 22);
  std::set<std::uint64_t> seen;
  for (const auto* part : {&parts.train, &parts.val, &parts.test}) {
    for (const auto& s : part->samples) {
      const auto bits = std::bit_cast<std::uint32_t>(s.video.data()[0]);
      CHECK(seen.insert(bits).second);
    }
  }
  const auto again = split(set, 0.6, 0.2);
  CHECK(again.test.samples[0].video.identical(parts.test.samples[0].video));
  CHECK_THROWS_AS(split(set, 0.9, 0.2), numerics::ConfigError);
}

TEST_CASE("invalid generator arguments") {
  CHECK_THROWS_AS(generate(0, 4, kToyDims, 5, 0.1), numerics::ConfigError);
  CHECK_THROWS_AS(generate(0, 4, {8, 4, 16, 1}, 4, 0.1), numerics::ConfigError);
  CHECK_THROWS_AS(generate(0, 4, kToyDims, 4, -1.0), numerics::ConfigError);
}

TEST_CASE("dataset files round-trip and reject corruption") {
  const auto set = generate(8, 12, kToyDims, 4, 0.05);
  const auto path = temp_path("roundtrip.aptd");
  write_dataset(path, set);
  const auto back = read_dataset(path);
  CHECK(back.seed == 8);
  CHECK(back.noise_sigma == 0.05);
  CHECK(back.dims == kToyDims);
  REQUIRE(back.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(back.samples[i].video.identical(set.samples[i].video));
    CHECK(back.samples[i].label == set.samples[i].label);
  }

  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 3);
  CHECK_THROWS_AS(read_dataset(path), numerics::FormatError);
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE and some more bytes";
  }
  CHECK_THROWS_AS(read_dataset(path), numerics::FormatError);
  std::filesystem::remove(path);
  CHECK_THROWS(read_dataset(path));
}

TEST_CASE("augmentation keeps the shape and is seeded") {
  const auto set = generate(1, 1, kToyDims, 4, 0.1);
  numerics::Rng r1(4), r2(4);
  const auto a = augment(set.samples[0].video, r1, 0.0);
  const auto b = augment(set.samples[0].video, r2, 0.0);
  CHECK(a.identical(b));
  CHECK(a.shape() == set.samples[0].video.shape());
  // A roll permutes pixels, so the sum is preserved.
  double s0 = 0, s1 = 0;
  for (float v : set.samples[0].video.data()) s0 += v;
  for (float v : a.data()) s1 += v;
  CHECK(s1 == doctest::Approx(s0).epsilon(1e-6));
}

TEST_CASE("temporal windows and spatial crops") {
  CHECK(window_starts(24, 8, 3) == std::vector<std::size_t>{0, 8, 16});
  CHECK(window_starts(24, 8, 1) == std::vector<std::size_t>{8});
  CHECK(window_starts(8, 8, 2) == std::vector<std::size_t>{0, 0});
  CHECK_THROWS_AS(window_starts(4, 8, 1), numerics::DimensionError);

  Tensor<float> video({24, 16, 20, 1});
  for (std::size_t i = 0; i < video.size(); ++i) video[i] = static_cast<float>(i);
  ViewSpec spec{3, 3, 8, 16, 16};
  const auto views = make_views(video, spec);
  REQUIRE(views.size() == 9);
  for (const auto& v : views) CHECK(v.shape() == Shape{8, 16, 16, 1});
  // Clip 1 (start frame 8), crop 2 (x offset 4).
  CHECK(views[5].data()[0] == video.data()[(8 * 16 + 0) * 20 + 4]);
  spec.crop_height = 17;
  CHECK_THROWS_AS(make_views(video, spec), numerics::DimensionError);
}

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
#include <utility>
#include <vector>

#include "apt/numerics/rng.hpp"
#include "apt/numerics/tensor.hpp"

namespace apt::data {

using numerics::Tensor;

struct VideoDims {
  std::size_t frames = 8;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t channels = 1;

  bool operator==(const VideoDims&) const = default;
};

struct Sample {
  Tensor<float> video;  // [T x H x W x C]
  int label = 0;
};

/// Rendering knobs. Classes are motion directions of a Gaussian blob that
/// moves on a torus (wrapping at the borders) over a static texture.
struct MotionOptions {
  double speed = 2.0;        // pixels per frame
  double blob_sigma = 1.0;   // pixels
  double blob_amplitude = 1.0;
  double texture_amplitude = 0.3;

  bool operator==(const MotionOptions&) const = default;
};

struct SyntheticVideoSet {
  std::uint64_t seed = 0;
  VideoDims dims;
  std::size_t num_classes = 0;
  double noise_sigma = 0.0;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
};

/// Unit direction (dx, dy) of class `label`: 4 classes are right, down,
/// left, up; 8 classes add the diagonals in between (45 degree steps).
std::pair<double, double> direction(int label, std::size_t num_classes);

/// Deterministic motion dataset. Sample i has label i % num_classes and is
/// rendered from its own random stream, so any sample can be regenerated
/// independently. Requires num_classes in {4, 8} and H, W >= 8.
SyntheticVideoSet generate(std::uint64_t seed, std::size_t n_samples, const VideoDims& dims,
                           std::size_t num_classes, double noise_sigma,
                           const MotionOptions& motion = {});

struct DatasetSplits {
  SyntheticVideoSet train;
  SyntheticVideoSet val;
  SyntheticVideoSet test;
};

/// Disjoint train/val/test partition; a pure function of the set's seed and
/// the two ratios (test gets the remainder).
DatasetSplits split(const SyntheticVideoSet& set, double train_ratio, double val_ratio);

/// Light augmentation: toroidal roll by up to +-1 pixel in x and y, plus
/// optional per-pixel Gaussian noise.
Tensor<float> augment(const Tensor<float>& video, numerics::Rng& rng, double pixel_noise);

/// Flat little-endian file: "APTD", version u32, then n, T, H, W, C, classes
/// as u32, seed u64, noise f64, all clips as float32, then all labels as u32.
void write_dataset(const std::string& path, const SyntheticVideoSet& set);
SyntheticVideoSet read_dataset(const std::string& path);

inline constexpr std::uint32_t kDatasetVersion = 1;

}  // namespace apt::data

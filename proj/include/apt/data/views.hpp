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
#include <vector>

#include "apt/numerics/tensor.hpp"

namespace apt::data {

using numerics::Tensor;

/// Multi-view test protocol: K temporal clips, each cut into `spatial_views`
/// crops along the longer spatial axis. Predictions are averaged over all
/// K * spatial_views views.
struct ViewSpec {
  std::size_t temporal_clips = 1;
  std::size_t spatial_views = 3;
  std::size_t span_frames = 8;
  std::size_t crop_height = 16;
  std::size_t crop_width = 16;

  std::size_t total_views() const { return temporal_clips * spatial_views; }
};

/// Evenly spaced window starts: floor(i * (length - span) / (count - 1)); a
/// single window is centred.
std::vector<std::size_t> window_starts(std::size_t length, std::size_t span, std::size_t count);

/// Clips ordered clip-major, crop-minor. Throws numerics::DimensionError if
/// the video is shorter or smaller than the requested span and crop.
std::vector<Tensor<float>> make_views(const Tensor<float>& video, const ViewSpec& spec);

}  // namespace apt::data

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

#include "apt/data/views.hpp"

#include <algorithm>
#include <string>

namespace apt::data {

using numerics::DimensionError;

std::vector<std::size_t> window_starts(std::size_t length, std::size_t span, std::size_t count) {
  if (count == 0) throw numerics::ConfigError("window count must be positive");
  if (span > length) {
    throw DimensionError("window of " + std::to_string(span) + " exceeds length " +
                         std::to_string(length));
  }
  const std::size_t room = length - span;
  if (count == 1) return {room / 2};
  std::vector<std::size_t> starts(count);
  for (std::size_t i = 0; i < count; ++i) starts[i] = i * room / (count - 1);
  return starts;
}

std::vector<Tensor<float>> make_views(const Tensor<float>& video, const ViewSpec& spec) {
  if (video.ndim() != 4) {
    throw DimensionError("expected a [T x H x W x C] video, got " + numerics::shape_str(video.shape()));
  }
  const std::size_t T = video.dim(0), H = video.dim(1), W = video.dim(2), C = video.dim(3);
  if (spec.crop_height > H || spec.crop_width > W) {
    throw DimensionError("crop " + std::to_string(spec.crop_height) + "x" +
                         std::to_string(spec.crop_width) + " exceeds frame " + std::to_string(H) +
                         "x" + std::to_string(W));
  }
  const auto t_starts = window_starts(T, spec.span_frames, spec.temporal_clips);
  const bool along_width = W >= H;
  const auto s_starts = along_width ? window_starts(W, spec.crop_width, spec.spatial_views)
                                    : window_starts(H, spec.crop_height, spec.spatial_views);
  const std::size_t y_centre = (H - spec.crop_height) / 2;
  const std::size_t x_centre = (W - spec.crop_width) / 2;

  std::vector<Tensor<float>> views;
  views.reserve(spec.total_views());
  const std::size_t row = spec.crop_width * C;
  for (std::size_t t0 : t_starts) {
    for (std::size_t s0 : s_starts) {
      const std::size_t y0 = along_width ? y_centre : s0;
      const std::size_t x0 = along_width ? s0 : x_centre;
      Tensor<float> view({spec.span_frames, spec.crop_height, spec.crop_width, C});
      float* dst = view.raw();
      for (std::size_t t = 0; t < spec.span_frames; ++t) {
        for (std::size_t y = 0; y < spec.crop_height; ++y) {
          const float* src = video.raw() + (((t0 + t) * H + y0 + y) * W + x0) * C;
          dst = std::copy(src, src + row, dst);
        }
      }
      views.push_back(std::move(view));
    }
  }
  return views;
}

}  // namespace apt::data

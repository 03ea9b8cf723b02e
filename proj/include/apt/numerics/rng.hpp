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

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace apt::numerics {

/// Purposes that get their own independent random stream. Draws on one
/// stream never shift another, so e.g. enabling dropout leaves the data
/// order untouched.
enum class StreamPurpose : std::uint64_t {
  Init = 1,
  Data = 2,
  Shuffle = 3,
  Dropout = 4,
  Augment = 5,
  Split = 6,
  Prompt = 7,
};

/// Packs (purpose, index) into a stream id; index is typically an epoch or a
/// sample number.
constexpr std::uint64_t stream_id(StreamPurpose purpose, std::uint64_t index = 0) noexcept {
  return (static_cast<std::uint64_t>(purpose) << 40) ^ index;
}

/// xoshiro256** seeded through splitmix64 from (seed, stream). All derived
/// draws (uniform, normal, integers) use only integer arithmetic plus
/// IEEE-exact conversions and libm log/sqrt/cos, so identical seeds give
/// identical sequences on every conforming platform.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept;

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal() noexcept;

  /// Normal(0, std) resampled until it falls inside [-bound*std, bound*std].
  double truncated_normal(double std, double bound = 2.0) noexcept;

  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
};

}  // namespace apt::numerics

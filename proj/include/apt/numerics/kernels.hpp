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

namespace apt::numerics {

/// C = alpha * op(A) * op(B) + beta * C on row-major buffers, where op(A) is
/// m x k and op(B) is k x n. A transposed operand is stored as its transpose
/// (k x m for A, n x k for B). Does not touch the MAC counter.
template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, T alpha,
          const T* a, const T* b, T beta, T* c);

/// Numerically stable softmax of one row (max subtraction).
template <typename T>
void softmax_row(const T* in, T* out, std::size_t n);

/// dx = y * (dy - <y, dy>) for one softmax row; accumulates into dx.
template <typename T>
void softmax_row_backward(const T* y, const T* dy, T* dx, std::size_t n);

/// Thread-local multiply-accumulate counter. Forward ops report their matmul
/// work here while a ScopedMacCount is alive; nothing is recorded otherwise.
class MacCounter {
 public:
  static void add(std::uint64_t macs) noexcept;
  static bool active() noexcept;
};

class ScopedMacCount {
 public:
  ScopedMacCount() noexcept;
  ~ScopedMacCount();
  ScopedMacCount(const ScopedMacCount&) = delete;
  ScopedMacCount& operator=(const ScopedMacCount&) = delete;

  std::uint64_t count() const noexcept;

 private:
  bool was_active_;
  std::uint64_t saved_;
};

}  // namespace apt::numerics

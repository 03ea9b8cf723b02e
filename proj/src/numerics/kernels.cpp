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

#include "apt/numerics/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

namespace apt::numerics {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using MutMap = Eigen::Map<RowMat<T>>;

struct CounterState {
  bool active = false;
  std::uint64_t count = 0;
};

CounterState& counter() {
  thread_local CounterState state;
  return state;
}

}  // namespace

template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, T alpha,
          const T* a, const T* b, T beta, T* c) {
  const auto mi = static_cast<Eigen::Index>(m);
  const auto ni = static_cast<Eigen::Index>(n);
  const auto ki = static_cast<Eigen::Index>(k);
  MutMap<T> cm(c, mi, ni);
  if (beta == T(0)) {
    cm.setZero();
  } else if (beta != T(1)) {
    cm *= beta;
  }
  if (!trans_a && !trans_b) {
    cm.noalias() += alpha * (ConstMap<T>(a, mi, ki) * ConstMap<T>(b, ki, ni));
  } else if (!trans_a && trans_b) {
    cm.noalias() += alpha * (ConstMap<T>(a, mi, ki) * ConstMap<T>(b, ni, ki).transpose());
  } else if (trans_a && !trans_b) {
    cm.noalias() += alpha * (ConstMap<T>(a, ki, mi).transpose() * ConstMap<T>(b, ki, ni));
  } else {
    cm.noalias() +=
        alpha * (ConstMap<T>(a, ki, mi).transpose() * ConstMap<T>(b, ni, ki).transpose());
  }
}

template <typename T>
void softmax_row(const T* in, T* out, std::size_t n) {
  const T peak = *std::max_element(in, in + n);
  T total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - peak);
    total += out[i];
  }
  const T inv = T(1) / total;
  for (std::size_t i = 0; i < n; ++i) out[i] *= inv;
}

template <typename T>
void softmax_row_backward(const T* y, const T* dy, T* dx, std::size_t n) {
  T dot = 0;
  for (std::size_t i = 0; i < n; ++i) dot += y[i] * dy[i];
  for (std::size_t i = 0; i < n; ++i) dx[i] += y[i] * (dy[i] - dot);
}

template void gemm<float>(bool, bool, std::size_t, std::size_t, std::size_t, float, const float*,
                          const float*, float, float*);
template void gemm<double>(bool, bool, std::size_t, std::size_t, std::size_t, double,
                           const double*, const double*, double, double*);
template void softmax_row<float>(const float*, float*, std::size_t);
template void softmax_row<double>(const double*, double*, std::size_t);
template void softmax_row_backward<float>(const float*, const float*, float*, std::size_t);
template void softmax_row_backward<double>(const double*, const double*, double*, std::size_t);

void MacCounter::add(std::uint64_t macs) noexcept {
  auto& state = counter();
  if (state.active) state.count += macs;
}

bool MacCounter::active() noexcept { return counter().active; }

ScopedMacCount::ScopedMacCount() noexcept
    : was_active_(counter().active), saved_(counter().count) {
  counter().active = true;
  counter().count = 0;
}

ScopedMacCount::~ScopedMacCount() {
  auto& state = counter();
  const std::uint64_t inner = state.count;
  state.active = was_active_;
  state.count = saved_ + (was_active_ ? inner : 0);
}

std::uint64_t ScopedMacCount::count() const noexcept { return counter().count; }

}  // namespace apt::numerics

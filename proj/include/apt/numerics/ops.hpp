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
#include <span>

#include "apt/numerics/rng.hpp"
#include "apt/numerics/variable.hpp"

namespace apt::numerics {

// Differentiable operations on 2-D (and, where noted, 1-D) variables. Every
// op checks its output for non-finite values and throws NumericError.

/// [m x k] . [k x n] -> [m x n]. Reports m*k*n MACs.
template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b);

/// Elementwise sum of equal shapes.
template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);

/// x [m x n] plus y tiled down the rows; y is [n] or [r x n] with r | m.
template <typename T>
Var<T> add_rows(const Var<T>& x, const Var<T>& y);

template <typename T>
Var<T> scale(const Var<T>& x, T factor);

/// Exact (erf) GELU.
template <typename T>
Var<T> gelu(const Var<T>& x);

/// Per-row standardisation with population variance, then gamma/beta.
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps = T(1e-6));

template <typename T>
Var<T> softmax_rows(const Var<T>& x);

/// Inverted dropout. Identity (same node) when !training or rate == 0.
template <typename T>
Var<T> dropout(const Var<T>& x, double rate, Rng& rng, bool training);

/// Appends the rows of p after each of the `groups` equal row-blocks of x.
/// x [groups*n x d], p [r x d] -> [groups*(n+r) x d].
template <typename T>
Var<T> append_rows(const Var<T>& x, std::size_t groups, const Var<T>& p);

/// Keeps the first `keep` rows of each of the `groups` row-blocks of x.
template <typename T>
Var<T> take_rows(const Var<T>& x, std::size_t groups, std::size_t keep);

/// Mean over each of the `groups` row-blocks: [groups*n x d] -> [groups x d].
template <typename T>
Var<T> mean_rows(const Var<T>& x, std::size_t groups);

/// Mean cross-entropy of softmax(logits) against integer labels; shape [1].
template <typename T>
Var<T> cross_entropy(const Var<T>& logits, std::span<const int> labels);

/// Sum of squared elements; shape [1].
template <typename T>
Var<T> sum_squares(const Var<T>& x);

/// <x, w> for a constant weight tensor of the same shape; shape [1].
template <typename T>
Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& w);

/// Forward identity whose backward multiplies the incoming gradient by
/// `factor`. Only used as a negative control for gradient checking.
template <typename T>
Var<T> faulty_identity(const Var<T>& x, T factor);

/// Throws NumericError naming `what` when t holds NaN/Inf.
template <typename T>
void require_finite(const Tensor<T>& t, const char* what);

}  // namespace apt::numerics

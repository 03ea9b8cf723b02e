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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "apt/numerics/variable.hpp"

namespace apt::numerics {

struct TensorGradError {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t elements = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::vector<TensorGradError> per_tensor;
};

/// |analytic - numeric| / max(1e-8, |analytic| + |numeric|)
double relative_error(double analytic, double numeric) noexcept;

/// Compares reverse-mode gradients of `loss_fn` against central differences
/// over every element of `params`. Runs in double precision; `loss_fn` must
/// rebuild the graph from the current parameter values on each call and
/// must be deterministic (reseed any dropout stream inside it).
GradCheckResult grad_check(const std::function<Var<double>()>& loss_fn,
                           std::span<const Var<double>> params, double eps = 1e-5);

}  // namespace apt::numerics

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

#include "apt/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace apt::numerics {
namespace {

double evaluate(const std::function<Var<double>()>& loss_fn) {
  const Var<double> loss = loss_fn();
  if (loss.value().size() != 1) throw DimensionError("grad_check: loss must be a scalar");
  const double v = loss.value()[0];
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss");
  return v;
}

}  // namespace

double relative_error(double analytic, double numeric) noexcept {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

GradCheckResult grad_check(const std::function<Var<double>()>& loss_fn,
                           std::span<const Var<double>> params, double eps) {
  std::vector<Var<double>> handles(params.begin(), params.end());
  for (auto& p : handles) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  {
    const Var<double> loss = loss_fn();
    if (!std::isfinite(loss.value()[0])) throw NumericError("grad_check: non-finite loss");
    backward(loss);
  }

  GradCheckResult result;
  for (auto& p : handles) {
    const Tensor<double> analytic =
        p.has_grad() ? p.grad() : Tensor<double>::zeros_like(p.value());
    TensorGradError entry{p.name(), 0.0, p.value().size()};
    auto values = p.mutable_value().data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double plus = evaluate(loss_fn);
      values[i] = saved - eps;
      const double minus = evaluate(loss_fn);
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      entry.max_rel_error = std::max(entry.max_rel_error, relative_error(analytic[i], numeric));
    }
    result.max_rel_error = std::max(result.max_rel_error, entry.max_rel_error);
    result.per_tensor.push_back(std::move(entry));
  }
  return result;
}

}  // namespace apt::numerics

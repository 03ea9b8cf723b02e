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

#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"

#include "apt/numerics/grad_check.hpp"
#include "apt/numerics/kernels.hpp"
#include "apt/numerics/ops.hpp"

using namespace apt::numerics;

namespace {

template <typename T>
Var<T> random_var(Rng& rng, Shape shape, double std = 1.0, const char* name = "x") {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(std * rng.normal());
  return Var<T>(std::move(t), false, name);
}

Tensor<double> naive_matmul(const Tensor<double>& a, const Tensor<double>& b) {
  Tensor<double> c({a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

}  // namespace

TEST_CASE("tensor shape bookkeeping") {
  Tensor<float> t({2, 3, 4}, 1.5f);
  CHECK(t.size() == 24);
  CHECK(t.ndim() == 3);
  CHECK(shape_str(t.shape()) == "[2x3x4]");
  CHECK_THROWS_AS(Tensor<float>({2, 0}), DimensionError);
  CHECK_THROWS_AS(Tensor<float>({2, 2}, std::vector<float>(3)), DimensionError);
  auto r = t.reshaped({6, 4});
  CHECK(r.rows() == 6);
  CHECK(r.cols() == 4);
  CHECK(t.all_finite());
  t[5] = std::numeric_limits<float>::infinity();
  CHECK_FALSE(t.all_finite());
  t[5] = std::nanf("");
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("rng streams are reproducible and independent") {
  Rng a(42, stream_id(StreamPurpose::Data, 3)), b(42, stream_id(StreamPurpose::Data, 3));
  Rng c(42, stream_id(StreamPurpose::Data, 4)), d(43, stream_id(StreamPurpose::Data, 3));
  std::vector<std::uint64_t> xa, xb, xc, xd;
  for (int i = 0; i < 16; ++i) {
    xa.push_back(a.next_u64());
    xb.push_back(b.next_u64());
    xc.push_back(c.next_u64());
    xd.push_back(d.next_u64());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);
  CHECK(xa != xd);

  Rng r(1);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const auto k = r.below(7);
    CHECK(k < 7);
    seen.insert(k);
    const double t = r.truncated_normal(0.5);
    CHECK(std::abs(t) <= 1.0);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("matmul matches a triple-loop oracle and counts MACs") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t m = 1 + rng.below(6), k = 1 + rng.below(6), n = 1 + rng.below(6);
    auto a = random_var<double>(rng, {m, k});
    auto b = random_var<double>(rng, {k, n});
    ScopedMacCount scope;
    const auto c = matmul(a, b);
    CHECK(scope.count() == m * k * n);
    const auto want = naive_matmul(a.value(), b.value());
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(c.value()[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(matmul(Var<double>(Tensor<double>({2, 3})), Var<double>(Tensor<double>({2, 3}))),
                  DimensionError);
}

TEST_CASE("gemm transposed operands agree with explicit transposes") {
  const std::vector<double> a{1, 2, 3, 4, 5, 6};  // 2 x 3
  const std::vector<double> b{1, 0, 2, 1, 0, 3};  // 3 x 2
  std::vector<double> c(4), ct(4);
  gemm<double>(false, false, 2, 2, 3, 1.0, a.data(), b.data(), 0.0, c.data());
  const std::vector<double> at{1, 4, 2, 5, 3, 6};  // 3 x 2 storage of A^T
  const std::vector<double> bt{1, 2, 0, 0, 1, 3};  // 2 x 3 storage of B^T
  gemm<double>(true, true, 2, 2, 3, 1.0, at.data(), bt.data(), 0.0, ct.data());
  CHECK(c == std::vector<double>{5, 11, 14, 23});
  CHECK(ct == c);
}

TEST_CASE("softmax of [0, ln 3] is [1/4, 3/4]") {
  Var<double> x(Tensor<double>({1, 2}, {0.0, std::log(3.0)}));
  const auto y = softmax_rows(x);
  CHECK(y.value()[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(y.value()[1] == doctest::Approx(0.75).epsilon(1e-15));
  Var<double> big(Tensor<double>({1, 2}, {1000.0, 1000.0}));
  CHECK(softmax_rows(big).value()[0] == doctest::Approx(0.5));
}

TEST_CASE("layer norm of [1, 3] is [-1, 1]") {
  Var<double> x(Tensor<double>({1, 2}, {1.0, 3.0}));
  Var<double> g(Tensor<double>({2}, 1.0)), b(Tensor<double>({2}, 0.0));
  const auto y = layer_norm(x, g, b, 1e-12);
  CHECK(y.value()[0] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(y.value()[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cross entropy of uniform logits is ln(classes)") {
  Var<double> logits(Tensor<double>({2, 4}, 0.0));
  const std::vector<int> labels{0, 3};
  CHECK(cross_entropy(logits, std::span<const int>(labels)).value()[0] ==
        doctest::Approx(std::log(4.0)).epsilon(1e-15));
  const std::vector<int> bad{0, 4};
  CHECK_THROWS(cross_entropy(logits, std::span<const int>(bad)));
}

TEST_CASE("dropout is inverted and disappears outside training") {
  Var<float> x(Tensor<float>({200, 100}, 1.0f));
  Rng rng(3);
  CHECK(dropout(x, 0.3, rng, false).same_node(x));
  CHECK(dropout(x, 0.0, rng, true).same_node(x));
  const auto y = dropout(x, 0.3, rng, true);
  double sum = 0;
  std::size_t zeros = 0;
  for (float v : y.value().data()) {
    CHECK((v == 0.0f || v == doctest::Approx(1.0 / 0.7)));
    zeros += v == 0.0f;
    sum += v;
  }
  CHECK(sum / 20000.0 == doctest::Approx(1.0).epsilon(0.02));
  CHECK(static_cast<double>(zeros) / 20000.0 == doctest::Approx(0.3).epsilon(0.05));
  CHECK_THROWS_AS(dropout(x, 1.0, rng, true), ConfigError);
}

TEST_CASE("row surgery: append, take and mean") {
  Var<double> x(Tensor<double>({4, 2}, {1, 2, 3, 4, 5, 6, 7, 8}));
  Var<double> p(Tensor<double>({1, 2}, {9, 9}));
  const auto y = append_rows(x, 2, p);
  CHECK(y.value().data()[4] == 9);
  CHECK(y.value().rows() == 6);
  const auto back = take_rows(y, 2, 2);
  CHECK(back.value().identical(x.value()));
  const auto m = mean_rows(x, 2);
  CHECK(std::vector<double>(m.value().data().begin(), m.value().data().end()) ==
        std::vector<double>{2, 3, 6, 7});
}

TEST_CASE("non-finite results are reported") {
  Var<float> a(Tensor<float>({1, 1}, std::numeric_limits<float>::max()));
  CHECK_THROWS_AS(add(a, a), NumericError);
}

TEST_CASE("backward needs a scalar root and accumulates shared uses") {
  Var<double> x(Tensor<double>({1, 3}, {1, 2, 3}), true, "x");
  CHECK_THROWS(backward(add(x, x)));
  backward(sum_squares(add(x, x)));  // 4 * sum(x^2) -> 8x
  CHECK(x.grad()[2] == doctest::Approx(24.0));
}

TEST_CASE("gradient check of sum of squares") {
  Var<double> theta(Tensor<double>({2, 3}, {0.5, -1.0, 2.0, 0.25, 3.0, -0.75}), false, "theta");
  const std::vector<Var<double>> params{theta};
  const auto res = grad_check([&] { return sum_squares(theta); }, params);
  CHECK(res.max_rel_error < 1e-8);
  CHECK(theta.grad()[1] == doctest::Approx(-2.0));
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(0.0, 0.0) == 0.0);
}

// Every differentiable op, at random points, must agree with central differences.
TEST_CASE("property: op gradients match finite differences") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    Rng rng(seed);
    auto a = random_var<double>(rng, {6, 4}, 1.0, "a");
    auto w = random_var<double>(rng, {4, 3}, 1.0, "w");
    auto bias = random_var<double>(rng, {3}, 1.0, "bias");
    auto gamma = random_var<double>(rng, {3}, 1.0, "gamma");
    auto beta = random_var<double>(rng, {3}, 1.0, "beta");
    auto prompt = random_var<double>(rng, {2, 3}, 1.0, "prompt");
    Tensor<double> weights({6, 3});
    for (auto& v : weights.data()) v = rng.normal();
    const auto mix = random_var<double>(rng, {3, 3}, 1.0, "mix");
    const std::vector<int> labels{0, 2};
    const std::vector<Var<double>> params{a, w, bias, gamma, beta, prompt, mix};
    auto loss = [&] {
      const auto pre = add_rows(matmul(a, w), bias);             // 6 x 3
      auto h = layer_norm(gelu(pre), gamma, beta);               // 6 x 3
      h = append_rows(h, 2, prompt);                             // 10 x 3
      h = softmax_rows(scale(h, 1.7));                           // 10 x 3
      const auto pooled = mean_rows(take_rows(h, 2, 4), 2);      // 2 x 3
      const auto logits = add(pooled, matmul(pooled, mix));
      return add(cross_entropy(scale(logits, 3.0), std::span<const int>(labels)),
                 weighted_sum(pre, weights));
    };
    const auto res = grad_check(loss, params);
    INFO("seed " << seed);
    CHECK(res.max_rel_error < 1e-6);
  }
}

TEST_CASE("a corrupted backward pass is caught") {
  Var<double> theta(Tensor<double>({1, 3}, {0.3, -0.2, 0.9}), false, "theta");
  const std::vector<Var<double>> params{theta};
  const auto res = grad_check([&] { return sum_squares(faulty_identity(theta, 1.5)); }, params);
  CHECK(res.max_rel_error > 0.1);
}

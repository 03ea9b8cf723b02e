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

#include "apt/numerics/ops.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "apt/numerics/kernels.hpp"

namespace apt::numerics {
namespace {

template <typename T>
void require_2d(const Var<T>& x, const char* op) {
  if (!x) throw std::invalid_argument(std::string(op) + ": undefined operand");
  if (x.value().ndim() != 2) {
    throw DimensionError(std::string(op) + ": expected a 2-D operand, got " +
                         shape_str(x.shape()));
  }
}

template <typename T>
Node<T>& parent(Node<T>& node, std::size_t i) {
  return *node.parents[i];
}

}  // namespace

template <typename T>
void require_finite(const Tensor<T>& t, const char* what) {
  if (!t.all_finite()) throw NumericError(std::string("non-finite value produced by ") + what);
}

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const std::size_t m = a.value().rows(), k = a.value().cols(), n = b.value().cols();
  if (b.value().rows() != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  Tensor<T> out({m, n});
  gemm<T>(false, false, m, n, k, T(1), a.value().raw(), b.value().raw(), T(0), out.raw());
  MacCounter::add(static_cast<std::uint64_t>(m) * k * n);
  require_finite(out, "matmul");
  return make_result<T>(std::move(out), {a, b}, [m, n, k](Node<T>& self) {
    auto& pa = parent(self, 0);
    auto& pb = parent(self, 1);
    const T* dc = self.grad.raw();
    if (pa.requires_grad) {
      gemm<T>(false, true, m, k, n, T(1), dc, pb.value.raw(), T(1), pa.grad_buffer().raw());
    }
    if (pb.requires_grad) {
      gemm<T>(true, false, k, n, m, T(1), pa.value.raw(), dc, T(1), pb.grad_buffer().raw());
    }
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("add: shapes differ, " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  Tensor<T> out = a.value();
  const auto bd = b.value().data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += bd[i];
  require_finite(out, "add");
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      auto& par = parent(self, p);
      if (!par.requires_grad) continue;
      auto gd = par.grad_buffer().data();
      const auto sd = self.grad.data();
      for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += sd[i];
    }
  });
}

template <typename T>
Var<T> add_rows(const Var<T>& x, const Var<T>& y) {
  require_2d(x, "add_rows");
  const std::size_t m = x.value().rows(), n = x.value().cols();
  const std::size_t r = y.value().ndim() == 1 ? 1 : y.value().rows();
  const std::size_t yn = y.value().ndim() == 1 ? y.value().dim(0) : y.value().cols();
  if (yn != n || m % r != 0) {
    throw DimensionError("add_rows: cannot tile " + shape_str(y.shape()) + " onto " +
                         shape_str(x.shape()));
  }
  Tensor<T> out = x.value();
  const T* yd = y.value().raw();
  T* od = out.raw();
  for (std::size_t i = 0; i < m; ++i) {
    const T* yr = yd + (i % r) * n;
    T* orow = od + i * n;
    for (std::size_t j = 0; j < n; ++j) orow[j] += yr[j];
  }
  require_finite(out, "add_rows");
  return make_result<T>(std::move(out), {x, y}, [m, n, r](Node<T>& self) {
    auto& px = parent(self, 0);
    auto& py = parent(self, 1);
    const T* g = self.grad.raw();
    if (px.requires_grad) {
      T* gx = px.grad_buffer().raw();
      for (std::size_t i = 0; i < m * n; ++i) gx[i] += g[i];
    }
    if (py.requires_grad) {
      T* gy = py.grad_buffer().raw();
      for (std::size_t i = 0; i < m; ++i) {
        const T* grow = g + i * n;
        T* gyr = gy + (i % r) * n;
        for (std::size_t j = 0; j < n; ++j) gyr[j] += grow[j];
      }
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& x, T factor) {
  Tensor<T> out = x.value();
  for (auto& v : out.data()) v *= factor;
  require_finite(out, "scale");
  return make_result<T>(std::move(out), {x}, [factor](Node<T>& self) {
    auto& px = parent(self, 0);
    auto gx = px.grad_buffer().data();
    const auto g = self.grad.data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += factor * g[i];
  });
}

template <typename T>
Var<T> gelu(const Var<T>& x) {
  Tensor<T> out = x.value();
  for (auto& v : out.data()) v = T(0.5) * v * (T(1) + std::erf(v * T(std::numbers::sqrt2 / 2)));
  require_finite(out, "gelu");
  return make_result<T>(std::move(out), {x}, [](Node<T>& self) {
    auto& px = parent(self, 0);
    const auto xd = px.value.data();
    const auto g = self.grad.data();
    auto gx = px.grad_buffer().data();
    const T inv_sqrt_2pi = T(std::numbers::inv_sqrtpi / std::numbers::sqrt2);
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const T v = xd[i];
      const T cdf = T(0.5) * (T(1) + std::erf(v * T(std::numbers::sqrt2 / 2)));
      const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
      gx[i] += g[i] * (cdf + v * pdf);
    }
  });
}

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps) {
  require_2d(x, "layer_norm");
  const std::size_t m = x.value().rows(), d = x.value().cols();
  if (gamma.value().size() != d || beta.value().size() != d) {
    throw DimensionError("layer_norm: affine parameters " + shape_str(gamma.shape()) + "/" +
                         shape_str(beta.shape()) + " do not match width " + std::to_string(d));
  }
  if (!(eps > T(0))) throw ConfigError("layer_norm: eps must be positive");
  Tensor<T> out({m, d});
  std::vector<T> xhat(m * d);
  std::vector<T> inv_std(m);
  const T* xd = x.value().raw();
  const T* gd = gamma.value().raw();
  const T* bd = beta.value().raw();
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = xd + i * d;
    T mean = 0;
    for (std::size_t j = 0; j < d; ++j) mean += row[j];
    mean /= T(d);
    T var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= T(d);
    const T inv = T(1) / std::sqrt(var + eps);
    inv_std[i] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      const T h = (row[j] - mean) * inv;
      xhat[i * d + j] = h;
      out(i, j) = gd[j] * h + bd[j];
    }
  }
  require_finite(out, "layer_norm");
  return make_result<T>(
      std::move(out), {x, gamma, beta},
      [m, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
        auto& px = parent(self, 0);
        auto& pg = parent(self, 1);
        auto& pb = parent(self, 2);
        const T* g = self.grad.raw();
        if (pg.requires_grad || pb.requires_grad) {
          T* gg = pg.requires_grad ? pg.grad_buffer().raw() : nullptr;
          T* gb = pb.requires_grad ? pb.grad_buffer().raw() : nullptr;
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
              if (gg) gg[j] += g[i * d + j] * xhat[i * d + j];
              if (gb) gb[j] += g[i * d + j];
            }
          }
        }
        if (px.requires_grad) {
          T* gx = px.grad_buffer().raw();
          const T* gamma_d = pg.value.raw();
          for (std::size_t i = 0; i < m; ++i) {
            T mean_dh = 0, mean_dh_h = 0;
            for (std::size_t j = 0; j < d; ++j) {
              const T dh = g[i * d + j] * gamma_d[j];
              mean_dh += dh;
              mean_dh_h += dh * xhat[i * d + j];
            }
            mean_dh /= T(d);
            mean_dh_h /= T(d);
            for (std::size_t j = 0; j < d; ++j) {
              const T dh = g[i * d + j] * gamma_d[j];
              gx[i * d + j] += inv_std[i] * (dh - mean_dh - xhat[i * d + j] * mean_dh_h);
            }
          }
        }
      });
}

template <typename T>
Var<T> softmax_rows(const Var<T>& x) {
  require_2d(x, "softmax_rows");
  require_finite(x.value(), "softmax_rows input");
  const std::size_t m = x.value().rows(), n = x.value().cols();
  Tensor<T> out({m, n});
  for (std::size_t i = 0; i < m; ++i) softmax_row(x.value().raw() + i * n, out.raw() + i * n, n);
  return make_result<T>(std::move(out), {x}, [m, n](Node<T>& self) {
    auto& px = parent(self, 0);
    T* gx = px.grad_buffer().raw();
    for (std::size_t i = 0; i < m; ++i) {
      softmax_row_backward(self.value.raw() + i * n, self.grad.raw() + i * n, gx + i * n, n);
    }
  });
}

template <typename T>
Var<T> dropout(const Var<T>& x, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  const T keep_scale = T(1.0 / (1.0 - rate));
  std::vector<T> mask(x.value().size());
  for (auto& mv : mask) mv = rng.uniform() < rate ? T(0) : keep_scale;
  Tensor<T> out = x.value();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= mask[i];
  return make_result<T>(std::move(out), {x}, [mask = std::move(mask)](Node<T>& self) {
    auto& px = parent(self, 0);
    auto gx = px.grad_buffer().data();
    const auto g = self.grad.data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * mask[i];
  });
}

template <typename T>
Var<T> append_rows(const Var<T>& x, std::size_t groups, const Var<T>& p) {
  require_2d(x, "append_rows");
  require_2d(p, "append_rows");
  const std::size_t d = x.value().cols();
  if (p.value().cols() != d) {
    throw DimensionError("append_rows: width mismatch, " + shape_str(x.shape()) + " vs " +
                         shape_str(p.shape()));
  }
  if (groups == 0 || x.value().rows() % groups != 0) {
    throw DimensionError("append_rows: " + std::to_string(x.value().rows()) +
                         " rows do not split into " + std::to_string(groups) + " groups");
  }
  const std::size_t n = x.value().rows() / groups, r = p.value().rows();
  Tensor<T> out({groups * (n + r), d});
  for (std::size_t g = 0; g < groups; ++g) {
    std::copy_n(x.value().raw() + g * n * d, n * d, out.raw() + g * (n + r) * d);
    std::copy_n(p.value().raw(), r * d, out.raw() + (g * (n + r) + n) * d);
  }
  return make_result<T>(std::move(out), {x, p}, [groups, n, r, d](Node<T>& self) {
    auto& px = parent(self, 0);
    auto& pp = parent(self, 1);
    const T* g = self.grad.raw();
    for (std::size_t b = 0; b < groups; ++b) {
      const T* block = g + b * (n + r) * d;
      if (px.requires_grad) {
        T* gx = px.grad_buffer().raw() + b * n * d;
        for (std::size_t i = 0; i < n * d; ++i) gx[i] += block[i];
      }
      if (pp.requires_grad) {
        T* gp = pp.grad_buffer().raw();
        for (std::size_t i = 0; i < r * d; ++i) gp[i] += block[n * d + i];
      }
    }
  });
}

template <typename T>
Var<T> take_rows(const Var<T>& x, std::size_t groups, std::size_t keep) {
  require_2d(x, "take_rows");
  if (groups == 0 || x.value().rows() % groups != 0) {
    throw DimensionError("take_rows: rows do not split into groups");
  }
  const std::size_t n = x.value().rows() / groups, d = x.value().cols();
  if (keep == 0 || keep > n) throw DimensionError("take_rows: keep out of range");
  if (keep == n) return x;
  Tensor<T> out({groups * keep, d});
  for (std::size_t g = 0; g < groups; ++g) {
    std::copy_n(x.value().raw() + g * n * d, keep * d, out.raw() + g * keep * d);
  }
  return make_result<T>(std::move(out), {x}, [groups, n, keep, d](Node<T>& self) {
    auto& px = parent(self, 0);
    T* gx = px.grad_buffer().raw();
    const T* g = self.grad.raw();
    for (std::size_t b = 0; b < groups; ++b) {
      for (std::size_t i = 0; i < keep * d; ++i) gx[b * n * d + i] += g[b * keep * d + i];
    }
  });
}

template <typename T>
Var<T> mean_rows(const Var<T>& x, std::size_t groups) {
  require_2d(x, "mean_rows");
  if (groups == 0 || x.value().rows() % groups != 0) {
    throw DimensionError("mean_rows: rows do not split into groups");
  }
  const std::size_t n = x.value().rows() / groups, d = x.value().cols();
  Tensor<T> out({groups, d});
  const T inv = T(1) / T(n);
  for (std::size_t g = 0; g < groups; ++g) {
    T* orow = out.raw() + g * d;
    for (std::size_t i = 0; i < n; ++i) {
      const T* xr = x.value().raw() + (g * n + i) * d;
      for (std::size_t j = 0; j < d; ++j) orow[j] += xr[j];
    }
    for (std::size_t j = 0; j < d; ++j) orow[j] *= inv;
  }
  return make_result<T>(std::move(out), {x}, [groups, n, d, inv](Node<T>& self) {
    auto& px = parent(self, 0);
    T* gx = px.grad_buffer().raw();
    for (std::size_t g = 0; g < groups; ++g) {
      const T* grow = self.grad.raw() + g * d;
      for (std::size_t i = 0; i < n; ++i) {
        T* gr = gx + (g * n + i) * d;
        for (std::size_t j = 0; j < d; ++j) gr[j] += grow[j] * inv;
      }
    }
  });
}

template <typename T>
Var<T> cross_entropy(const Var<T>& logits, std::span<const int> labels) {
  require_2d(logits, "cross_entropy");
  const std::size_t b = logits.value().rows(), c = logits.value().cols();
  if (labels.size() != b) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(b) + " rows");
  }
  std::vector<T> probs(b * c);
  std::vector<int> lab(labels.begin(), labels.end());
  T loss = 0;
  for (std::size_t i = 0; i < b; ++i) {
    if (lab[i] < 0 || static_cast<std::size_t>(lab[i]) >= c) {
      throw std::out_of_range("cross_entropy: label " + std::to_string(lab[i]) +
                              " outside [0, " + std::to_string(c) + ")");
    }
    const T* row = logits.value().raw() + i * c;
    T peak = row[0];
    for (std::size_t j = 1; j < c; ++j) peak = std::max(peak, row[j]);
    T total = 0;
    for (std::size_t j = 0; j < c; ++j) total += std::exp(row[j] - peak);
    const T log_z = peak + std::log(total);
    loss += log_z - row[lab[i]];
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] = std::exp(row[j] - log_z);
  }
  loss /= T(b);
  Tensor<T> out({1}, std::vector<T>{loss});
  require_finite(out, "cross_entropy");
  return make_result<T>(std::move(out), {logits},
                        [b, c, probs = std::move(probs), lab = std::move(lab)](Node<T>& self) {
                          auto& pl = parent(self, 0);
                          T* gl = pl.grad_buffer().raw();
                          const T g = self.grad[0] / T(b);
                          for (std::size_t i = 0; i < b; ++i) {
                            for (std::size_t j = 0; j < c; ++j) {
                              const T target = static_cast<int>(j) == lab[i] ? T(1) : T(0);
                              gl[i * c + j] += g * (probs[i * c + j] - target);
                            }
                          }
                        });
}

template <typename T>
Var<T> sum_squares(const Var<T>& x) {
  T total = 0;
  for (auto v : x.value().data()) total += v * v;
  Tensor<T> out({1}, std::vector<T>{total});
  require_finite(out, "sum_squares");
  return make_result<T>(std::move(out), {x}, [](Node<T>& self) {
    auto& px = parent(self, 0);
    auto gx = px.grad_buffer().data();
    const auto xd = px.value.data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += T(2) * xd[i] * self.grad[0];
  });
}

template <typename T>
Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& w) {
  if (x.shape() != w.shape()) throw DimensionError("weighted_sum: shape mismatch");
  T total = 0;
  for (std::size_t i = 0; i < w.size(); ++i) total += x.value()[i] * w[i];
  Tensor<T> out({1}, std::vector<T>{total});
  require_finite(out, "weighted_sum");
  return make_result<T>(std::move(out), {x}, [w](Node<T>& self) {
    auto& px = parent(self, 0);
    auto gx = px.grad_buffer().data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += w[i] * self.grad[0];
  });
}

template <typename T>
Var<T> faulty_identity(const Var<T>& x, T factor) {
  return make_result<T>(Tensor<T>(x.value()), {x}, [factor](Node<T>& self) {
    auto& px = parent(self, 0);
    auto gx = px.grad_buffer().data();
    const auto g = self.grad.data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += factor * g[i];
  });
}

#define APT_INSTANTIATE_OPS(T)                                                            \
  template void require_finite<T>(const Tensor<T>&, const char*);                        \
  template Var<T> matmul<T>(const Var<T>&, const Var<T>&);                               \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                                  \
  template Var<T> add_rows<T>(const Var<T>&, const Var<T>&);                             \
  template Var<T> scale<T>(const Var<T>&, T);                                            \
  template Var<T> gelu<T>(const Var<T>&);                                                \
  template Var<T> layer_norm<T>(const Var<T>&, const Var<T>&, const Var<T>&, T);         \
  template Var<T> softmax_rows<T>(const Var<T>&);                                        \
  template Var<T> dropout<T>(const Var<T>&, double, Rng&, bool);                         \
  template Var<T> append_rows<T>(const Var<T>&, std::size_t, const Var<T>&);             \
  template Var<T> take_rows<T>(const Var<T>&, std::size_t, std::size_t);                 \
  template Var<T> mean_rows<T>(const Var<T>&, std::size_t);                              \
  template Var<T> cross_entropy<T>(const Var<T>&, std::span<const int>);                 \
  template Var<T> sum_squares<T>(const Var<T>&);                                         \
  template Var<T> weighted_sum<T>(const Var<T>&, const Tensor<T>&);                      \
  template Var<T> faulty_identity<T>(const Var<T>&, T);

APT_INSTANTIATE_OPS(float)
APT_INSTANTIATE_OPS(double)

#undef APT_INSTANTIATE_OPS

}  // namespace apt::numerics

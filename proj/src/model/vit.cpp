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

#include "apt/model/vit.hpp"

#include <cmath>

#include "apt/numerics/kernels.hpp"
#include "apt/numerics/ops.hpp"

namespace apt::model {

using numerics::DimensionError;
using numerics::Node;
using numerics::Shape;
namespace nx = apt::numerics;

template <typename T>
Tensor<T> patchify(const Tensor<T>& video, const ArchSpec& arch) {
  const Shape expected{arch.frames, arch.height, arch.width, arch.channels};
  if (video.shape() != expected) {
    throw DimensionError("patchify: clip shape " + nx::shape_str(video.shape()) +
                         " does not match architecture input " + nx::shape_str(expected));
  }
  const std::size_t t = arch.tubelet_t, p = arch.patch, c = arch.channels;
  const std::size_t gt = arch.temporal_tokens(), gh = arch.grid_h(), gw = arch.grid_w();
  Tensor<T> out({arch.num_tokens(), arch.patch_dim()});
  T* dst = out.raw();
  for (std::size_t it = 0; it < gt; ++it) {
    for (std::size_t iy = 0; iy < gh; ++iy) {
      for (std::size_t ix = 0; ix < gw; ++ix) {
        for (std::size_t dt = 0; dt < t; ++dt) {
          for (std::size_t dy = 0; dy < p; ++dy) {
            const std::size_t frame = it * t + dt, y = iy * p + dy;
            const T* src = video.raw() + ((frame * arch.height + y) * arch.width + ix * p) * c;
            std::copy_n(src, p * c, dst);
            dst += p * c;
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
Var<T> tubelet_embed(std::span<const Tensor<T>> videos, const Backbone<T>& backbone) {
  const ArchSpec& arch = backbone.arch;
  if (videos.empty()) throw DimensionError("tubelet_embed: empty batch");
  const std::size_t n = arch.num_tokens(), pd = arch.patch_dim();
  Tensor<T> patches({videos.size() * n, pd});
  for (std::size_t b = 0; b < videos.size(); ++b) {
    const Tensor<T> rows = patchify(videos[b], arch);
    std::copy(rows.data().begin(), rows.data().end(), patches.raw() + b * n * pd);
  }
  Var<T> x = nx::matmul(Var<T>(std::move(patches)), backbone.patch_weight);
  x = nx::add_rows(x, backbone.patch_bias);
  return nx::add_rows(x, Var<T>(backbone.pos_table));
}

namespace {

template <typename T>
void gather_head(const T* src, std::size_t row0, std::size_t rows, std::size_t d, std::size_t col0,
                 std::size_t hd, T* dst) {
  for (std::size_t i = 0; i < rows; ++i) std::copy_n(src + (row0 + i) * d + col0, hd, dst + i * hd);
}

template <typename T>
void scatter_add_head(const T* src, std::size_t row0, std::size_t rows, std::size_t d,
                      std::size_t col0, std::size_t hd, T* dst) {
  for (std::size_t i = 0; i < rows; ++i) {
    T* out = dst + (row0 + i) * d + col0;
    const T* in = src + i * hd;
    for (std::size_t j = 0; j < hd; ++j) out[j] += in[j];
  }
}

}  // namespace

template <typename T>
Var<T> attention_core(const Var<T>& q, const Var<T>& k, const Var<T>& v, std::size_t heads,
                      std::size_t batch, const Injection<T>& injection) {
  if (q.shape() != k.shape() || q.shape() != v.shape() || q.value().ndim() != 2) {
    throw DimensionError("attention_core: q/k/v shapes differ: " + nx::shape_str(q.shape()) +
                         ", " + nx::shape_str(k.shape()) + ", " + nx::shape_str(v.shape()));
  }
  const std::size_t rows = q.value().rows(), d = q.value().cols();
  if (heads == 0 || d % heads != 0) throw DimensionError("attention_core: heads do not divide width");
  if (batch == 0 || rows % batch != 0) throw DimensionError("attention_core: rows do not split into batch");
  const std::size_t n = rows / batch, hd = d / heads;
  const std::size_t np = injection.num_prompts();
  if (np > 0) {
    const Shape want{np, hd};
    if (injection.keys.shape() != want || injection.values.shape() != want) {
      throw DimensionError("attention_core: injected prompts " +
                           nx::shape_str(injection.keys.shape()) + "/" +
                           nx::shape_str(injection.values.shape()) + " do not match head_dim " +
                           std::to_string(hd));
    }
  }
  const std::size_t total = n + np;
  const T scale = T(1) / std::sqrt(T(hd));

  Tensor<T> out({rows, d});
  std::vector<T> probs(batch * heads * n * total);
  std::vector<T> qh(n * hd), kc(total * hd), vc(total * hd), oh(n * hd);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      gather_head(q.value().raw(), b * n, n, d, h * hd, hd, qh.data());
      gather_head(k.value().raw(), b * n, n, d, h * hd, hd, kc.data());
      gather_head(v.value().raw(), b * n, n, d, h * hd, hd, vc.data());
      if (np > 0) {
        std::copy_n(injection.keys.value().raw(), np * hd, kc.data() + n * hd);
        std::copy_n(injection.values.value().raw(), np * hd, vc.data() + n * hd);
      }
      T* p = probs.data() + (b * heads + h) * n * total;
      nx::gemm<T>(false, true, n, total, hd, scale, qh.data(), kc.data(), T(0), p);
      for (std::size_t i = 0; i < n; ++i) nx::softmax_row(p + i * total, p + i * total, total);
      nx::gemm<T>(false, false, n, hd, total, T(1), p, vc.data(), T(0), oh.data());
      for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(oh.data() + i * hd, hd, out.raw() + (b * n + i) * d + h * hd);
      }
    }
  }
  nx::MacCounter::add(2ULL * batch * heads * n * hd * total);
  nx::require_finite(out, "attention_core");

  std::vector<Var<T>> parents{q, k, v};
  if (np > 0) {
    parents.push_back(injection.keys);
    parents.push_back(injection.values);
  }
  return nx::make_result<T>(
      std::move(out), std::move(parents),
      [=, probs = std::move(probs)](Node<T>& self) {
        auto& pq = *self.parents[0];
        auto& pk = *self.parents[1];
        auto& pv = *self.parents[2];
        Node<T>* pkeys = np > 0 ? self.parents[3].get() : nullptr;
        Node<T>* pvals = np > 0 ? self.parents[4].get() : nullptr;
        const bool want_keys = pkeys && pkeys->requires_grad;
        const bool want_vals = pvals && pvals->requires_grad;
        std::vector<T> qh(n * hd), kc(total * hd), vc(total * hd), doh(n * hd);
        std::vector<T> dp(n * total), ds(n * total), dq(n * hd), dkc(total * hd), dvc(total * hd);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t h = 0; h < heads; ++h) {
            gather_head(pq.value.raw(), b * n, n, d, h * hd, hd, qh.data());
            gather_head(pk.value.raw(), b * n, n, d, h * hd, hd, kc.data());
            gather_head(pv.value.raw(), b * n, n, d, h * hd, hd, vc.data());
            if (np > 0) {
              std::copy_n(pkeys->value.raw(), np * hd, kc.data() + n * hd);
              std::copy_n(pvals->value.raw(), np * hd, vc.data() + n * hd);
            }
            gather_head(self.grad.raw(), b * n, n, d, h * hd, hd, doh.data());
            const T* p = probs.data() + (b * heads + h) * n * total;

            if (pv.requires_grad || want_vals) {
              nx::gemm<T>(true, false, total, hd, n, T(1), p, doh.data(), T(0), dvc.data());
              if (pv.requires_grad) {
                scatter_add_head(dvc.data(), b * n, n, d, h * hd, hd, pv.grad_buffer().raw());
              }
              if (want_vals) {
                T* g = pvals->grad_buffer().raw();
                for (std::size_t i = 0; i < np * hd; ++i) g[i] += dvc[n * hd + i];
              }
            }
            if (!(pq.requires_grad || pk.requires_grad || want_keys)) continue;

            nx::gemm<T>(false, true, n, total, hd, T(1), doh.data(), vc.data(), T(0), dp.data());
            std::fill(ds.begin(), ds.end(), T(0));
            for (std::size_t i = 0; i < n; ++i) {
              nx::softmax_row_backward(p + i * total, dp.data() + i * total, ds.data() + i * total,
                                       total);
            }
            if (pq.requires_grad) {
              nx::gemm<T>(false, false, n, hd, total, scale, ds.data(), kc.data(), T(0), dq.data());
              scatter_add_head(dq.data(), b * n, n, d, h * hd, hd, pq.grad_buffer().raw());
            }
            if (pk.requires_grad || want_keys) {
              nx::gemm<T>(true, false, total, hd, n, scale, ds.data(), qh.data(), T(0), dkc.data());
              if (pk.requires_grad) {
                scatter_add_head(dkc.data(), b * n, n, d, h * hd, hd, pk.grad_buffer().raw());
              }
              if (want_keys) {
                T* g = pkeys->grad_buffer().raw();
                for (std::size_t i = 0; i < np * hd; ++i) g[i] += dkc[n * hd + i];
              }
            }
          }
        }
      });
}

template <typename T>
Var<T> mha_forward(const Var<T>& x, const BlockWeights<T>& w, std::size_t heads, std::size_t batch,
                   const Injection<T>& injection) {
  const Var<T> q = nx::add_rows(nx::matmul(x, w.wq), w.bq);
  const Var<T> k = nx::matmul(x, w.wk);
  const Var<T> v = nx::add_rows(nx::matmul(x, w.wv), w.bv);
  const Var<T> attended = attention_core(q, k, v, heads, batch, injection);
  return nx::add_rows(nx::matmul(attended, w.wo), w.bo);
}

template <typename T>
Var<T> mlp_forward(const Var<T>& x, const BlockWeights<T>& w) {
  const Var<T> hidden = nx::gelu(nx::add_rows(nx::matmul(x, w.w1), w.b1));
  return nx::add_rows(nx::matmul(hidden, w.w2), w.b2);
}

template <typename T>
Var<T> block_forward(const Var<T>& x, const BlockWeights<T>& w, std::size_t heads,
                     std::size_t batch, const Injection<T>& injection) {
  const T eps = T(kLayerNormEps);
  const Var<T> attn =
      mha_forward(nx::layer_norm(x, w.norm1_gamma, w.norm1_beta, eps), w, heads, batch, injection);
  const Var<T> mid = nx::add(x, attn);
  return nx::add(mid, mlp_forward(nx::layer_norm(mid, w.norm2_gamma, w.norm2_beta, eps), w));
}

template <typename T>
Var<T> model_forward(std::span<const Tensor<T>> videos, const Backbone<T>& backbone,
                     ForwardHook<T>* hook, ForwardTrace<T>* trace) {
  const std::size_t batch = videos.size();
  const std::size_t heads = backbone.arch.num_heads;
  Var<T> x = tubelet_embed(videos, backbone);
  if (trace) trace->block_inputs.clear();
  for (std::size_t i = 0; i < backbone.blocks.size(); ++i) {
    if (trace) trace->block_inputs.push_back(x.value());
    Injection<T> injection;
    if (hook) {
      x = hook->before_block(i, x, batch);
      injection = hook->injection(i);
    }
    x = block_forward(x, backbone.blocks[i], heads, batch, injection);
    if (hook) x = hook->after_block(i, x, batch);
  }
  const Var<T> pooled = nx::mean_rows(x, batch);
  const Var<T> normed = nx::layer_norm(pooled, backbone.fc_norm_gamma, backbone.fc_norm_beta,
                                       T(kLayerNormEps));
  return nx::add_rows(nx::matmul(normed, backbone.head_weight), backbone.head_bias);
}

#define APT_INSTANTIATE_VIT(T)                                                                 \
  template Tensor<T> patchify<T>(const Tensor<T>&, const ArchSpec&);                          \
  template Var<T> tubelet_embed<T>(std::span<const Tensor<T>>, const Backbone<T>&);           \
  template Var<T> attention_core<T>(const Var<T>&, const Var<T>&, const Var<T>&, std::size_t, \
                                    std::size_t, const Injection<T>&);                        \
  template Var<T> mha_forward<T>(const Var<T>&, const BlockWeights<T>&, std::size_t,          \
                                 std::size_t, const Injection<T>&);                           \
  template Var<T> mlp_forward<T>(const Var<T>&, const BlockWeights<T>&);                      \
  template Var<T> block_forward<T>(const Var<T>&, const BlockWeights<T>&, std::size_t,        \
                                   std::size_t, const Injection<T>&);                         \
  template Var<T> model_forward<T>(std::span<const Tensor<T>>, const Backbone<T>&,            \
                                   ForwardHook<T>*, ForwardTrace<T>*);

APT_INSTANTIATE_VIT(float)
APT_INSTANTIATE_VIT(double)

#undef APT_INSTANTIATE_VIT

}  // namespace apt::model

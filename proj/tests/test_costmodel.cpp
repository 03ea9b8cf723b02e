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
#include <string>
#include <vector>

#include "doctest.h"

#include "apt/costmodel/cost.hpp"
#include "apt/numerics/kernels.hpp"

using namespace apt;
using namespace apt::cost;
using prompt::apt_all;
using prompt::FullTuning;
using prompt::LinearProbe;
using prompt::VptDeep;

namespace {

// d=8, h=2, L=2 with 16 tokens.
ArchSpec micro_arch() {
  ArchSpec a;
  a.embed_dim = 8;
  a.num_heads = 2;
  a.depth = 2;
  a.mlp_ratio = 4.0;
  a.frames = 4;
  a.height = 8;
  a.width = 16;
  a.channels = 1;
  a.tubelet_t = 2;
  a.patch = 4;
  a.num_classes = 5;
  return a;
}

std::uint64_t measured_macs(const ArchSpec& a, const prompt::TuningMode& mode) {
  const auto m = prompt::TunedModel<float>::create(a, mode, 3);
  std::vector<numerics::Tensor<float>> clip{numerics::Tensor<float>({a.frames, a.height, a.width, a.channels}, 0.1f)};
  numerics::Rng rng(0);
  numerics::ScopedMacCount scope;
  (void)m.forward(clip, rng, false);
  return scope.count();
}

}  // namespace

TEST_CASE("backbone inventories") {
  // Hand totals: 12 blocks of 12d^2 + 12d (no key bias), tubelet embedding
  // 1536d + d, final norm 2d and a (d+1) x classes head.
  CHECK(backbone_params(model::vit_small_video(174)) == 21'946'926);
  CHECK(backbone_params(model::vit_base_video(174)) == 86'361'006);
  CHECK(backbone_params(model::vit_base_video(101)) == 86'304'869);
  CHECK(count_params(FullTuning{}, model::vit_base_video(101)) == 86'304'869);
  CHECK(count_params(LinearProbe{}, model::vit_base_video(101)) == 77'669 + 1'536);
  CHECK(count_params(LinearProbe{}, model::vit_base_video(101), false) == 77'669);
}

TEST_CASE("prompt tuning counts") {
  const auto small = model::vit_small_video(174);
  const auto base = model::vit_base_video(101);
  CHECK(count_params(apt_all(12, 400), small) == 691'758);
  CHECK(count_params(apt_all(12, 1), base) == 80'765);
  CHECK(count_params(apt_all(12, 400), base) == 703'205);
  // Reparameterization scalars alone: two per prompt per block.
  auto no_reparam = apt_all(12, 400);
  no_reparam.reparam = false;
  CHECK(count_params(apt_all(12, 400), base) - count_params(no_reparam, base) == 9'600);
  CHECK(count_params(VptDeep{400}, base) == 12u * 400 * 768 + 77'669 + 1'536);
  CHECK(total_params(apt_all(12, 400), base) ==
        backbone_params(base) + count_params(apt_all(12, 400), base) - 77'669 - 1'536);
}

TEST_CASE("analytic FLOPs") {
  const auto base = model::vit_base_video(101);
  const double g0 = report(LinearProbe{}, base).gflops;
  CHECK(std::abs(g0 - 180.03) / 180.03 < 0.01);
  // The APT increment is 2 n d n_p per block: keys and values each see n_p
  // extra columns.
  const std::uint64_t delta = count_macs(apt_all(12, 400), base) - count_macs(LinearProbe{}, base);
  CHECK(delta == 12ull * 2 * 1568 * 768 * 400);
  CHECK(count_macs(FullTuning{}, base) == count_macs(LinearProbe{}, base));
}

TEST_CASE("sweep rows are ordered modes-major") {
  const std::vector<std::string> modes{"apt", "vpt"};
  const std::vector<std::size_t> counts{1, 5};
  const auto rows = sweep(model::vit_base_video(101), modes, counts);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].mode == "apt");
  CHECK(rows[1].num_prompts == 5);
  CHECK(rows[2].mode == "vpt");
  CHECK(rows[0].trainable_pct == doctest::Approx(100.0 * 80'765 / 86'304'869));
}

TEST_CASE("property: APT is cheaper than VPT-deep for every prompt count") {
  for (const auto& arch : {model::vit_small_video(174), model::vit_base_video(101)}) {
    for (std::size_t np = 1; np <= 2048; np += 97) {
      CHECK(count_params(apt_all(12, np), arch) < count_params(VptDeep{np}, arch));
      CHECK(count_macs(apt_all(12, np), arch) < count_macs(VptDeep{np}, arch));
    }
  }
}

TEST_CASE("analytic MACs equal the instrumented forward pass") {
  const auto a = micro_arch();
  REQUIRE(a.num_tokens() == 16);
  CHECK(count_macs(LinearProbe{}, a) == measured_macs(a, LinearProbe{}));
  for (std::size_t np : {0, 3}) {
    CHECK(count_macs(apt_all(2, np), a) == measured_macs(a, apt_all(2, np)));
    CHECK(count_macs(VptDeep{np}, a) == measured_macs(a, VptDeep{np}));
  }
  auto partial = apt_all(2, 3);
  partial.placement = prompt::DepthPlacement::deepest(2, 1);
  CHECK(count_macs(partial, a) == measured_macs(a, partial));
}

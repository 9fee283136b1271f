// Copyright 2026 The ftbo Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#pragma once

#include <vector>

#include "ftbo/acquisition.hpp"
#include "ftbo/curves.hpp"
#include "ftbo/ftgp.hpp"

namespace ftbo::testing {

// Two far-apart configs in 1-D whose asymptote means coincide: member 0 has
// a long flat curve (asymptote nearly pinned down), member 1 a single epoch
// (asymptote still wide open).
struct TwoMemberFixture {
  CurveSet data{1};
  std::vector<FtgpModel> models;
  Basket basket;
};

inline Hypers two_member_hypers() {
  Hypers h;
  h.space = WarpedMaternParams::unwarped(1, 0.05);
  h.space.amplitude = 1.0;
  h.space.mean = 0.5;
  h.curve = {.alpha = 1.0, .beta = 1.0, .noise_var = 1e-4};
  return h;
}

inline TwoMemberFixture two_member_fixture() {
  TwoMemberFixture f;
  f.data.add_curve(0, VectorXd::Constant(1, 0.1), std::vector<double>(80, 0.5));
  f.data.add_curve(1, VectorXd::Constant(1, 0.9), std::vector<double>{0.5});
  f.models.push_back(fit(f.data, two_member_hypers()));
  f.basket = build_basket(f.models, f.data, Points{}, 10, 0);
  return f;
}

}  // namespace ftbo::testing

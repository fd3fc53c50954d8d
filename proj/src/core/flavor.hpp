// Copyright 2026 The RL-RBN Authors.
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

#ifndef RLRBN_CORE_FLAVOR_HPP_
#define RLRBN_CORE_FLAVOR_HPP_

#include <string>
#include <vector>

#include "core/margin_loss.hpp"
#include "core/mdp.hpp"

namespace rlrbn {

// Which margin family the adaptive loss builds on.
//   soft: angular margin over a zero-margin anchor (norm-softmax baseline)
//   cos:  cosine margin (cosface baseline)
//   arc:  angular margin (arcface baseline)
enum class LossFlavor { kSoft, kCos, kArc };

LossFlavor ParseFlavor(const std::string& name);
const char* FlavorName(LossFlavor flavor);

inline mdp::StateSpace FlavorStateSpace(LossFlavor flavor, int n_groups_nonanchor) {
  return mdp::DefaultStateSpace(FlavorName(flavor), n_groups_nonanchor);
}

// Adaptive loss with `margins[g]` for every group g; the anchor's entry is
// used as base_margin.
loss::LossConfig AdaptiveLossConfig(LossFlavor flavor, double scale, int anchor_group,
                                    const std::vector<double>& margins);

// Uniform-margin baseline: norm-softmax, cosface or arcface.
loss::LossConfig FixedLossConfig(LossFlavor flavor, double scale, double margin);
// Baseline margin used when the configuration does not name one.
double DefaultBaselineMargin(LossFlavor flavor);

}  // namespace rlrbn

#endif  // RLRBN_CORE_FLAVOR_HPP_

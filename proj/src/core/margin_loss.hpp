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

// Softmax-family classification losses with additive margins on the target
// logit, including a per-group (adaptive) margin variant.

#ifndef RLRBN_CORE_MARGIN_LOSS_HPP_
#define RLRBN_CORE_MARGIN_LOSS_HPP_

#include <string>
#include <vector>

#include "core/common.hpp"

namespace rlrbn::loss {

enum class LossKind {
  kSoftmax,      // raw inner-product logits, no scale, no margin
  kNormSoftmax,  // scale * cos
  kCosface,      // scale * (cos - m) on the target
  kArcface,      // scale * cos(theta + m) on the target
  kAdaptiveArc,  // arcface with a per-group margin
  kAdaptiveCos,  // cosface with a per-group margin
};

const char* LossKindName(LossKind kind);
LossKind ParseLossKind(const std::string& name);

bool IsAdaptive(LossKind kind);
// Every kind except plain softmax works on unit-normalized features and weights.
inline bool IsNormalized(LossKind kind) { return kind != LossKind::kSoftmax; }

struct LossConfig {
  LossKind kind = LossKind::kNormSoftmax;
  double scale = 60.0;
  // Margin of the anchor group, and of every group for non-adaptive kinds.
  double base_margin = 0.0;
  // Indexed by group id. The anchor entry is ignored.
  std::vector<double> group_margins;
  int anchor_group = 0;

  void Validate() const;
  // Margin applied to the target logit of a sample from `group`.
  double MarginFor(int group) const;
};

struct LogitBatch {
  Matrix cosines;  // batch x n_identities
  std::vector<int> labels;
  std::vector<int> groups;
};

// Margin-transformed target cosine. For theta + m beyond pi the curve
// continues as a straight line in theta with slope -sin(m), which keeps the
// target logit strictly decreasing in theta.
double ArcTarget(double cosine, double margin);
// d ArcTarget / d cosine.
double ArcTargetSlope(double cosine, double margin);

double ArcfaceLogit(double cosine, double margin, double scale);
double CosfaceLogit(double cosine, double margin, double scale);

struct LossValue {
  double loss = 0.0;
  Matrix d_cosines;
};

// Mean cross-entropy of the margin-modified, scaled logits for any kind.
LossValue MarginLoss(const LogitBatch& batch, const LossConfig& cfg);
// Same, restricted to the adaptive kinds.
LossValue AdaptiveLoss(const LogitBatch& batch, const LossConfig& cfg);

struct LossGradients {
  double loss = 0.0;
  Matrix d_features;  // batch x d
  Matrix d_weights;   // d x n_identities
};

// Loss and gradients with respect to raw (pre-normalization) features and
// identity weight columns. For normalized kinds the chain goes through
// x / |x| and w / |w|.
LossGradients ComputeLossGradients(const Matrix& features, const Matrix& weights,
                                   const std::vector<int>& labels,
                                   const std::vector<int>& groups, const LossConfig& cfg);

}  // namespace rlrbn::loss

#endif  // RLRBN_CORE_MARGIN_LOSS_HPP_

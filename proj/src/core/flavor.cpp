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

#include "core/flavor.hpp"

#include "core/error.hpp"

namespace rlrbn {

LossFlavor ParseFlavor(const std::string& name) {
  if (name == "soft") return LossFlavor::kSoft;
  if (name == "cos") return LossFlavor::kCos;
  if (name == "arc") return LossFlavor::kArc;
  throw ConfigError("unknown loss flavor '" + name + "' (expected soft, cos or arc)");
}

const char* FlavorName(LossFlavor flavor) {
  switch (flavor) {
    case LossFlavor::kSoft: return "soft";
    case LossFlavor::kCos: return "cos";
    case LossFlavor::kArc: return "arc";
  }
  return "?";
}

loss::LossConfig AdaptiveLossConfig(LossFlavor flavor, double scale, int anchor_group,
                                    const std::vector<double>& margins) {
  if (anchor_group < 0 || anchor_group >= static_cast<int>(margins.size())) {
    throw ConfigError("anchor group outside the margin vector");
  }
  loss::LossConfig cfg;
  cfg.kind = flavor == LossFlavor::kCos ? loss::LossKind::kAdaptiveCos
                                        : loss::LossKind::kAdaptiveArc;
  cfg.scale = scale;
  cfg.anchor_group = anchor_group;
  cfg.base_margin = margins[anchor_group];
  cfg.group_margins = margins;
  return cfg;
}

loss::LossConfig FixedLossConfig(LossFlavor flavor, double scale, double margin) {
  loss::LossConfig cfg;
  cfg.scale = scale;
  cfg.base_margin = margin;
  switch (flavor) {
    case LossFlavor::kSoft: cfg.kind = loss::LossKind::kNormSoftmax; break;
    case LossFlavor::kCos: cfg.kind = loss::LossKind::kCosface; break;
    case LossFlavor::kArc: cfg.kind = loss::LossKind::kArcface; break;
  }
  return cfg;
}

double DefaultBaselineMargin(LossFlavor flavor) {
  switch (flavor) {
    case LossFlavor::kSoft: return 0.0;
    case LossFlavor::kCos: return 0.2;
    case LossFlavor::kArc: return 0.3;
  }
  return 0.0;
}

}  // namespace rlrbn

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

// Recognition training under agent-selected per-group margins, the
// fixed-margin and manual-margin baselines, and evaluation into a
// BiasReport.

#ifndef RLRBN_CORE_RBN_TRAINER_HPP_
#define RLRBN_CORE_RBN_TRAINER_HPP_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "core/bias_metrics.hpp"
#include "core/embedding_model.hpp"
#include "core/flavor.hpp"
#include "core/grouped_data.hpp"
#include "core/mdp.hpp"
#include "core/qlearning.hpp"

namespace rlrbn::rbn {

enum class BaselineMode { kNone, kFixedMargin, kManualMargin };

BaselineMode ParseBaselineMode(const std::string& name);  // none, fixed, manual
const char* BaselineModeName(BaselineMode mode);

struct RBNConfig {
  LossFlavor flavor = LossFlavor::kSoft;
  int decision_interval = 1;
  int total_epochs = 30;
  // Epochs at anchor margins before the first agent query.
  int warmup_epochs = 5;
  int anchor_group = 0;
  BaselineMode baseline_mode = BaselineMode::kNone;
  double scale = 60.0;
  // Uniform margin for kFixedMargin; DefaultBaselineMargin(flavor) if unset.
  std::optional<double> baseline_margin;

  void Validate() const;
};

struct MarginHistoryEntry {
  int epoch = 0;
  int group = 0;  // dataset group id
  double margin = 0.0;
  int margin_index = 0;
  double b_inter = 0.0;
  int bias_index = 0;
  mdp::MarginAction action = mdp::MarginAction::kStay;
  bool clamped = false;
  // Margin in force after the action.
  double next_margin = 0.0;
};

struct RbnResult {
  model::Model model;
  std::vector<MarginHistoryEntry> history;
  int clamped_states = 0;
};

// Trains `init` for cfg.total_epochs. At every epoch e >= warmup_epochs with
// (e - warmup_epochs) % decision_interval == 0, each non-anchor group's
// B_inter is measured on `val`, mapped to a state and answered by `policy`
// before that epoch's training.
RbnResult TrainRbn(const data::GroupedDataset& train, const data::GroupedDataset& val,
                   const qlearn::PolicyTable& policy, const RBNConfig& cfg,
                   const model::OptimizerConfig& opt, const model::Model& init);

// Per-group margins for the manual baseline:
//   base + (grid_max - base) * (1 - n_g / max_g n_g), snapped to the grid,
// with n_g the training sample count of group g and base = grid[0] for every
// group, the anchor included.
std::vector<double> ManualMargins(const data::GroupedDataset& train,
                                  const std::vector<double>& margin_grid);

loss::LossConfig BaselineLossConfig(const data::GroupedDataset& train, const RBNConfig& cfg,
                                    const mdp::StateSpace& space);

model::Model TrainBaseline(const data::GroupedDataset& train, const RBNConfig& cfg,
                           const mdp::StateSpace& space, const model::OptimizerConfig& opt,
                           const model::Model& init);

// Verification accuracy per group on `pairs`, STD and SER, and the geometry
// of every group of `geometry_ds` (usually the test identities).
metrics::BiasReport Evaluate(const model::ModelParams& params,
                             const std::vector<data::VerificationPair>& pairs,
                             const data::GroupedDataset& geometry_ds);

// CSV: epoch,group,margin_index,margin,b_inter,bias_index,action,clamped,next_margin
void WriteMarginHistory(const std::vector<MarginHistoryEntry>& history, std::ostream& out);
std::vector<MarginHistoryEntry> ReadMarginHistory(std::istream& in);

}  // namespace rlrbn::rbn

#endif  // RLRBN_CORE_RBN_TRAINER_HPP_

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

#include "core/rbn_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <ostream>

#include "core/error.hpp"

namespace rlrbn::rbn {

BaselineMode ParseBaselineMode(const std::string& name) {
  if (name == "none") return BaselineMode::kNone;
  if (name == "fixed") return BaselineMode::kFixedMargin;
  if (name == "manual") return BaselineMode::kManualMargin;
  throw ConfigError("unknown baseline mode '" + name + "' (expected none, fixed or manual)");
}

const char* BaselineModeName(BaselineMode mode) {
  switch (mode) {
    case BaselineMode::kNone: return "none";
    case BaselineMode::kFixedMargin: return "fixed";
    case BaselineMode::kManualMargin: return "manual";
  }
  return "?";
}

void RBNConfig::Validate() const {
  if (decision_interval < 1) throw ConfigError("decision_interval must be at least 1");
  if (total_epochs < 0) throw ConfigError("total_epochs must be non-negative");
  if (warmup_epochs < 0) throw ConfigError("warmup_epochs must be non-negative");
  if (anchor_group < 0) throw ConfigError("anchor_group must be non-negative");
  if (!(scale > 0.0)) throw ConfigError("scale must be positive");
  if (baseline_margin && !(*baseline_margin >= 0.0)) {
    throw ConfigError("baseline_margin must be non-negative");
  }
}

RbnResult TrainRbn(const data::GroupedDataset& train, const data::GroupedDataset& val,
                   const qlearn::PolicyTable& policy, const RBNConfig& cfg,
                   const model::OptimizerConfig& opt, const model::Model& init) {
  cfg.Validate();
  const mdp::StateSpace& space = policy.space;
  space.Validate();
  const int n_groups = train.n_groups();
  if (space.n_groups_nonanchor != n_groups - 1 || val.n_groups() != n_groups) {
    throw ConfigError("policy state space does not match the dataset's group count");
  }
  if (cfg.anchor_group >= n_groups) throw ConfigError("anchor_group out of range");
  if (static_cast<int>(policy.rows.size()) != space.n_states()) {
    throw ConfigError("policy does not cover its state space");
  }

  RbnResult out;
  out.model = init;
  std::vector<int> index(space.n_groups_nonanchor, 0);
  for (int epoch = 0; epoch < cfg.total_epochs; ++epoch) {
    if (epoch >= cfg.warmup_epochs && (epoch - cfg.warmup_epochs) % cfg.decision_interval == 0) {
      const metrics::EmbeddedSet emb = metrics::EmbeddedSet::FromModel(out.model.params, val);
      for (int sg = 0; sg < space.n_groups_nonanchor; ++sg) {
        const int group = mdp::DatasetGroup(sg, cfg.anchor_group);
        MarginHistoryEntry h;
        h.epoch = epoch;
        h.group = group;
        h.margin_index = index[sg];
        h.margin = space.margin_grid[index[sg]];
        h.b_inter = emb.SkewAgainst(group, cfg.anchor_group).inter;
        h.bias_index = mdp::DiscretizeBias(h.b_inter, space);
        h.clamped = space.bias_upper.has_value() && h.b_inter > *space.bias_upper;
        if (h.clamped) ++out.clamped_states;
        const mdp::MarginState state{sg, index[sg], h.bias_index};
        h.action = policy.Lookup(state);
        index[sg] = mdp::ApplyAction(state, h.action, space);
        h.next_margin = space.margin_grid[index[sg]];
        out.history.push_back(h);
      }
    }
    std::vector<double> margins(n_groups, space.margin_grid[0]);
    for (int sg = 0; sg < space.n_groups_nonanchor; ++sg) {
      margins[mdp::DatasetGroup(sg, cfg.anchor_group)] = space.margin_grid[index[sg]];
    }
    const loss::LossConfig loss_cfg =
        AdaptiveLossConfig(cfg.flavor, cfg.scale, cfg.anchor_group, margins);
    model::TrainEpochs(out.model, train, loss_cfg, opt, 1);
  }
  return out;
}

std::vector<double> ManualMargins(const data::GroupedDataset& train,
                                  const std::vector<double>& margin_grid) {
  if (margin_grid.empty()) throw ConfigError("empty margin grid");
  std::vector<double> counts(train.n_groups(), 0.0);
  for (const data::Sample& s : train.samples()) counts[s.group_id] += 1.0;
  const double max_count = *std::max_element(counts.begin(), counts.end());
  if (!(max_count > 0.0)) throw ConfigError("training set has no samples");
  const double base = margin_grid.front();
  const double top = margin_grid.back();
  std::vector<double> out;
  for (double n : counts) {
    const double raw = base + (top - base) * (1.0 - n / max_count);
    double best = margin_grid.front();
    for (double m : margin_grid) {
      if (std::abs(m - raw) < std::abs(best - raw)) best = m;
    }
    out.push_back(best);
  }
  return out;
}

loss::LossConfig BaselineLossConfig(const data::GroupedDataset& train, const RBNConfig& cfg,
                                    const mdp::StateSpace& space) {
  switch (cfg.baseline_mode) {
    case BaselineMode::kFixedMargin:
      return FixedLossConfig(cfg.flavor, cfg.scale,
                             cfg.baseline_margin.value_or(DefaultBaselineMargin(cfg.flavor)));
    case BaselineMode::kManualMargin:
      return AdaptiveLossConfig(cfg.flavor, cfg.scale, cfg.anchor_group,
                                ManualMargins(train, space.margin_grid));
    case BaselineMode::kNone:
      break;
  }
  throw ConfigError("baseline training needs baseline_mode fixed or manual");
}

model::Model TrainBaseline(const data::GroupedDataset& train, const RBNConfig& cfg,
                           const mdp::StateSpace& space, const model::OptimizerConfig& opt,
                           const model::Model& init) {
  cfg.Validate();
  const loss::LossConfig loss_cfg = BaselineLossConfig(train, cfg, space);
  model::Model m = init;
  model::TrainEpochs(m, train, loss_cfg, opt, cfg.total_epochs);
  return m;
}

metrics::BiasReport Evaluate(const model::ModelParams& params,
                             const std::vector<data::VerificationPair>& pairs,
                             const data::GroupedDataset& geometry_ds) {
  metrics::BiasReport report;
  const int n_groups = geometry_ds.n_groups();
  report.per_group_accuracy = metrics::VerificationAccuracy(params, pairs, n_groups, true);
  double sum = 0.0;
  for (double a : report.per_group_accuracy) sum += a;
  report.avg_accuracy = sum / n_groups;
  report.std = metrics::AccuracyStdPercent(report.per_group_accuracy);
  try {
    report.ser = metrics::ComputeStdSer(report.per_group_accuracy).ser;
  } catch (const DegenerateSerError&) {
    report.ser.reset();
  }
  const metrics::EmbeddedSet emb = metrics::EmbeddedSet::FromModel(params, geometry_ds);
  for (int g = 0; g < n_groups; ++g) report.per_group_geometry.push_back(emb.Geometry(g));
  return report;
}

void WriteMarginHistory(const std::vector<MarginHistoryEntry>& history, std::ostream& out) {
  out << "epoch,group,margin_index,margin,b_inter,bias_index,action,clamped,next_margin\n";
  out << std::setprecision(17);
  for (const MarginHistoryEntry& h : history) {
    out << h.epoch << ',' << h.group << ',' << h.margin_index << ',' << h.margin << ','
        << h.b_inter << ',' << h.bias_index << ',' << static_cast<int>(h.action) << ','
        << (h.clamped ? 1 : 0) << ',' << h.next_margin << '\n';
  }
}

std::vector<MarginHistoryEntry> ReadMarginHistory(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty margin history");
  std::vector<MarginHistoryEntry> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    MarginHistoryEntry h;
    int action = 0;
    int clamped = 0;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%lf,%lf,%d,%d,%d,%lf", &h.epoch, &h.group,
                    &h.margin_index, &h.margin, &h.b_inter, &h.bias_index, &action, &clamped,
                    &h.next_margin) != 9 ||
        action < 0 || action >= mdp::kNumActions) {
      throw IoError("malformed margin history record: " + line);
    }
    h.action = mdp::ActionFromIndex(action);
    h.clamped = clamped != 0;
    out.push_back(h);
  }
  return out;
}

}  // namespace rlrbn::rbn

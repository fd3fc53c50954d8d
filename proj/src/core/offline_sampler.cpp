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

#include "core/offline_sampler.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <fstream>
#include <istream>
#include <iomanip>
#include <set>
#include <tuple>

#include "core/error.hpp"

namespace rlrbn::sampler {

namespace {

struct Node {
  mdp::MarginState state;
  model::Model model;
  metrics::Skew skew;
};

metrics::Skew Measure(const model::Model& m, const data::GroupedDataset& val, int group,
                      int anchor) {
  return metrics::EmbeddedSet::FromModel(m.params, val).SkewAgainst(group, anchor);
}

}  // namespace

void SamplerConfig::Validate() const {
  if (epochs_per_action < 1) throw ConfigError("epochs_per_action must be at least 1");
  if (max_states_per_group < 1) throw ConfigError("max_states_per_group must be at least 1");
  if (!(scale > 0.0)) throw ConfigError("scale must be positive");
  if (anchor_group < 0) throw ConfigError("anchor_group must be non-negative");
}

SamplerResult CollectTransitions(const data::GroupedDataset& train,
                                 const data::GroupedDataset& val, const model::Model& base_model,
                                 const mdp::StateSpace& space, const SamplerConfig& cfg,
                                 const model::OptimizerConfig& opt) {
  cfg.Validate();
  space.Validate();
  const int n_groups = train.n_groups();
  if (val.n_groups() != n_groups || space.n_groups_nonanchor != n_groups - 1) {
    throw ConfigError("state space, training and validation sets disagree on the group count");
  }
  if (cfg.anchor_group >= n_groups) throw ConfigError("anchor_group out of range");
  if (base_model.params.n_identities() != train.n_identities()) {
    throw ConfigError("model identity count does not match the training set");
  }

  model::OptimizerConfig branch_opt = opt;
  branch_opt.seed = cfg.seed;

  SamplerResult result;
  result.visited_per_group.assign(space.n_groups_nonanchor, 0);

  for (int sg = 0; sg < space.n_groups_nonanchor; ++sg) {
    const int group = mdp::DatasetGroup(sg, cfg.anchor_group);
    const metrics::Skew start_skew = Measure(base_model, val, group, cfg.anchor_group);
    mdp::MarginState start{sg, 0, mdp::DiscretizeBias(start_skew.inter, space)};

    std::set<mdp::MarginState> visited{start};
    std::deque<Node> frontier;
    frontier.push_back({start, base_model, start_skew});
    int expanded = 0;

    while (!frontier.empty()) {
      if (expanded >= cfg.max_states_per_group) {
        result.truncated = true;
        break;
      }
      Node node = std::move(frontier.front());
      frontier.pop_front();
      ++expanded;
      const model::ModelSnapshot snap = model::Snapshot(node.model);

      for (mdp::MarginAction action : mdp::kAllActions) {
        model::Model branch = model::Restore(snap);
        const int next_m = mdp::ApplyAction(node.state, action, space);
        std::vector<double> margins(n_groups, space.margin_grid[0]);
        margins[group] = space.margin_grid[next_m];
        const loss::LossConfig loss_cfg =
            AdaptiveLossConfig(cfg.flavor, cfg.scale, cfg.anchor_group, margins);
        model::TrainEpochs(branch, train, loss_cfg, branch_opt, cfg.epochs_per_action);

        const metrics::Skew after = Measure(branch, val, group, cfg.anchor_group);
        mdp::MarginState next{sg, next_m, mdp::DiscretizeBias(after.inter, space)};
        TransitionRecord rec;
        rec.transition = {node.state, action, metrics::Reward(node.skew, after), next};
        rec.before = node.skew;
        rec.after = after;
        result.records.push_back(rec);

        if (visited.insert(next).second) {
          frontier.push_back({next, std::move(branch), after});
        }
      }
    }
    result.visited_per_group[sg] = static_cast<int>(visited.size());
  }

  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const TransitionRecord& a, const TransitionRecord& b) {
                     return std::tie(a.transition.state, a.transition.action) <
                            std::tie(b.transition.state, b.transition.action);
                   });
  return result;
}

TwoPassResult CollectTwoPass(const data::GroupedDataset& train, const data::GroupedDataset& val,
                             const model::Model& base_model, const mdp::StateSpace& grid,
                             int n_bias_bins, const SamplerConfig& cfg,
                             const model::OptimizerConfig& opt) {
  if (n_bias_bins < 1) throw ConfigError("n_bias_bins must be at least 1");
  TwoPassResult out;
  mdp::StateSpace single = grid;
  single.bias_edges.clear();
  single.bias_upper.reset();
  out.calibration = CollectTransitions(train, val, base_model, single, cfg, opt);

  std::vector<double> observed;
  for (const TransitionRecord& r : out.calibration.records) {
    observed.push_back(r.before.inter);
    observed.push_back(r.after.inter);
  }
  out.space = single;
  out.space.bias_edges = mdp::QuantileEdges(observed, n_bias_bins);
  if (!observed.empty()) {
    out.space.bias_upper = *std::max_element(observed.begin(), observed.end());
  }
  out.sample = CollectTransitions(train, val, base_model, out.space, cfg, opt);
  return out;
}

std::vector<qlearn::Transition> Transitions(const std::vector<TransitionRecord>& records) {
  std::vector<qlearn::Transition> out;
  out.reserve(records.size());
  for (const TransitionRecord& r : records) out.push_back(r.transition);
  return out;
}

void WriteTransitionLog(const std::vector<TransitionRecord>& records, std::ostream& out) {
  out << "group,margin_index,bias_index,action,reward,next_margin_index,next_bias_index,"
         "b_inter_before,b_inter_after,b_intra_before,b_intra_after\n";
  out << std::setprecision(17);
  for (const TransitionRecord& r : records) {
    const qlearn::Transition& t = r.transition;
    out << t.state.group << ',' << t.state.margin_index << ',' << t.state.bias_index << ','
        << static_cast<int>(t.action) << ',' << t.reward << ',' << t.next_state.margin_index
        << ',' << t.next_state.bias_index << ',' << r.before.inter << ',' << r.after.inter << ','
        << r.before.intra << ',' << r.after.intra << '\n';
  }
}

std::vector<TransitionRecord> ReadTransitionLog(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty transition log");
  std::vector<TransitionRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TransitionRecord r;
    qlearn::Transition& t = r.transition;
    int action = 0;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%d,%lf,%d,%d,%lf,%lf,%lf,%lf", &t.state.group,
                    &t.state.margin_index, &t.state.bias_index, &action, &t.reward,
                    &t.next_state.margin_index, &t.next_state.bias_index, &r.before.inter,
                    &r.after.inter, &r.before.intra, &r.after.intra) != 11 ||
        action < 0 || action >= mdp::kNumActions) {
      throw IoError("malformed transition record: " + line);
    }
    t.action = mdp::ActionFromIndex(action);
    t.next_state.group = t.state.group;
    out.push_back(r);
  }
  return out;
}

void SaveTransitionLog(const std::vector<TransitionRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  WriteTransitionLog(records, out);
  if (!out) throw IoError("write failed: " + path);
}

std::vector<TransitionRecord> LoadTransitionLog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open transition log " + path);
  return ReadTransitionLog(in);
}

}  // namespace rlrbn::sampler

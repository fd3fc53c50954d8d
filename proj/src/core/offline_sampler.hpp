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

// Offline transition collection for the margin agent.
//
// For each non-anchor group, starting from a warmed-up model, every reachable
// discrete state is expanded once: the model is forked three times, each fork
// applies one action to that group's margin (all other groups keep the anchor
// margin), trains for a fixed number of epochs and is measured on the
// validation set. States reached for the first time join a FIFO frontier
// together with the model that reached them.

#ifndef RLRBN_CORE_OFFLINE_SAMPLER_HPP_
#define RLRBN_CORE_OFFLINE_SAMPLER_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "core/bias_metrics.hpp"
#include "core/embedding_model.hpp"
#include "core/flavor.hpp"
#include "core/grouped_data.hpp"
#include "core/mdp.hpp"
#include "core/qlearning.hpp"

namespace rlrbn::sampler {

struct SamplerConfig {
  int epochs_per_action = 1;
  int max_states_per_group = 64;
  LossFlavor flavor = LossFlavor::kSoft;
  double scale = 60.0;
  int anchor_group = 0;
  // Drives the shuffling of every branch's training epochs.
  std::uint64_t seed = 0;

  void Validate() const;
};

struct TransitionRecord {
  qlearn::Transition transition;
  metrics::Skew before;
  metrics::Skew after;
};

struct SamplerResult {
  std::vector<TransitionRecord> records;
  std::vector<int> visited_per_group;
  // Set when some group hit max_states_per_group with states left unexpanded.
  bool truncated = false;
};

// One sweep over the state space under fixed bias edges.
SamplerResult CollectTransitions(const data::GroupedDataset& train,
                                 const data::GroupedDataset& val, const model::Model& base_model,
                                 const mdp::StateSpace& space, const SamplerConfig& cfg,
                                 const model::OptimizerConfig& opt);

struct TwoPassResult {
  mdp::StateSpace space;  // with fitted, frozen bias edges
  SamplerResult calibration;
  SamplerResult sample;
};

// First sweep with a single bias bin to observe raw B_inter values, quantile
// edges fitted on them, then a second sweep with those edges frozen.
TwoPassResult CollectTwoPass(const data::GroupedDataset& train, const data::GroupedDataset& val,
                             const model::Model& base_model, const mdp::StateSpace& grid,
                             int n_bias_bins, const SamplerConfig& cfg,
                             const model::OptimizerConfig& opt);

std::vector<qlearn::Transition> Transitions(const std::vector<TransitionRecord>& records);

// CSV with header
//   group,margin_index,bias_index,action,reward,next_margin_index,
//   next_bias_index,b_inter_before,b_inter_after,b_intra_before,b_intra_after
// The next state's group equals the state's group.
void WriteTransitionLog(const std::vector<TransitionRecord>& records, std::ostream& out);
std::vector<TransitionRecord> ReadTransitionLog(std::istream& in);
void SaveTransitionLog(const std::vector<TransitionRecord>& records, const std::string& path);
std::vector<TransitionRecord> LoadTransitionLog(const std::string& path);

}  // namespace rlrbn::sampler

#endif  // RLRBN_CORE_OFFLINE_SAMPLER_HPP_

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

// Experiment configuration: one JSON document with the sections below.
// Missing keys keep their defaults, unknown keys are rejected.
//
//   data       train_identities_per_group, samples_per_identity, d_in,
//              group_concentration, group_center_spread,
//              val_identities_per_group, test_identities_per_group,
//              pairs_per_group, group_names
//   loss       flavor (soft|cos|arc), scale, anchor_group, margin_grid,
//              baseline_margin
//   model      hidden, embedding_dim
//   optimizer  learning_rate, momentum, weight_decay, batch_size,
//              lr_decay_epochs
//   sampler    warmup_epochs, epochs_per_action, max_states_per_group,
//              n_bias_bins
//   agent      discount, learning_rate, training_iterations, batch_size,
//              hidden
//   rbn        total_epochs, decision_interval, baselines (fixed|manual)
//   sweep      ratios, total_train_identities
//   output_dir, seeds

#ifndef RLRBN_HARNESS_CONFIG_HPP_
#define RLRBN_HARNESS_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/embedding_model.hpp"
#include "core/flavor.hpp"
#include "core/grouped_data.hpp"
#include "core/mdp.hpp"
#include "core/offline_sampler.hpp"
#include "core/qlearning.hpp"
#include "core/rbn_trainer.hpp"
#include "json.hpp"

namespace rlrbn::harness {

struct DataConfig {
  std::vector<int> train_identities_per_group{80, 40, 40, 40};
  int samples_per_identity = 10;
  int d_in = 16;
  std::vector<double> group_concentration{100.0, 80.0, 80.0, 80.0};
  std::vector<double> group_center_spread{1.0, 0.8, 0.8, 0.8};
  int val_identities_per_group = 20;
  int test_identities_per_group = 60;
  int pairs_per_group = 4000;
  std::vector<std::string> group_names;  // defaults to G0, G1, ...

  int n_groups() const { return static_cast<int>(train_identities_per_group.size()); }
  std::string GroupName(int g) const;
  // Generation spec for the pooled dataset (train + val + test identities).
  data::DatasetSpec Spec(std::uint64_t seed) const;
};

struct LossSection {
  LossFlavor flavor = LossFlavor::kSoft;
  double scale = 60.0;
  int anchor_group = 0;
  std::optional<std::vector<double>> margin_grid;
  std::optional<double> baseline_margin;
};

struct ModelSection {
  std::vector<int> hidden{32};
  int embedding_dim = 32;
};

struct SamplerSection {
  int warmup_epochs = 5;
  int epochs_per_action = 1;
  int max_states_per_group = 64;
  int n_bias_bins = 4;
};

struct RbnSection {
  int total_epochs = 30;
  int decision_interval = 1;
  std::vector<rbn::BaselineMode> baselines{rbn::BaselineMode::kFixedMargin,
                                           rbn::BaselineMode::kManualMargin};
};

struct SweepSection {
  std::vector<std::vector<double>> ratios{{4, 2, 2, 2},
                                          {5, 5.0 / 3, 5.0 / 3, 5.0 / 3},
                                          {6, 4.0 / 3, 4.0 / 3, 4.0 / 3},
                                          {7, 1, 1, 1}};
  int total_train_identities = 200;
};

struct ExperimentConfig {
  DataConfig data;
  LossSection loss;
  ModelSection model;
  model::OptimizerConfig optimizer{0.02, 0.9, 5e-4, 64, {}, 0};
  SamplerSection sampler;
  qlearn::AgentConfig agent;
  RbnSection rbn;
  SweepSection sweep;
  std::string output_dir = "runs/default";
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

  void Validate() const;
  // Margin grid in force: the override if given, else the flavor default.
  mdp::StateSpace GridSpace() const;
};

nlohmann::json ToJson(const ExperimentConfig& cfg);
ExperimentConfig ConfigFromJson(const nlohmann::json& j);

// `assignment` is "dotted.key=value"; the value is parsed as JSON when it
// parses, otherwise taken as a string.
void ApplyOverride(nlohmann::json& j, const std::string& assignment);

ExperimentConfig LoadConfig(const std::string& path, const std::vector<std::string>& overrides);

// Stable 64-bit FNV-1a digest, rendered as 16 hex digits.
std::string Fnv1aHex(const std::string& bytes);

// Independent seed streams derived from a run seed.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t tag);

// Training identities per group for a ratio, scaled so they sum to
// `total` (rounded to the nearest integer, at least 2 per group).
std::vector<int> RatioIdentities(const std::vector<double>& ratio, int total);
std::string RatioLabel(const std::vector<double>& ratio);

}  // namespace rlrbn::harness

#endif  // RLRBN_HARNESS_CONFIG_HPP_

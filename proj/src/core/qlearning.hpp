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

// Offline deep Q-learning over the margin-control MDP, an exact tabular
// Q-iteration oracle for the same data, and the greedy policy table.

#ifndef RLRBN_CORE_QLEARNING_HPP_
#define RLRBN_CORE_QLEARNING_HPP_

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "core/common.hpp"
#include "core/embedding_model.hpp"
#include "core/mdp.hpp"
#include "json.hpp"

namespace rlrbn::qlearn {

using QValues = std::array<double, mdp::kNumActions>;

struct Transition {
  mdp::MarginState state;
  mdp::MarginAction action = mdp::MarginAction::kStay;
  double reward = 0.0;
  mdp::MarginState next_state;
};

struct AgentConfig {
  double discount = 0.99;
  double learning_rate = 1e-4;
  int training_iterations = 20000;
  int batch_size = 32;
  std::vector<int> hidden{10, 10};
  std::uint64_t seed = 0;

  void Validate() const;
};

// Fully connected Q-value approximator: state encoding in, one value per
// action out, ReLU on hidden layers only so Q-values may be negative.
class QNetwork {
 public:
  QNetwork() = default;
  QNetwork(int input_dim, const std::vector<int>& hidden, std::uint64_t seed);

  int input_dim() const { return static_cast<int>(layers_.front().weight.cols()); }
  QValues Forward(std::span<const double> x) const;
  Matrix ForwardBatch(const Matrix& inputs) const;  // batch x 3

  // Mean squared TD error over the batch with fixed targets, and its
  // gradient w.r.t. every layer.
  double TdLossAndGradient(const Matrix& inputs, const std::vector<int>& actions,
                           const std::vector<double>& targets,
                           std::vector<model::DenseLayer>* gradient) const;

  std::vector<model::DenseLayer>& layers() { return layers_; }
  const std::vector<model::DenseLayer>& layers() const { return layers_; }

  nlohmann::json ToJson() const;
  static QNetwork FromJson(const nlohmann::json& j);

 private:
  std::vector<model::DenseLayer> layers_;
};

// Adam with the usual defaults (beta1 0.9, beta2 0.999, eps 1e-8).
class AdamOptimizer {
 public:
  AdamOptimizer(const std::vector<model::DenseLayer>& shape, double learning_rate);
  void Step(std::vector<model::DenseLayer>& params, const std::vector<model::DenseLayer>& grad);

 private:
  double lr_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long long t_ = 0;
  std::vector<model::DenseLayer> m_;
  std::vector<model::DenseLayer> v_;
};

// Minimizes the mean squared TD error with targets r + discount * max Q(s')
// taken from the live network; batches are drawn uniformly with replacement.
QNetwork TrainDqn(const std::vector<Transition>& transitions, const mdp::StateSpace& space,
                  const AgentConfig& cfg);

double TdLoss(const QNetwork& q, const std::vector<Transition>& transitions,
              const mdp::StateSpace& space, double discount);

struct QTable {
  std::vector<QValues> q;  // indexed by flattened state
  std::vector<std::array<bool, mdp::kNumActions>> observed;

  static constexpr double kUnobserved = -std::numeric_limits<double>::infinity();
  bool HasAction(int state) const;
  // Greedy over observed actions; ties go to the lowest action index.
  mdp::MarginAction Greedy(int state) const;
};

// Q-iteration on the empirical MDP (mean rewards, empirical next-state
// frequencies) until the sup-norm change drops below 1e-10. A next state with
// no observed action contributes a value of 0.
QTable TabularValueIteration(const std::vector<Transition>& transitions,
                             const mdp::StateSpace& space, double discount);

// Argmax with ties broken toward Stay, then Up, then Down.
mdp::MarginAction ArgmaxAction(const QValues& q);
mdp::MarginAction GreedyAction(const QNetwork& q, const mdp::MarginState& state,
                               const mdp::StateSpace& space);

struct PolicyRow {
  mdp::MarginState state;
  mdp::MarginAction action = mdp::MarginAction::kStay;
  QValues q{};
};

struct PolicyTable {
  mdp::StateSpace space;
  std::vector<PolicyRow> rows;  // one per state, in flattened order

  mdp::MarginAction Lookup(const mdp::MarginState& state) const;
};

PolicyTable DumpPolicy(const QNetwork& q, const mdp::StateSpace& space);
// A policy that answers `action` everywhere.
PolicyTable ConstantPolicy(const mdp::StateSpace& space, mdp::MarginAction action);

// Versioned policy artifact: state space plus the full table.
nlohmann::json PolicyToJson(const PolicyTable& policy);
PolicyTable PolicyFromJson(const nlohmann::json& j);
void SavePolicy(const PolicyTable& policy, const std::string& path);
PolicyTable LoadPolicy(const std::string& path);

}  // namespace rlrbn::qlearn

#endif  // RLRBN_CORE_QLEARNING_HPP_

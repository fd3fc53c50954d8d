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

// A small feedforward encoder with a per-identity classifier matrix, trained
// by mini-batch SGD with momentum.

#ifndef RLRBN_CORE_EMBEDDING_MODEL_HPP_
#define RLRBN_CORE_EMBEDDING_MODEL_HPP_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "core/common.hpp"
#include "core/grouped_data.hpp"
#include "core/margin_loss.hpp"

namespace rlrbn::model {

// Shape-aware exact comparison (Eigen's operator== requires equal shapes).
template <typename A, typename B>
bool SameValues(const A& a, const B& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out

  bool operator==(const DenseLayer& o) const {
    return SameValues(weight, o.weight) && SameValues(bias, o.bias);
  }
};

struct ModelParams {
  // ReLU sits between consecutive layers, never after the last one.
  std::vector<DenseLayer> encoder;
  Matrix identity_weights;  // d x n_identities

  int d_in() const { return static_cast<int>(encoder.front().weight.cols()); }
  int d() const { return static_cast<int>(identity_weights.rows()); }
  int n_identities() const { return static_cast<int>(identity_weights.cols()); }
  bool operator==(const ModelParams& o) const {
    return encoder == o.encoder && SameValues(identity_weights, o.identity_weights);
  }
};

// Momentum buffers mirror the parameter shapes.
struct OptimizerState {
  std::vector<DenseLayer> encoder_velocity;
  Matrix identity_velocity;
  // Drives the per-epoch shuffle, so it travels with snapshots.
  std::uint64_t epochs_completed = 0;

  bool operator==(const OptimizerState& o) const {
    return encoder_velocity == o.encoder_velocity &&
           SameValues(identity_velocity, o.identity_velocity) &&
           epochs_completed == o.epochs_completed;
  }
};

struct Model {
  ModelParams params;
  OptimizerState optimizer;

  bool operator==(const Model&) const = default;
};

struct OptimizerConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int batch_size = 64;
  // Optional step schedule: the rate is divided by 10 at each listed epoch.
  std::vector<int> lr_decay_epochs;
  std::uint64_t seed = 0;

  void Validate() const;
  double RateAt(std::uint64_t epoch) const;
};

struct EpochStats {
  std::vector<double> mean_loss;
};

Model InitModel(int d_in, const std::vector<int>& hidden, int d, int n_identities,
                std::uint64_t seed);

// Stacks sample features into an n x d_in matrix.
Matrix FeatureMatrix(const data::GroupedDataset& ds);

// Encoder output before normalization, one row per input row.
Matrix ForwardRaw(const ModelParams& params, const Matrix& inputs);
// Unit-norm embeddings, one row per input row.
Matrix EmbedBatch(const ModelParams& params, const Matrix& inputs);
Vector Embed(const ModelParams& params, std::span<const double> features);
Vector Embed(const ModelParams& params, const data::Sample& sample);

struct ParamGradients {
  double loss = 0.0;
  std::vector<DenseLayer> encoder;
  Matrix identity_weights;
};

// Full backward pass (loss -> identity weights and encoder) for one batch.
ParamGradients ComputeGradients(const ModelParams& params, const Matrix& inputs,
                                const std::vector<int>& labels, const std::vector<int>& groups,
                                const loss::LossConfig& loss_cfg);

// Runs `n_epochs` epochs of shuffled mini-batch SGD in place. Throws
// TrainingDivergedError when an epoch produces a non-finite loss.
EpochStats TrainEpochs(Model& model, const data::GroupedDataset& ds,
                       const loss::LossConfig& loss_cfg, const OptimizerConfig& opt,
                       int n_epochs);

// Immutable copy of a model, including its optimizer state.
class ModelSnapshot {
 public:
  explicit ModelSnapshot(const Model& model) : model_(model) {}
  Model Restore() const { return model_; }

 private:
  Model model_;
};

inline ModelSnapshot Snapshot(const Model& model) { return ModelSnapshot(model); }
inline Model Restore(const ModelSnapshot& snapshot) { return snapshot.Restore(); }

// Text checkpoint; values are written with 17 significant digits and read
// back bit-exactly.
void WriteCheckpoint(const Model& model, std::ostream& out);
Model ReadCheckpoint(std::istream& in);
void SaveCheckpoint(const Model& model, const std::string& path);
Model LoadCheckpoint(const std::string& path);

}  // namespace rlrbn::model

#endif  // RLRBN_CORE_EMBEDDING_MODEL_HPP_

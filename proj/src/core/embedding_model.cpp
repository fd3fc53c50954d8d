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

#include "core/embedding_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "core/error.hpp"

namespace rlrbn::model {

namespace {

Matrix RandomNormal(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix m(rows, cols);
  // Fill row-major so the draw order does not depend on Eigen's storage order.
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = normal(rng);
  return m;
}

void NormalizeColumns(Matrix& w) {
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    const double n = w.col(c).norm();
    if (n == 0.0) throw NumericDomainError("zero-norm identity weight column");
    w.col(c) /= n;
  }
}

struct ForwardCache {
  std::vector<Matrix> pre;   // pre-activation of each layer
  std::vector<Matrix> post;  // input to each layer (post[0] = inputs)
};

Matrix Forward(const ModelParams& params, const Matrix& inputs, ForwardCache* cache) {
  if (inputs.cols() != params.d_in()) throw ConfigError("input dimension mismatch");
  Matrix h = inputs;
  const std::size_t n_layers = params.encoder.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const DenseLayer& layer = params.encoder[l];
    Matrix a = h * layer.weight.transpose();
    a.rowwise() += layer.bias.transpose();
    if (cache) {
      cache->post.push_back(std::move(h));
      cache->pre.push_back(a);
    }
    h = (l + 1 < n_layers) ? Matrix(a.cwiseMax(0.0)) : std::move(a);
  }
  return h;
}

Matrix NormalizeRows(const Matrix& m) {
  Matrix out = m;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double n = out.row(r).norm();
    if (n == 0.0) throw NumericDomainError("zero-norm embedding before normalization");
    out.row(r) /= n;
  }
  return out;
}

void WriteMatrix(std::ostream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << m(r, c);
    out << '\n';
  }
}

Matrix ReadMatrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) in >> m(r, c);
  if (!in) throw IoError("truncated checkpoint matrix");
  return m;
}

void Expect(std::istream& in, const std::string& word) {
  std::string got;
  in >> got;
  if (got != word) throw IoError("checkpoint: expected '" + word + "', got '" + got + "'");
}

}  // namespace

void OptimizerConfig::Validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
  if (batch_size < 2) throw ConfigError("batch size must be at least 2");
}

double OptimizerConfig::RateAt(std::uint64_t epoch) const {
  double rate = learning_rate;
  for (int e : lr_decay_epochs)
    if (epoch >= static_cast<std::uint64_t>(e)) rate *= 0.1;
  return rate;
}

Model InitModel(int d_in, const std::vector<int>& hidden, int d, int n_identities,
                std::uint64_t seed) {
  if (d_in < 1 || d < 1 || n_identities < 1) throw ConfigError("model dimensions must be positive");
  for (int h : hidden)
    if (h < 1) throw ConfigError("hidden widths must be positive");
  Rng rng = MakeRng(seed, {0x696e6974ULL});
  Model model;
  std::vector<int> widths{d_in};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(d);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const bool last = l + 2 == widths.size();
    // He scaling ahead of a ReLU, plain 1/fan_in on the output layer.
    const double stddev = std::sqrt((last ? 1.0 : 2.0) / widths[l]);
    DenseLayer layer{RandomNormal(widths[l + 1], widths[l], stddev, rng),
                     Vector::Zero(widths[l + 1])};
    model.optimizer.encoder_velocity.push_back(
        {Matrix::Zero(widths[l + 1], widths[l]), Vector::Zero(widths[l + 1])});
    model.params.encoder.push_back(std::move(layer));
  }
  model.params.identity_weights = RandomNormal(d, n_identities, 1.0, rng);
  NormalizeColumns(model.params.identity_weights);
  model.optimizer.identity_velocity = Matrix::Zero(d, n_identities);
  return model;
}

Matrix FeatureMatrix(const data::GroupedDataset& ds) {
  Matrix x(static_cast<Eigen::Index>(ds.samples().size()), ds.d_in());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto& f = ds.samples()[r].features;
    for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = f[c];
  }
  return x;
}

Matrix ForwardRaw(const ModelParams& params, const Matrix& inputs) {
  return Forward(params, inputs, nullptr);
}

Matrix EmbedBatch(const ModelParams& params, const Matrix& inputs) {
  return NormalizeRows(ForwardRaw(params, inputs));
}

Vector Embed(const ModelParams& params, std::span<const double> features) {
  Matrix x(1, static_cast<Eigen::Index>(features.size()));
  for (std::size_t c = 0; c < features.size(); ++c) x(0, c) = features[c];
  return EmbedBatch(params, x).row(0).transpose();
}

Vector Embed(const ModelParams& params, const data::Sample& sample) {
  return Embed(params, std::span<const double>(sample.features));
}

ParamGradients ComputeGradients(const ModelParams& params, const Matrix& inputs,
                                const std::vector<int>& labels, const std::vector<int>& groups,
                                const loss::LossConfig& loss_cfg) {
  ForwardCache cache;
  const Matrix features = Forward(params, inputs, &cache);
  loss::LossGradients lg =
      loss::ComputeLossGradients(features, params.identity_weights, labels, groups, loss_cfg);

  ParamGradients out;
  out.loss = lg.loss;
  out.identity_weights = std::move(lg.d_weights);
  out.encoder.resize(params.encoder.size());
  Matrix d_pre = std::move(lg.d_features);
  for (std::size_t l = params.encoder.size(); l-- > 0;) {
    out.encoder[l].weight = d_pre.transpose() * cache.post[l];
    out.encoder[l].bias = d_pre.colwise().sum().transpose();
    if (l > 0) {
      Matrix d_post = d_pre * params.encoder[l].weight;
      d_pre = d_post.cwiseProduct((cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return out;
}

EpochStats TrainEpochs(Model& model, const data::GroupedDataset& ds,
                       const loss::LossConfig& loss_cfg, const OptimizerConfig& opt,
                       int n_epochs) {
  opt.Validate();
  loss_cfg.Validate();
  if (ds.n_identities() != model.params.n_identities()) {
    throw ConfigError("dataset has " + std::to_string(ds.n_identities()) +
                      " identities but the model classifies " +
                      std::to_string(model.params.n_identities()));
  }
  const Matrix all_inputs = FeatureMatrix(ds);
  const Eigen::Index n = all_inputs.rows();
  const bool normalized = loss::IsNormalized(loss_cfg.kind);
  ModelParams& p = model.params;
  OptimizerState& state = model.optimizer;

  EpochStats stats;
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int e = 0; e < n_epochs; ++e) {
    const std::uint64_t epoch = state.epochs_completed;
    const double rate = opt.RateAt(epoch);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = MakeRng(opt.seed, {0x65706f6368ULL, epoch});
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    for (Eigen::Index start = 0; start < n; start += opt.batch_size) {
      const Eigen::Index len = std::min<Eigen::Index>(opt.batch_size, n - start);
      Matrix xb(len, all_inputs.cols());
      std::vector<int> labels(len);
      std::vector<int> groups(len);
      for (Eigen::Index r = 0; r < len; ++r) {
        const int idx = order[start + r];
        xb.row(r) = all_inputs.row(idx);
        labels[r] = ds.samples()[idx].identity_id;
        groups[r] = ds.samples()[idx].group_id;
      }
      ParamGradients g = ComputeGradients(p, xb, labels, groups, loss_cfg);
      loss_sum += g.loss * static_cast<double>(len);

      for (std::size_t l = 0; l < p.encoder.size(); ++l) {
        DenseLayer& v = state.encoder_velocity[l];
        v.weight = opt.momentum * v.weight + g.encoder[l].weight + opt.weight_decay * p.encoder[l].weight;
        v.bias = opt.momentum * v.bias + g.encoder[l].bias;
      }
      state.identity_velocity = opt.momentum * state.identity_velocity + g.identity_weights;
      if (rate > 0.0) {
        for (std::size_t l = 0; l < p.encoder.size(); ++l) {
          p.encoder[l].weight -= rate * state.encoder_velocity[l].weight;
          p.encoder[l].bias -= rate * state.encoder_velocity[l].bias;
        }
        p.identity_weights -= rate * state.identity_velocity;
        if (normalized) NormalizeColumns(p.identity_weights);
      }
    }
    const double mean = loss_sum / static_cast<double>(n);
    if (!std::isfinite(mean)) {
      throw TrainingDivergedError("non-finite training loss at epoch " + std::to_string(epoch),
                                  static_cast<long long>(epoch));
    }
    stats.mean_loss.push_back(mean);
    ++state.epochs_completed;
  }
  return stats;
}

void WriteCheckpoint(const Model& model, std::ostream& out) {
  const ModelParams& p = model.params;
  out << "rlrbn-model v1\n";
  out << "layers " << p.encoder.size() << " d " << p.d() << " n_identities "
      << p.n_identities() << " epochs_completed " << model.optimizer.epochs_completed << '\n';
  out << std::setprecision(17);
  auto write_layers = [&](const std::vector<DenseLayer>& layers) {
    for (const DenseLayer& l : layers) {
      out << "layer " << l.weight.rows() << ' ' << l.weight.cols() << '\n';
      WriteMatrix(out, l.weight);
      WriteMatrix(out, l.bias.transpose());
    }
  };
  out << "params\n";
  write_layers(p.encoder);
  out << "identity_weights\n";
  WriteMatrix(out, p.identity_weights);
  out << "velocity\n";
  write_layers(model.optimizer.encoder_velocity);
  out << "identity_velocity\n";
  WriteMatrix(out, model.optimizer.identity_velocity);
}

Model ReadCheckpoint(std::istream& in) {
  std::string magic, version;
  in >> magic >> version;
  if (magic != "rlrbn-model" || version != "v1") throw IoError("not an rlrbn-model v1 checkpoint");
  std::size_t n_layers = 0;
  Eigen::Index d = 0, n_ids = 0;
  Model model;
  Expect(in, "layers");
  in >> n_layers;
  Expect(in, "d");
  in >> d;
  Expect(in, "n_identities");
  in >> n_ids;
  Expect(in, "epochs_completed");
  in >> model.optimizer.epochs_completed;
  if (!in || n_layers == 0) throw IoError("malformed checkpoint header");
  auto read_layers = [&](std::vector<DenseLayer>& layers) {
    for (std::size_t l = 0; l < n_layers; ++l) {
      Expect(in, "layer");
      Eigen::Index rows = 0, cols = 0;
      in >> rows >> cols;
      DenseLayer layer;
      layer.weight = ReadMatrix(in, rows, cols);
      layer.bias = ReadMatrix(in, 1, rows).row(0).transpose();
      layers.push_back(std::move(layer));
    }
  };
  Expect(in, "params");
  read_layers(model.params.encoder);
  Expect(in, "identity_weights");
  model.params.identity_weights = ReadMatrix(in, d, n_ids);
  Expect(in, "velocity");
  read_layers(model.optimizer.encoder_velocity);
  Expect(in, "identity_velocity");
  model.optimizer.identity_velocity = ReadMatrix(in, d, n_ids);
  return model;
}

void SaveCheckpoint(const Model& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  WriteCheckpoint(model, out);
  if (!out) throw IoError("write failed: " + path);
}

Model LoadCheckpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open checkpoint " + path);
  return ReadCheckpoint(in);
}

}  // namespace rlrbn::model

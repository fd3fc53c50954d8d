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

#include "core/qlearning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "core/error.hpp"

namespace rlrbn::qlearn {

namespace {

using model::DenseLayer;

Matrix EncodeBatch(const std::vector<mdp::MarginState>& states, const mdp::StateSpace& space) {
  Matrix x(static_cast<Eigen::Index>(states.size()), space.EncodingLength());
  for (std::size_t r = 0; r < states.size(); ++r) {
    const std::vector<double> e = mdp::EncodeState(states[r], space);
    for (std::size_t c = 0; c < e.size(); ++c) x(r, c) = e[c];
  }
  return x;
}

std::vector<DenseLayer> ZerosLike(const std::vector<DenseLayer>& shape) {
  std::vector<DenseLayer> out;
  for (const DenseLayer& l : shape) {
    out.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  }
  return out;
}

nlohmann::json MatrixToJson(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[c] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

Matrix MatrixFromJson(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  Matrix m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != static_cast<std::size_t>(m.cols())) throw ConfigError("ragged matrix");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

}  // namespace

void AgentConfig::Validate() const {
  if (!(discount >= 0.0 && discount < 1.0)) throw ConfigError("discount must be in [0, 1)");
  if (!(learning_rate > 0.0)) throw ConfigError("agent learning rate must be positive");
  if (training_iterations < 0) throw ConfigError("training iterations must be non-negative");
  if (batch_size < 1) throw ConfigError("agent batch size must be positive");
  for (int h : hidden)
    if (h < 1) throw ConfigError("hidden widths must be positive");
}

QNetwork::QNetwork(int input_dim, const std::vector<int>& hidden, std::uint64_t seed) {
  if (input_dim < 1) throw ConfigError("Q-network input dimension must be positive");
  Rng rng = MakeRng(seed, {0x716e6574ULL});
  std::vector<int> widths{input_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(mdp::kNumActions);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const bool last = l + 2 == widths.size();
    std::normal_distribution<double> normal(0.0, std::sqrt((last ? 1.0 : 2.0) / widths[l]));
    DenseLayer layer{Matrix(widths[l + 1], widths[l]), Vector::Zero(widths[l + 1])};
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = normal(rng);
    layers_.push_back(std::move(layer));
  }
}

Matrix QNetwork::ForwardBatch(const Matrix& inputs) const {
  Matrix h = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix a = h * layers_[l].weight.transpose();
    a.rowwise() += layers_[l].bias.transpose();
    h = (l + 1 < layers_.size()) ? Matrix(a.cwiseMax(0.0)) : std::move(a);
  }
  return h;
}

QValues QNetwork::Forward(std::span<const double> x) const {
  Matrix in(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t c = 0; c < x.size(); ++c) in(0, c) = x[c];
  const Matrix out = ForwardBatch(in);
  return {out(0, 0), out(0, 1), out(0, 2)};
}

double QNetwork::TdLossAndGradient(const Matrix& inputs, const std::vector<int>& actions,
                                   const std::vector<double>& targets,
                                   std::vector<DenseLayer>* gradient) const {
  const Eigen::Index n = inputs.rows();
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
  Matrix h = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Matrix a = h * layers_[l].weight.transpose();
    a.rowwise() += layers_[l].bias.transpose();
    post.push_back(h);
    pre.push_back(a);
    h = (l + 1 < layers_.size()) ? Matrix(a.cwiseMax(0.0)) : a;
  }
  double loss = 0.0;
  Matrix d_out = Matrix::Zero(n, mdp::kNumActions);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double err = h(r, actions[r]) - targets[r];
    loss += err * err;
    d_out(r, actions[r]) = 2.0 * err / static_cast<double>(n);
  }
  loss /= static_cast<double>(n);
  if (gradient) {
    *gradient = ZerosLike(layers_);
    Matrix d_pre = d_out;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      (*gradient)[l].weight = d_pre.transpose() * post[l];
      (*gradient)[l].bias = d_pre.colwise().sum().transpose();
      if (l > 0) {
        Matrix d_post = d_pre * layers_[l].weight;
        d_pre = d_post.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
      }
    }
  }
  return loss;
}

nlohmann::json QNetwork::ToJson() const {
  nlohmann::json j;
  j["format"] = "rlrbn-qnetwork";
  j["version"] = 1;
  j["layers"] = nlohmann::json::array();
  for (const DenseLayer& l : layers_) {
    j["layers"].push_back({{"weight", MatrixToJson(l.weight)},
                           {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return j;
}

QNetwork QNetwork::FromJson(const nlohmann::json& j) {
  try {
    if (j.at("format") != "rlrbn-qnetwork" || j.at("version") != 1) {
      throw ConfigError("not an rlrbn-qnetwork v1 document");
    }
    QNetwork q;
    for (const auto& lj : j.at("layers")) {
      DenseLayer l;
      l.weight = MatrixFromJson(lj.at("weight"));
      const auto b = lj.at("bias").get<std::vector<double>>();
      l.bias = Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
      q.layers_.push_back(std::move(l));
    }
    if (q.layers_.empty()) throw ConfigError("Q-network without layers");
    return q;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed Q-network: ") + e.what());
  }
}

AdamOptimizer::AdamOptimizer(const std::vector<DenseLayer>& shape, double learning_rate)
    : lr_(learning_rate), m_(ZerosLike(shape)), v_(ZerosLike(shape)) {}

void AdamOptimizer::Step(std::vector<DenseLayer>& params, const std::vector<DenseLayer>& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    p.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  };
  for (std::size_t l = 0; l < params.size(); ++l) {
    update(params[l].weight, grad[l].weight, m_[l].weight, v_[l].weight);
    update(params[l].bias, grad[l].bias, m_[l].bias, v_[l].bias);
  }
}

QNetwork TrainDqn(const std::vector<Transition>& transitions, const mdp::StateSpace& space,
                  const AgentConfig& cfg) {
  cfg.Validate();
  space.Validate();
  if (transitions.empty()) throw ConfigError("no transitions to learn from");
  std::vector<mdp::MarginState> states;
  std::vector<mdp::MarginState> next_states;
  for (const Transition& t : transitions) {
    if (!space.Contains(t.state) || !space.Contains(t.next_state)) {
      throw ConfigError("transition state outside the state space");
    }
    if (!std::isfinite(t.reward)) throw NumericDomainError("non-finite reward in transitions");
    states.push_back(t.state);
    next_states.push_back(t.next_state);
  }
  const Matrix all_x = EncodeBatch(states, space);
  const Matrix all_next = EncodeBatch(next_states, space);

  QNetwork q(space.EncodingLength(), cfg.hidden, cfg.seed);
  AdamOptimizer adam(q.layers(), cfg.learning_rate);
  Rng rng = MakeRng(cfg.seed, {0x64716eULL});
  std::uniform_int_distribution<std::size_t> pick(0, transitions.size() - 1);

  const Eigen::Index b = cfg.batch_size;
  Matrix x(b, all_x.cols());
  Matrix xn(b, all_x.cols());
  std::vector<int> actions(b);
  std::vector<double> targets(b);
  std::vector<DenseLayer> grad;
  for (int it = 0; it < cfg.training_iterations; ++it) {
    std::vector<std::size_t> idx(b);
    for (Eigen::Index r = 0; r < b; ++r) {
      idx[r] = pick(rng);
      x.row(r) = all_x.row(idx[r]);
      xn.row(r) = all_next.row(idx[r]);
      actions[r] = static_cast<int>(transitions[idx[r]].action);
    }
    const Matrix q_next = q.ForwardBatch(xn);
    for (Eigen::Index r = 0; r < b; ++r) {
      targets[r] = transitions[idx[r]].reward + cfg.discount * q_next.row(r).maxCoeff();
    }
    const double loss = q.TdLossAndGradient(x, actions, targets, &grad);
    if (!std::isfinite(loss)) {
      throw TrainingDivergedError("non-finite TD loss at iteration " + std::to_string(it), it);
    }
    adam.Step(q.layers(), grad);
  }
  return q;
}

double TdLoss(const QNetwork& q, const std::vector<Transition>& transitions,
              const mdp::StateSpace& space, double discount) {
  if (transitions.empty()) return 0.0;
  std::vector<mdp::MarginState> states;
  std::vector<mdp::MarginState> next_states;
  std::vector<int> actions;
  for (const Transition& t : transitions) {
    states.push_back(t.state);
    next_states.push_back(t.next_state);
    actions.push_back(static_cast<int>(t.action));
  }
  const Matrix q_next = q.ForwardBatch(EncodeBatch(next_states, space));
  std::vector<double> targets;
  for (std::size_t r = 0; r < transitions.size(); ++r) {
    targets.push_back(transitions[r].reward + discount * q_next.row(r).maxCoeff());
  }
  return q.TdLossAndGradient(EncodeBatch(states, space), actions, targets, nullptr);
}

bool QTable::HasAction(int state) const {
  const auto& o = observed.at(state);
  return o[0] || o[1] || o[2];
}

mdp::MarginAction QTable::Greedy(int state) const {
  int best = -1;
  for (int a = 0; a < mdp::kNumActions; ++a) {
    if (!observed[state][a]) continue;
    if (best < 0 || q[state][a] > q[state][best]) best = a;
  }
  return mdp::ActionFromIndex(best < 0 ? 0 : best);
}

QTable TabularValueIteration(const std::vector<Transition>& transitions,
                             const mdp::StateSpace& space, double discount) {
  if (transitions.empty()) throw ConfigError("no transitions for value iteration");
  if (!(discount >= 0.0 && discount < 1.0)) throw ConfigError("discount must be in [0, 1)");
  const int n = space.n_states();

  struct Cell {
    double reward_sum = 0.0;
    int count = 0;
    std::map<int, int> next_counts;
  };
  std::vector<std::array<Cell, mdp::kNumActions>> cells(n);
  for (const Transition& t : transitions) {
    Cell& c = cells[space.Flatten(t.state)][static_cast<int>(t.action)];
    c.reward_sum += t.reward;
    ++c.count;
    ++c.next_counts[space.Flatten(t.next_state)];
  }

  QTable table;
  table.q.assign(n, {QTable::kUnobserved, QTable::kUnobserved, QTable::kUnobserved});
  table.observed.assign(n, {false, false, false});
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < mdp::kNumActions; ++a)
      if (cells[s][a].count > 0) {
        table.observed[s][a] = true;
        table.q[s][a] = 0.0;
      }

  auto value = [&](int s) {
    double v = QTable::kUnobserved;
    for (int a = 0; a < mdp::kNumActions; ++a)
      if (table.observed[s][a]) v = std::max(v, table.q[s][a]);
    return v == QTable::kUnobserved ? 0.0 : v;
  };

  for (int iter = 0; iter < 10'000'000; ++iter) {
    std::vector<double> v(n);
    for (int s = 0; s < n; ++s) v[s] = value(s);
    double change = 0.0;
    for (int s = 0; s < n; ++s) {
      for (int a = 0; a < mdp::kNumActions; ++a) {
        const Cell& c = cells[s][a];
        if (c.count == 0) continue;
        double future = 0.0;
        for (const auto& [next, count] : c.next_counts) future += count * v[next];
        const double updated = c.reward_sum / c.count + discount * future / c.count;
        change = std::max(change, std::abs(updated - table.q[s][a]));
        table.q[s][a] = updated;
      }
    }
    if (change < 1e-10) break;
  }
  return table;
}

mdp::MarginAction ArgmaxAction(const QValues& q) {
  int best = 0;
  for (int a = 1; a < mdp::kNumActions; ++a)
    if (q[a] > q[best]) best = a;
  return mdp::ActionFromIndex(best);
}

mdp::MarginAction GreedyAction(const QNetwork& q, const mdp::MarginState& state,
                               const mdp::StateSpace& space) {
  return ArgmaxAction(q.Forward(mdp::EncodeState(state, space)));
}

mdp::MarginAction PolicyTable::Lookup(const mdp::MarginState& state) const {
  const int idx = space.Flatten(state);
  if (idx >= static_cast<int>(rows.size())) throw ConfigError("policy does not cover the state");
  return rows[idx].action;
}

PolicyTable DumpPolicy(const QNetwork& q, const mdp::StateSpace& space) {
  PolicyTable table;
  table.space = space;
  for (const mdp::MarginState& s : space.AllStates()) {
    PolicyRow row;
    row.state = s;
    row.q = q.Forward(mdp::EncodeState(s, space));
    row.action = ArgmaxAction(row.q);
    table.rows.push_back(row);
  }
  return table;
}

PolicyTable ConstantPolicy(const mdp::StateSpace& space, mdp::MarginAction action) {
  PolicyTable table;
  table.space = space;
  for (const mdp::MarginState& s : space.AllStates()) table.rows.push_back({s, action, {}});
  return table;
}

nlohmann::json PolicyToJson(const PolicyTable& policy) {
  nlohmann::json j;
  j["format"] = "rlrbn-policy";
  j["version"] = 1;
  j["state_space"] = mdp::ToJson(policy.space);
  j["rows"] = nlohmann::json::array();
  for (const PolicyRow& r : policy.rows) {
    j["rows"].push_back({{"group", r.state.group},
                         {"margin_index", r.state.margin_index},
                         {"bias_index", r.state.bias_index},
                         {"action", static_cast<int>(r.action)},
                         {"symbol", mdp::ActionSymbol(r.action)},
                         {"q", r.q}});
  }
  return j;
}

PolicyTable PolicyFromJson(const nlohmann::json& j) {
  try {
    if (j.at("format") != "rlrbn-policy" || j.at("version") != 1) {
      throw ConfigError("not an rlrbn-policy v1 document");
    }
    PolicyTable p;
    p.space = mdp::StateSpaceFromJson(j.at("state_space"));
    for (const auto& rj : j.at("rows")) {
      PolicyRow r;
      r.state = {rj.at("group").get<int>(), rj.at("margin_index").get<int>(),
                 rj.at("bias_index").get<int>()};
      r.action = mdp::ActionFromIndex(rj.at("action").get<int>());
      r.q = rj.at("q").get<QValues>();
      p.rows.push_back(r);
    }
    if (static_cast<int>(p.rows.size()) != p.space.n_states()) {
      throw ConfigError("policy table does not cover every state");
    }
    for (int i = 0; i < p.space.n_states(); ++i) {
      if (p.space.Flatten(p.rows[i].state) != i) throw ConfigError("policy rows out of order");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed policy: ") + e.what());
  }
}

void SavePolicy(const PolicyTable& policy, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << PolicyToJson(policy).dump(2) << '\n';
}

PolicyTable LoadPolicy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open policy " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("policy is not valid JSON: ") + e.what());
  }
  return PolicyFromJson(j);
}

}  // namespace rlrbn::qlearn

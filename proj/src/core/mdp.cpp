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

#include "core/mdp.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace rlrbn::mdp {

const char* ActionSymbol(MarginAction a) {
  switch (a) {
    case MarginAction::kStay: return "o";
    case MarginAction::kUp: return "+";
    case MarginAction::kDown: return "-";
  }
  return "?";
}

MarginAction ActionFromIndex(int index) {
  if (index < 0 || index >= kNumActions) {
    throw ConfigError("action index " + std::to_string(index) + " out of range");
  }
  return static_cast<MarginAction>(index);
}

void StateSpace::Validate() const {
  if (n_groups_nonanchor < 1) throw ConfigError("state space needs at least one group");
  if (margin_grid.empty()) throw ConfigError("margin grid is empty");
  if (!(step > 0.0)) throw ConfigError("margin step must be positive");
  for (std::size_t i = 1; i < margin_grid.size(); ++i) {
    const double gap = margin_grid[i] - margin_grid[i - 1];
    if (!(gap > 0.0)) throw ConfigError("margin grid must be strictly increasing");
    if (std::abs(gap - step) > 1e-9) throw ConfigError("margin grid gaps must equal the step");
  }
  for (std::size_t i = 1; i < bias_edges.size(); ++i) {
    if (!(bias_edges[i] > bias_edges[i - 1])) {
      throw ConfigError("bias edges must be strictly increasing");
    }
  }
}

bool StateSpace::Contains(const MarginState& s) const {
  return s.group >= 0 && s.group < n_groups_nonanchor && s.margin_index >= 0 &&
         s.margin_index < n_margins() && s.bias_index >= 0 && s.bias_index < n_bias_bins();
}

int StateSpace::Flatten(const MarginState& s) const {
  if (!Contains(s)) throw ConfigError("state outside the state space");
  return (s.group * n_margins() + s.margin_index) * n_bias_bins() + s.bias_index;
}

MarginState StateSpace::Unflatten(int index) const {
  if (index < 0 || index >= n_states()) throw ConfigError("state index out of range");
  MarginState s;
  s.bias_index = index % n_bias_bins();
  index /= n_bias_bins();
  s.margin_index = index % n_margins();
  s.group = index / n_margins();
  return s;
}

std::vector<MarginState> StateSpace::AllStates() const {
  std::vector<MarginState> all;
  all.reserve(n_states());
  for (int i = 0; i < n_states(); ++i) all.push_back(Unflatten(i));
  return all;
}

StateSpace DefaultStateSpace(const std::string& flavor, int n_groups_nonanchor) {
  StateSpace space;
  space.n_groups_nonanchor = n_groups_nonanchor;
  if (flavor == "soft") {
    space.margin_grid = {0.0, 0.2, 0.4, 0.6};
    space.step = 0.2;
  } else if (flavor == "cos") {
    space.margin_grid = {0.15, 0.25, 0.35, 0.45};
    space.step = 0.1;
  } else if (flavor == "arc") {
    space.margin_grid = {0.3, 0.4, 0.5, 0.6};
    space.step = 0.1;
  } else {
    throw ConfigError("unknown loss flavor '" + flavor + "' (expected soft, cos or arc)");
  }
  return space;
}

int DiscretizeBias(double b, const StateSpace& space) {
  if (!(b >= 0.0)) throw NumericDomainError("skew value must be non-negative");
  return static_cast<int>(std::upper_bound(space.bias_edges.begin(), space.bias_edges.end(), b) -
                          space.bias_edges.begin());
}

int ApplyAction(const MarginState& state, MarginAction action, const StateSpace& space) {
  switch (action) {
    case MarginAction::kStay: return state.margin_index;
    case MarginAction::kUp: return std::min(state.margin_index + 1, space.n_margins() - 1);
    case MarginAction::kDown: return std::max(state.margin_index - 1, 0);
  }
  return state.margin_index;
}

std::vector<double> EncodeState(const MarginState& state, const StateSpace& space) {
  if (!space.Contains(state)) throw ConfigError("state outside the state space");
  std::vector<double> x(space.EncodingLength(), 0.0);
  x[state.group] = 1.0;
  const int nm = space.n_margins() - 1;
  const int nb = space.n_bias_bins() - 1;
  x[space.n_groups_nonanchor] = nm > 0 ? static_cast<double>(state.margin_index) / nm : 0.0;
  x[space.n_groups_nonanchor + 1] = nb > 0 ? static_cast<double>(state.bias_index) / nb : 0.0;
  return x;
}

std::vector<double> QuantileEdges(std::vector<double> values, int n_bins) {
  if (n_bins < 1) throw ConfigError("need at least one bin");
  if (values.empty() || n_bins == 1) return {};
  std::sort(values.begin(), values.end());
  std::vector<double> edges;
  const double last = static_cast<double>(values.size() - 1);
  for (int k = 1; k < n_bins; ++k) {
    const double pos = last * k / n_bins;
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    const double q = values[lo] + frac * (values[hi] - values[lo]);
    if (edges.empty() || q > edges.back()) edges.push_back(q);
  }
  return edges;
}

int DatasetGroup(int state_group, int anchor_group) {
  return state_group < anchor_group ? state_group : state_group + 1;
}

int StateGroup(int dataset_group, int anchor_group) {
  if (dataset_group == anchor_group) throw ConfigError("the anchor group has no MDP state");
  return dataset_group < anchor_group ? dataset_group : dataset_group - 1;
}

nlohmann::json ToJson(const StateSpace& space) {
  nlohmann::json j;
  j["n_groups_nonanchor"] = space.n_groups_nonanchor;
  j["margin_grid"] = space.margin_grid;
  j["bias_edges"] = space.bias_edges;
  j["step"] = space.step;
  if (space.bias_upper) {
    j["bias_upper"] = *space.bias_upper;
  } else {
    j["bias_upper"] = nullptr;
  }
  return j;
}

StateSpace StateSpaceFromJson(const nlohmann::json& j) {
  try {
    StateSpace s;
    s.n_groups_nonanchor = j.at("n_groups_nonanchor").get<int>();
    s.margin_grid = j.at("margin_grid").get<std::vector<double>>();
    s.bias_edges = j.at("bias_edges").get<std::vector<double>>();
    s.step = j.at("step").get<double>();
    if (j.contains("bias_upper") && !j["bias_upper"].is_null()) {
      s.bias_upper = j["bias_upper"].get<double>();
    }
    s.Validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed state space: ") + e.what());
  }
}

}  // namespace rlrbn::mdp

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

// The discrete margin-control decision process: a state is (non-anchor group,
// margin grid index, inter-class skew bin), and an action keeps, raises or
// lowers that group's margin by one grid step.

#ifndef RLRBN_CORE_MDP_HPP_
#define RLRBN_CORE_MDP_HPP_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace rlrbn::mdp {

enum class MarginAction : int { kStay = 0, kUp = 1, kDown = 2 };

inline constexpr std::array<MarginAction, 3> kAllActions{MarginAction::kStay, MarginAction::kUp,
                                                         MarginAction::kDown};
inline constexpr int kNumActions = 3;

const char* ActionSymbol(MarginAction a);  // "o", "+", "-"
MarginAction ActionFromIndex(int index);

struct MarginState {
  int group = 0;  // index among non-anchor groups
  int margin_index = 0;
  int bias_index = 0;

  auto operator<=>(const MarginState&) const = default;
};

struct StateSpace {
  int n_groups_nonanchor = 3;
  std::vector<double> margin_grid;
  // Interior bin edges; there are bias_edges.size() + 1 bins, half-open on
  // the right, and the top bin is unbounded.
  std::vector<double> bias_edges;
  double step = 0.1;
  // Largest skew seen while fitting the edges; values above it are still
  // placed in the top bin but reported as clamped.
  std::optional<double> bias_upper;

  void Validate() const;
  int n_margins() const { return static_cast<int>(margin_grid.size()); }
  int n_bias_bins() const { return static_cast<int>(bias_edges.size()) + 1; }
  int n_states() const { return n_groups_nonanchor * n_margins() * n_bias_bins(); }
  bool Contains(const MarginState& s) const;
  // Row-major over (group, margin_index, bias_index).
  int Flatten(const MarginState& s) const;
  MarginState Unflatten(int index) const;
  std::vector<MarginState> AllStates() const;
  int EncodingLength() const { return n_groups_nonanchor + 2; }

  bool operator==(const StateSpace&) const = default;
};

// Margin grid for a loss flavor: soft {0, .2, .4, .6}, cos {.15, .25, .35,
// .45}, arc {.3, .4, .5, .6}. The first entry is the anchor group's margin.
StateSpace DefaultStateSpace(const std::string& flavor, int n_groups_nonanchor = 3);

int DiscretizeBias(double b, const StateSpace& space);
int ApplyAction(const MarginState& state, MarginAction action, const StateSpace& space);

// one-hot(group) ++ margin_index / (n_M - 1) ++ bias_index / (n_B - 1); a
// single-entry axis encodes as 0.
std::vector<double> EncodeState(const MarginState& state, const StateSpace& space);

// Quantile edges (linear interpolation) splitting `values` into `n_bins`
// bins. Duplicate edges are dropped, so fewer bins may come back.
std::vector<double> QuantileEdges(std::vector<double> values, int n_bins);

// Mapping between non-anchor state groups and dataset group ids.
int DatasetGroup(int state_group, int anchor_group);
int StateGroup(int dataset_group, int anchor_group);

nlohmann::json ToJson(const StateSpace& space);
StateSpace StateSpaceFromJson(const nlohmann::json& j);

}  // namespace rlrbn::mdp

#endif  // RLRBN_CORE_MDP_HPP_

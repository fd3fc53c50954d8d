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

#include <set>

#include "core/error.hpp"
#include "core/mdp.hpp"
#include "doctest.h"

using namespace rlrbn;
using namespace rlrbn::mdp;

namespace {

StateSpace Space(std::vector<double> edges = {0.05, 0.10, 0.15}) {
  StateSpace s = DefaultStateSpace("soft", 3);
  s.bias_edges = std::move(edges);
  return s;
}

}  // namespace

TEST_CASE("default margin grids per flavor") {
  CHECK(DefaultStateSpace("soft").margin_grid == std::vector<double>{0.0, 0.2, 0.4, 0.6});
  const auto cos = DefaultStateSpace("cos").margin_grid;
  const auto arc = DefaultStateSpace("arc").margin_grid;
  REQUIRE(cos.size() == 4);
  REQUIRE(arc.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(cos[i] == doctest::Approx(0.15 + 0.1 * i));
    CHECK(arc[i] == doctest::Approx(0.3 + 0.1 * i));
  }
  CHECK_NOTHROW(DefaultStateSpace("arc").Validate());
}

TEST_CASE("bias discretization") {
  const StateSpace s = Space();
  CHECK(DiscretizeBias(0.07, s) == 1);
  CHECK(DiscretizeBias(0.0, s) == 0);
  CHECK(DiscretizeBias(0.05, s) == 1);  // bins are half-open on the right
  CHECK(DiscretizeBias(0.99, s) == 3);
  CHECK_THROWS_AS(DiscretizeBias(-0.01, s), NumericDomainError);
}

TEST_CASE("actions move one grid step and saturate") {
  const StateSpace s = Space();
  CHECK(ApplyAction({0, 2, 1}, MarginAction::kUp, s) == 3);
  CHECK(s.margin_grid[3] == doctest::Approx(s.margin_grid[2] + s.step));
  CHECK(ApplyAction({0, 3, 1}, MarginAction::kUp, s) == 3);
  CHECK(ApplyAction({0, 0, 1}, MarginAction::kDown, s) == 0);
  CHECK(ApplyAction({0, 2, 1}, MarginAction::kDown, s) == 1);
  for (const MarginState& st : s.AllStates()) CHECK(ApplyAction(st, MarginAction::kStay, s) == st.margin_index);
}

TEST_CASE("state encoding") {
  const StateSpace s = Space();
  const auto x = EncodeState({1, 0, 2}, s);
  REQUIRE(x.size() == 5);
  CHECK(x[0] == 0.0);
  CHECK(x[1] == 1.0);
  CHECK(x[2] == 0.0);
  CHECK(x[3] == 0.0);
  CHECK(x[4] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  std::set<std::vector<double>> seen;
  for (const MarginState& st : s.AllStates()) {
    const auto e = EncodeState(st, s);
    CHECK(static_cast<int>(e.size()) == s.EncodingLength());
    CHECK(seen.insert(e).second);
  }
  CHECK(static_cast<int>(seen.size()) == s.n_states());

  // A single bias bin encodes as 0.
  CHECK(EncodeState({2, 3, 0}, Space({}))[4] == 0.0);
  CHECK_THROWS_AS(EncodeState({3, 0, 0}, s), ConfigError);
}

TEST_CASE("flatten and unflatten are inverse") {
  const StateSpace s = Space();
  CHECK(s.n_states() == 3 * 4 * 4);
  const auto all = s.AllStates();
  REQUIRE(static_cast<int>(all.size()) == s.n_states());
  for (int i = 0; i < s.n_states(); ++i) {
    CHECK(s.Flatten(all[i]) == i);
    CHECK(s.Unflatten(i) == all[i]);
  }
}

TEST_CASE("quantile edges") {
  std::vector<double> v;
  for (int i = 0; i <= 100; ++i) v.push_back(i);
  CHECK(QuantileEdges(v, 4) == std::vector<double>{25, 50, 75});
  CHECK(QuantileEdges({0.3, 0.1, 0.2}, 2) == std::vector<double>{0.2});
  CHECK(QuantileEdges({0.5, 0.5, 0.5, 0.5}, 4) == std::vector<double>{0.5});  // duplicates dropped
  CHECK(QuantileEdges(v, 1).empty());
  CHECK_THROWS_AS(QuantileEdges(v, 0), ConfigError);
}

TEST_CASE("group index mapping skips the anchor") {
  for (int anchor = 0; anchor < 4; ++anchor) {
    std::set<int> hit;
    for (int sg = 0; sg < 3; ++sg) {
      const int g = DatasetGroup(sg, anchor);
      CHECK(g != anchor);
      CHECK(StateGroup(g, anchor) == sg);
      hit.insert(g);
    }
    CHECK(hit.size() == 3);
    CHECK_THROWS_AS(StateGroup(anchor, anchor), ConfigError);
  }
}

TEST_CASE("state space validation and json round trip") {
  StateSpace s = Space();
  s.bias_upper = 0.31;
  CHECK(StateSpaceFromJson(ToJson(s)) == s);
  s.bias_upper.reset();
  CHECK(StateSpaceFromJson(ToJson(s)) == s);

  StateSpace bad = Space();
  bad.margin_grid = {0.0, 0.2, 0.5};
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
  bad = Space({0.1, 0.1});
  CHECK_THROWS_AS(bad.Validate(), ConfigError);
}

TEST_CASE("action symbols") {
  CHECK(std::string(ActionSymbol(MarginAction::kStay)) == "o");
  CHECK(std::string(ActionSymbol(MarginAction::kUp)) == "+");
  CHECK(std::string(ActionSymbol(MarginAction::kDown)) == "-");
  for (int i = 0; i < kNumActions; ++i) CHECK(static_cast<int>(ActionFromIndex(i)) == i);
}

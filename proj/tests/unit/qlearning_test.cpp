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

#include <cmath>
#include <map>

#include "core/error.hpp"
#include "core/qlearning.hpp"
#include "doctest.h"
#include "harness/checks.hpp"
#include "test_util.hpp"

using namespace rlrbn;
using namespace rlrbn::qlearn;
using mdp::MarginAction;
using mdp::MarginState;
using mdp::StateSpace;

namespace {

StateSpace Chain(int n_margins) {
  StateSpace s;
  s.n_groups_nonanchor = 1;
  s.step = 0.1;
  for (int i = 0; i < n_margins; ++i) s.margin_grid.push_back(0.1 * i);
  return s;
}

}  // namespace

TEST_CASE("argmax tie-break prefers stay, then up") {
  CHECK(ArgmaxAction({0.1, 0.9, 0.2}) == MarginAction::kUp);
  CHECK(ArgmaxAction({0.5, 0.5, 0.1}) == MarginAction::kStay);
  CHECK(ArgmaxAction({0.1, 0.5, 0.5}) == MarginAction::kUp);
  CHECK(ArgmaxAction({-1.0, -2.0, -0.5}) == MarginAction::kDown);
}

TEST_CASE("value iteration with zero discount returns empirical means") {
  mdp::StateSpace space = mdp::DefaultStateSpace("soft", 3);
  space.bias_edges = {0.1, 0.2};
  const auto data = harness::RandomFiniteMdp(space, 3, 0.5, 17);
  const QTable q = TabularValueIteration(data, space, 0.0);
  std::map<std::pair<int, int>, std::pair<double, int>> sums;
  for (const Transition& t : data) {
    auto& e = sums[{space.Flatten(t.state), static_cast<int>(t.action)}];
    e.first += t.reward;
    e.second += 1;
  }
  for (const auto& [key, e] : sums) {
    CHECK(q.q[key.first][key.second] == doctest::Approx(e.first / e.second).epsilon(1e-12));
    CHECK(q.observed[key.first][key.second]);
  }
}

TEST_CASE("two-state loop/switch MDP matches the geometric series") {
  const StateSpace s = Chain(2);
  const MarginState a{0, 0, 0}, b{0, 1, 0};
  const std::vector<Transition> data{{a, MarginAction::kStay, 1.0, a},
                                     {a, MarginAction::kUp, 0.0, b},
                                     {b, MarginAction::kStay, 1.0, b},
                                     {b, MarginAction::kDown, 0.0, a}};
  for (double gamma : {0.0, 0.5, 0.9}) {
    const QTable q = TabularValueIteration(data, s, gamma);
    const double loop = 1.0 / (1.0 - gamma);
    CHECK(std::abs(q.q[0][0] - loop) < 1e-9);
    CHECK(std::abs(q.q[1][0] - loop) < 1e-9);
    CHECK(std::abs(q.q[0][1] - gamma * loop) < 1e-9);
    CHECK(std::abs(q.q[1][2] - gamma * loop) < 1e-9);
    CHECK_FALSE(q.observed[0][2]);
    CHECK(q.Greedy(0) == MarginAction::kStay);
    // Rerunning lands on the same fixed point.
    const QTable again = TabularValueIteration(data, s, gamma);
    CHECK(again.q == q.q);
  }
}

TEST_CASE("single transition with zero discount regresses to its reward") {
  const StateSpace s = Chain(3);
  const std::vector<Transition> data{{{0, 1, 0}, MarginAction::kUp, 0.37, {0, 2, 0}}};
  AgentConfig cfg;
  cfg.discount = 0.0;
  cfg.learning_rate = 1e-3;
  cfg.training_iterations = 5000;
  cfg.batch_size = 8;
  cfg.seed = 2;
  const QNetwork q = TrainDqn(data, s, cfg);
  const auto x = mdp::EncodeState({0, 1, 0}, s);
  CHECK(std::abs(q.Forward(x)[1] - 0.37) < 1e-3);
}

TEST_CASE("dqn solves a deterministic six-state chain") {
  // Reward is the normalized margin index reached, minus a cost for
  // moving; the best policy climbs and then stays at the top.
  const StateSpace s = Chain(6);
  std::vector<Transition> data;
  for (const MarginState& st : s.AllStates()) {
    for (MarginAction a : mdp::kAllActions) {
      MarginState next = st;
      next.margin_index = mdp::ApplyAction(st, a, s);
      const double r = next.margin_index / 5.0 - (a == MarginAction::kStay ? 0.0 : 0.2);
      for (int k = 0; k < 3; ++k) data.push_back({st, a, r, next});
    }
  }
  AgentConfig cfg;
  cfg.discount = 0.5;
  cfg.learning_rate = 1e-3;
  cfg.training_iterations = 20000;
  cfg.seed = 4;
  const QNetwork q = TrainDqn(data, s, cfg);
  const QTable oracle = TabularValueIteration(data, s, cfg.discount);
  int agree = 0;
  for (int i = 0; i < s.n_states(); ++i) {
    agree += GreedyAction(q, s.Unflatten(i), s) == oracle.Greedy(i) ? 1 : 0;
  }
  CHECK(agree >= 6);  // 95% of six states
  CHECK(oracle.Greedy(5) == MarginAction::kStay);
  CHECK(oracle.Greedy(0) == MarginAction::kUp);
  CHECK(TdLoss(q, data, s, cfg.discount) < TdLoss(QNetwork(3, cfg.hidden, cfg.seed), data, s, cfg.discount));
}

TEST_CASE("policy table covers the space and agrees with the network") {
  StateSpace s = mdp::DefaultStateSpace("cos", 3);
  s.bias_edges = {0.02, 0.05, 0.1};
  const QNetwork q(s.EncodingLength(), {10, 10}, 9);
  const PolicyTable p = DumpPolicy(q, s);
  REQUIRE(static_cast<int>(p.rows.size()) == 3 * 4 * 4);
  for (int i = 0; i < s.n_states(); ++i) {
    CHECK(p.rows[i].state == s.Unflatten(i));
    CHECK(p.rows[i].action == GreedyAction(q, p.rows[i].state, s));
    CHECK(p.Lookup(p.rows[i].state) == p.rows[i].action);
  }
  const PolicyTable again = DumpPolicy(q, s);
  for (int i = 0; i < s.n_states(); ++i) {
    CHECK(again.rows[i].action == p.rows[i].action);
    CHECK(again.rows[i].q == p.rows[i].q);
  }

  const std::string dir = testing::ScratchDir("policy");
  SavePolicy(p, dir + "/policy.json");
  const PolicyTable back = LoadPolicy(dir + "/policy.json");
  CHECK(back.space == p.space);
  for (int i = 0; i < s.n_states(); ++i) {
    CHECK(back.rows[i].action == p.rows[i].action);
    CHECK(back.rows[i].q == p.rows[i].q);
  }
  CHECK_THROWS_AS(LoadPolicy(dir + "/none.json"), MissingArtifactError);
}

TEST_CASE("q-network json round trip is exact") {
  const QNetwork q(5, {10, 10}, 3);
  const QNetwork back = QNetwork::FromJson(q.ToJson());
  const std::vector<double> x{0, 1, 0, 0.5, 1.0 / 3};
  CHECK(back.Forward(x) == q.Forward(x));
  CHECK(back.layers() == q.layers());
}

TEST_CASE("agent config validation") {
  AgentConfig cfg;
  CHECK_NOTHROW(cfg.Validate());
  cfg.discount = 1.0;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
  cfg = AgentConfig();
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.Validate(), ConfigError);
}

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

#include <map>
#include <set>
#include <sstream>

#include "core/error.hpp"
#include "core/offline_sampler.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace rlrbn;
using sampler::SamplerConfig;

namespace {

struct Setup {
  data::GroupedDataset train;
  data::GroupedDataset val;
  model::Model warmed;
  model::OptimizerConfig opt;
};

const Setup& Tiny() {
  static const Setup s = [] {
    Setup t;
    data::DatasetSpec spec = testing::SmallSpec(21);
    spec.identities_per_group = {10, 7, 7, 7};
    const data::GroupedDataset all = data::GenerateSynthetic(spec);
    auto [train, val] = data::SplitTrainVal(all, 3, 22);
    t.train = std::move(train);
    t.val = std::move(val);
    t.opt.learning_rate = 0.02;
    t.opt.batch_size = 32;
    t.opt.seed = 23;
    t.warmed = model::InitModel(t.train.d_in(), {12}, 6, t.train.n_identities(), 24);
    model::TrainEpochs(t.warmed, t.train, FixedLossConfig(LossFlavor::kSoft, 60.0, 0.0), t.opt, 2);
    return t;
  }();
  return s;
}

SamplerConfig Cfg(int max_states = 64) {
  SamplerConfig c;
  c.seed = 5;
  c.max_states_per_group = max_states;
  return c;
}

}  // namespace

TEST_CASE("single-entry margin grid: three stays-in-place actions per state") {
  const Setup& t = Tiny();
  mdp::StateSpace space = FlavorStateSpace(LossFlavor::kSoft, 3);
  space.margin_grid = {0.0};
  space.bias_edges = {0.01, 0.03};
  const sampler::SamplerResult res =
      sampler::CollectTransitions(t.train, t.val, t.warmed, space, Cfg(), t.opt);
  std::map<std::pair<int, int>, int> per_state;
  for (const auto& r : res.records) {
    CHECK(r.transition.state.margin_index == 0);
    CHECK(r.transition.next_state.margin_index == 0);
    per_state[{r.transition.state.group, r.transition.state.bias_index}]++;
  }
  for (const auto& [key, n] : per_state) CHECK(n == 3);
  int visited = 0;
  for (int v : res.visited_per_group) visited += v;
  CHECK(static_cast<int>(per_state.size()) == visited);
}

TEST_CASE("sweep visits every margin index and obeys the action rule") {
  const Setup& t = Tiny();
  mdp::StateSpace space = FlavorStateSpace(LossFlavor::kSoft, 3);
  space.bias_edges = {0.02};
  const sampler::SamplerResult res =
      sampler::CollectTransitions(t.train, t.val, t.warmed, space, Cfg(), t.opt);
  CHECK_FALSE(res.truncated);
  std::set<std::pair<int, int>> cells;
  std::set<std::tuple<int, int, int, int>> keys;
  for (const auto& r : res.records) {
    const auto& tr = r.transition;
    CHECK(tr.next_state.group == tr.state.group);
    CHECK(tr.next_state.margin_index == mdp::ApplyAction(tr.state, tr.action, space));
    CHECK(tr.next_state.bias_index == mdp::DiscretizeBias(r.after.inter, space));
    CHECK(tr.state.bias_index == mdp::DiscretizeBias(r.before.inter, space));
    CHECK(tr.reward == metrics::Reward(r.before, r.after));
    CHECK(keys.insert({tr.state.group, tr.state.margin_index, tr.state.bias_index,
                       static_cast<int>(tr.action)}).second);
    cells.insert({tr.state.group, tr.state.margin_index});
  }
  CHECK(cells.size() == 3 * 4);
}

TEST_CASE("the state cap truncates and flags the result") {
  const Setup& t = Tiny();
  mdp::StateSpace space = FlavorStateSpace(LossFlavor::kSoft, 3);
  space.bias_edges = {0.02};
  const sampler::SamplerResult res =
      sampler::CollectTransitions(t.train, t.val, t.warmed, space, Cfg(2), t.opt);
  CHECK(res.truncated);
  std::set<std::pair<int, int>> expanded;
  for (const auto& r : res.records) expanded.insert({r.transition.state.group, r.transition.state.margin_index});
  for (int g = 0; g < 3; ++g) CHECK((expanded.count({g, 0}) + expanded.count({g, 1}) + expanded.count({g, 2}) + expanded.count({g, 3})) <= 2);
  CHECK(res.records.size() <= 3 * 2 * 3);
}

TEST_CASE("two-pass sampling freezes quantile edges and is reproducible") {
  const Setup& t = Tiny();
  const mdp::StateSpace grid = FlavorStateSpace(LossFlavor::kSoft, 3);
  const auto a = sampler::CollectTwoPass(t.train, t.val, t.warmed, grid, 3, Cfg(), t.opt);
  const auto b = sampler::CollectTwoPass(t.train, t.val, t.warmed, grid, 3, Cfg(), t.opt);
  CHECK(a.space == b.space);
  CHECK(a.space.n_bias_bins() <= 3);
  REQUIRE(a.space.bias_upper.has_value());
  double max_seen = 0.0;
  std::vector<double> raw;
  for (const auto& r : a.calibration.records) {
    max_seen = std::max({max_seen, r.before.inter, r.after.inter});
  }
  CHECK(*a.space.bias_upper == max_seen);
  std::ostringstream la, lb;
  sampler::WriteTransitionLog(a.sample.records, la);
  sampler::WriteTransitionLog(b.sample.records, lb);
  CHECK(la.str() == lb.str());

  SamplerConfig other = Cfg();
  other.seed = 6;
  const auto c = sampler::CollectTwoPass(t.train, t.val, t.warmed, grid, 3, other, t.opt);
  std::ostringstream lc;
  sampler::WriteTransitionLog(c.sample.records, lc);
  CHECK(la.str() != lc.str());
}

TEST_CASE("transition log round-trips at full precision") {
  const Setup& t = Tiny();
  mdp::StateSpace space = FlavorStateSpace(LossFlavor::kSoft, 3);
  space.bias_edges = {0.02};
  const auto res = sampler::CollectTransitions(t.train, t.val, t.warmed, space, Cfg(3), t.opt);
  std::stringstream ss;
  sampler::WriteTransitionLog(res.records, ss);
  const auto back = sampler::ReadTransitionLog(ss);
  REQUIRE(back.size() == res.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].transition.state == res.records[i].transition.state);
    CHECK(back[i].transition.next_state == res.records[i].transition.next_state);
    CHECK(back[i].transition.action == res.records[i].transition.action);
    CHECK(back[i].transition.reward == res.records[i].transition.reward);
    CHECK(back[i].before.inter == res.records[i].before.inter);
    CHECK(back[i].after.intra == res.records[i].after.intra);
  }
  std::istringstream bad("header\n1,2,3\n");
  CHECK_THROWS_AS(sampler::ReadTransitionLog(bad), IoError);
}

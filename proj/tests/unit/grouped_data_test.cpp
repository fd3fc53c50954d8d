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
#include <set>
#include <sstream>

#include "core/error.hpp"
#include "core/grouped_data.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace rlrbn;
using data::DatasetSpec;
using data::GroupedDataset;

namespace {

// Mean angle (degrees) between each raw feature vector of `group` and its
// identity's mean feature vector.
double RawIntraAngle(const GroupedDataset& ds, int group) {
  double sum = 0.0;
  int n = 0;
  for (int id : ds.identities_by_group()[group]) {
    const auto& idx = ds.samples_by_identity()[id];
    std::vector<double> c(ds.d_in(), 0.0);
    for (int i : idx) {
      for (int k = 0; k < ds.d_in(); ++k) c[k] += ds.samples()[i].features[k] / idx.size();
    }
    for (int i : idx) {
      const auto& f = ds.samples()[i].features;
      double dot = 0.0, nf = 0.0, nc = 0.0;
      for (int k = 0; k < ds.d_in(); ++k) {
        dot += f[k] * c[k];
        nf += f[k] * f[k];
        nc += c[k] * c[k];
      }
      sum += std::acos(std::clamp(dot / std::sqrt(nf * nc), -1.0, 1.0)) * 180.0 / kPi;
      ++n;
    }
  }
  return sum / n;
}

}  // namespace

TEST_CASE("synthetic dataset has the requested shape") {
  DatasetSpec spec = testing::SmallSpec();
  spec.identities_per_group = {4, 2, 2, 2};
  spec.samples_per_identity = 5;
  const GroupedDataset ds = data::GenerateSynthetic(spec);
  CHECK(ds.n_identities() == 10);
  CHECK(ds.samples().size() == 50);
  CHECK(ds.n_groups() == 4);
  CHECK(ds.d_in() == spec.d_in);
  CHECK(ds.identities_per_group() == std::vector<int>{4, 2, 2, 2});
  for (const auto& idx : ds.samples_by_identity()) CHECK(idx.size() == 5);
}

TEST_CASE("synthetic generation is deterministic per seed") {
  const DatasetSpec spec = testing::SmallSpec(11);
  std::ostringstream a, b;
  data::WriteDataset(data::GenerateSynthetic(spec), a);
  data::WriteDataset(data::GenerateSynthetic(spec), b);
  CHECK(a.str() == b.str());
  std::ostringstream c;
  data::WriteDataset(data::GenerateSynthetic(testing::SmallSpec(12)), c);
  CHECK(a.str() != c.str());
}

TEST_CASE("lower concentration spreads a group's samples wider") {
  DatasetSpec spec = testing::SmallSpec(5);
  spec.identities_per_group = {10, 10, 10, 10};
  spec.samples_per_identity = 8;
  spec.d_in = 16;
  spec.group_concentration = {50, 50, 10, 50};
  spec.group_center_spread = {1, 1, 1, 1};
  const GroupedDataset ds = data::GenerateSynthetic(spec);
  CHECK(RawIntraAngle(ds, 2) > RawIntraAngle(ds, 0));
}

TEST_CASE("invalid specs are configuration errors") {
  DatasetSpec spec = testing::SmallSpec();
  spec.samples_per_identity = 1;
  CHECK_THROWS_AS(data::GenerateSynthetic(spec), ConfigError);
  spec = testing::SmallSpec();
  spec.identities_per_group = {3, 0, 2, 2};
  CHECK_THROWS_AS(data::GenerateSynthetic(spec), ConfigError);
  spec = testing::SmallSpec();
  spec.group_concentration = {1, 1};
  CHECK_THROWS_AS(data::GenerateSynthetic(spec), ConfigError);
}

TEST_CASE("dataset constructor enforces its invariants") {
  using data::Sample;
  const std::vector<double> f{1.0, 0.0};
  // identity 1 missing
  CHECK_THROWS_AS(testing::MakeDataset({{f, 0, 0}, {f, 0, 0}, {f, 2, 0}, {f, 2, 0}}, 1),
                  ConfigError);
  // identity in two groups
  CHECK_THROWS_AS(testing::MakeDataset({{f, 0, 0}, {f, 0, 1}}, 2), ConfigError);
  // single-sample identity
  CHECK_THROWS_AS(testing::MakeDataset({{f, 0, 0}, {f, 0, 0}, {f, 1, 0}}, 1), ConfigError);
  // non-finite feature
  CHECK_THROWS_AS(testing::MakeDataset({{{NAN, 0.0}, 0, 0}, {f, 0, 0}}, 1), NumericDomainError);
}

TEST_CASE("train/validation split holds out whole identities per group") {
  DatasetSpec spec = testing::SmallSpec();
  spec.identities_per_group = {10, 10, 10, 10};
  const GroupedDataset ds = data::GenerateSynthetic(spec);
  const auto [train, val] = data::SplitTrainVal(ds, 3, 99);
  CHECK(train.identities_per_group() == std::vector<int>{7, 7, 7, 7});
  CHECK(val.identities_per_group() == std::vector<int>{3, 3, 3, 3});
  CHECK(train.samples().size() + val.samples().size() == ds.samples().size());

  // Identities are relabeled, so compare by feature content: every original
  // identity lands entirely on one side.
  std::set<std::vector<double>> train_first, val_first;
  for (const auto& idx : train.samples_by_identity()) train_first.insert(train.samples()[idx[0]].features);
  for (const auto& idx : val.samples_by_identity()) val_first.insert(val.samples()[idx[0]].features);
  for (const auto& f : val_first) CHECK(train_first.count(f) == 0);

  const auto [train2, val2] = data::SplitTrainVal(ds, 3, 99);
  CHECK(train2 == train);
  CHECK(val2 == val);
}

TEST_CASE("zero held-out identities leaves the training set unchanged") {
  const GroupedDataset ds = data::GenerateSynthetic(testing::SmallSpec());
  const auto [train, val] = data::SplitTrainVal(ds, 0, 1);
  CHECK(train == ds);
  CHECK(val.empty());
}

TEST_CASE("split rejects a group too small to hold out") {
  const GroupedDataset ds = data::GenerateSynthetic(testing::SmallSpec());
  CHECK_THROWS_AS(data::SplitTrainVal(ds, 4, 1), ConfigError);
}

TEST_CASE("verification pairs are balanced, within-group and unique") {
  DatasetSpec spec = testing::SmallSpec();
  spec.identities_per_group = {10, 10, 10, 10};
  const GroupedDataset ds = data::GenerateSynthetic(spec);
  const auto pairs = data::MakeVerificationPairs(ds, 100, 4);
  CHECK(pairs.size() == 400);
  std::vector<int> pos(4, 0), neg(4, 0);
  std::set<std::tuple<int, int>> seen;
  for (const auto& p : pairs) {
    const auto& a = ds.samples()[p.index_a];
    const auto& b = ds.samples()[p.index_b];
    CHECK(a.group_id == p.group_id);
    CHECK(b.group_id == p.group_id);
    CHECK(p.same_identity == (a.identity_id == b.identity_id));
    CHECK(p.index_a != p.index_b);
    CHECK(p.sample_a == a);
    CHECK(seen.insert({std::min(p.index_a, p.index_b), std::max(p.index_a, p.index_b)}).second);
    (p.same_identity ? pos : neg)[p.group_id]++;
  }
  CHECK(pos == std::vector<int>(4, 50));
  CHECK(neg == std::vector<int>(4, 50));
}

TEST_CASE("pairs need at least two identities per group") {
  DatasetSpec spec = testing::SmallSpec();
  spec.identities_per_group = {4, 1, 2, 2};
  const GroupedDataset ds = data::GenerateSynthetic(spec);
  CHECK_THROWS_AS(data::MakeVerificationPairs(ds, 4, 0), ConfigError);
  CHECK_THROWS_AS(data::MakeVerificationPairs(data::GenerateSynthetic(testing::SmallSpec()), 3, 0),
                  ConfigError);
}

TEST_CASE("dataset and pair files round-trip exactly") {
  const std::string dir = testing::ScratchDir("data-io");
  const GroupedDataset ds = data::GenerateSynthetic(testing::SmallSpec());
  data::SaveDataset(ds, dir + "/ds.txt");
  CHECK(data::LoadDataset(dir + "/ds.txt") == ds);

  const auto pairs = data::MakeVerificationPairs(ds, 10, 1);
  data::SavePairs(pairs, dir + "/pairs.csv");
  const auto back = data::LoadPairs(ds, dir + "/pairs.csv");
  REQUIRE(back.size() == pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(back[i].index_a == pairs[i].index_a);
    CHECK(back[i].index_b == pairs[i].index_b);
    CHECK(back[i].same_identity == pairs[i].same_identity);
    CHECK(back[i].group_id == pairs[i].group_id);
  }
  CHECK_THROWS_AS(data::LoadDataset(dir + "/missing.txt"), MissingArtifactError);
}

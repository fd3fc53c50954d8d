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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/bias_metrics.hpp"
#include "core/error.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace rlrbn;
using data::GroupedDataset;
using data::Sample;
using metrics::EmbeddedSet;

namespace {

// Dataset whose features double as embeddings; `rows[i]` belongs to
// identity ids[i] in group groups[i].
struct Fixture {
  GroupedDataset ds;
  Matrix emb;
};

Fixture Build(const std::vector<std::vector<double>>& rows, const std::vector<int>& ids,
              const std::vector<int>& groups, int n_groups) {
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < rows.size(); ++i) samples.push_back({rows[i], ids[i], groups[i]});
  Fixture f{GroupedDataset(samples, n_groups), Matrix(rows.size(), rows[0].size())};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].size(); ++k) f.emb(i, k) = rows[i][k];
  }
  return f;
}

}  // namespace

TEST_CASE("identical samples give a zero intra angle") {
  const Fixture f = Build({{1, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 1, 0}}, {0, 0, 1, 1}, {0, 0, 0, 0}, 1);
  const EmbeddedSet set(f.ds, f.emb);
  CHECK((set.centers()[0] - Vector::Unit(3, 0)).norm() == 0.0);
  const auto intra = set.Intra(0);
  CHECK(intra.theta_intra == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(intra.d_intra == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("two samples at a right angle sit 45 degrees from their center") {
  const Fixture f = Build({{1, 0}, {0, 1}}, {0, 0}, {0, 0}, 1);
  const auto intra = EmbeddedSet(f.ds, f.emb).Intra(0);
  CHECK(intra.theta_intra == doctest::Approx(45.0).epsilon(1e-12));
  CHECK(intra.d_intra == doctest::Approx(std::cos(kPi / 4)).epsilon(1e-12));
}

TEST_CASE("antipodal samples give a zero center and a numeric-domain error") {
  const Fixture f = Build({{1, 0}, {-1, 0}}, {0, 0}, {0, 0}, 1);
  const EmbeddedSet set(f.ds, f.emb);
  CHECK(set.centers()[0].norm() == 0.0);
  CHECK_THROWS_AS(set.Intra(0), NumericDomainError);
}

TEST_CASE("inter statistics of two identities and of orthogonal centers") {
  const Fixture two = Build({{1, 0}, {1, 0}, {0.6, 0.8}, {0.6, 0.8}}, {0, 0, 1, 1}, {0, 0, 0, 0}, 1);
  CHECK(EmbeddedSet(two.ds, two.emb).Inter(0).d_inter == doctest::Approx(0.6).epsilon(1e-15));

  const Fixture three = Build({{2, 0, 0}, {2, 0, 0}, {0, 3, 0}, {0, 3, 0}, {0, 0, 1}, {0, 0, 1}},
                              {0, 0, 1, 1, 2, 2}, {0, 0, 0, 0, 0, 0}, 1);
  const auto inter = EmbeddedSet(three.ds, three.emb).Inter(0);
  CHECK(inter.theta_inter == doctest::Approx(90.0).epsilon(1e-12));
  CHECK(std::abs(inter.d_inter) < 1e-15);
}

TEST_CASE("a single-identity group has no inter statistics") {
  const Fixture f = Build({{1, 0}, {1, 0.1}, {0, 1}, {0.1, 1}, {1, 1}, {1, 0.9}},
                          {0, 0, 1, 1, 2, 2}, {0, 0, 0, 0, 1, 1}, 2);
  const EmbeddedSet set(f.ds, f.emb);
  CHECK_NOTHROW(set.Inter(0));
  CHECK_THROWS_AS(set.Inter(1), InsufficientIdentitiesError);
  CHECK_THROWS_AS(set.SkewAgainst(1, 0), InsufficientIdentitiesError);
}

TEST_CASE("skew is an absolute gap and vanishes for the anchor") {
  const data::GroupedDataset ds = data::GenerateSynthetic(testing::SmallSpec(3));
  const Matrix emb = Matrix::Random(static_cast<Eigen::Index>(ds.samples().size()), 5);
  const EmbeddedSet set(ds, emb);
  const metrics::Skew self = set.SkewAgainst(2, 2);
  CHECK(self.inter == 0.0);
  CHECK(self.intra == 0.0);
  for (int g = 1; g < 4; ++g) {
    const metrics::Skew s = set.SkewAgainst(g, 0);
    CHECK(s.inter == std::abs(set.Inter(g).d_inter - set.Inter(0).d_inter));
    CHECK(s.intra == std::abs(set.Intra(g).d_intra - set.Intra(0).d_intra));
    const metrics::Skew back = set.SkewAgainst(0, g);
    CHECK(back.inter == s.inter);
    CHECK(back.intra == s.intra);
  }
}

TEST_CASE("statistics are invariant to sample order") {
  const data::GroupedDataset ds = data::GenerateSynthetic(testing::SmallSpec(4));
  const Matrix emb = Matrix::Random(static_cast<Eigen::Index>(ds.samples().size()), 5);
  std::vector<int> perm(ds.samples().size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = MakeRng(8);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Sample> shuffled;
  Matrix emb2(emb.rows(), emb.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    shuffled.push_back(ds.samples()[perm[i]]);
    emb2.row(i) = emb.row(perm[i]);
  }
  const GroupedDataset ds2(shuffled, ds.n_groups());
  const EmbeddedSet a(ds, emb), b(ds2, emb2);
  for (int id = 0; id < ds.n_identities(); ++id) CHECK(a.centers()[id] == b.centers()[id]);
  for (int g = 0; g < 4; ++g) {
    const auto ga = a.Geometry(g), gb = b.Geometry(g);
    CHECK(ga.theta_intra == gb.theta_intra);
    CHECK(ga.theta_inter == gb.theta_inter);
    CHECK(ga.d_intra == gb.d_intra);
    CHECK(ga.d_inter == gb.d_inter);
  }
}

TEST_CASE("reward is the drop in total skew") {
  CHECK(metrics::Reward({0.2, 0.1}, {0.2, 0.1}) == 0.0);
  CHECK(metrics::Reward({0.2, 0.1}, {0.05, 0.05}) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(metrics::Reward({0.05, 0.05}, {0.2, 0.1}) == doctest::Approx(-0.2).epsilon(1e-14));
}

TEST_CASE("threshold search on separable and flipped labels") {
  std::vector<double> sim;
  std::vector<char> same;
  for (int i = 0; i < 10; ++i) {
    sim.push_back(0.9);
    same.push_back(1);
    sim.push_back(0.1);
    same.push_back(0);
  }
  const auto r = metrics::BestThresholdAccuracy(sim, same);
  CHECK(r.accuracy == 1.0);
  CHECK(r.threshold > 0.1);
  CHECK(r.threshold < 0.9);
  std::vector<char> flipped;
  for (char s : same) flipped.push_back(s ? 0 : 1);
  CHECK(metrics::BestThresholdAccuracy(sim, flipped).accuracy == 1.0);

  Rng rng = MakeRng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> s2;
  std::vector<char> l2, l2f;
  for (int i = 0; i < 40; ++i) {
    s2.push_back(u(rng));
    l2.push_back(i % 3 == 0);
    l2f.push_back(i % 3 != 0);
  }
  CHECK(metrics::BestThresholdAccuracy(s2, l2).accuracy ==
        metrics::BestThresholdAccuracy(s2, l2f).accuracy);
}

TEST_CASE("random embeddings verify at chance") {
  // Balanced pairs scored by an untrained encoder land near 0.5; the best
  // threshold can only overfit upward by a little.
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    data::DatasetSpec spec = testing::SmallSpec(seed);
    spec.identities_per_group = {30, 30, 30, 30};
    const GroupedDataset ds = data::GenerateSynthetic(spec);
    const auto pairs = data::MakeVerificationPairs(ds, 250, seed);
    Rng rng = MakeRng(seed, {1});
    std::normal_distribution<double> n01;
    std::vector<double> sim;
    std::vector<char> same;
    for (const auto& p : pairs) {
      Vector a(8), b(8);
      for (int k = 0; k < 8; ++k) a[k] = n01(rng), b[k] = n01(rng);
      sim.push_back(metrics::Cosine(a, b));
      same.push_back(p.same_identity);
    }
    worst = std::max(worst, std::abs(metrics::BestThresholdAccuracy(sim, same).accuracy - 0.5));
  }
  CHECK(worst <= 0.1);
}

TEST_CASE("roc curve runs from the origin to (1, 1) monotonically") {
  const std::vector<double> sim{0.9, 0.8, 0.8, 0.3, 0.1, -0.2};
  const std::vector<char> same{1, 1, 0, 1, 0, 0};
  const auto roc = metrics::RocCurve(sim, same);
  REQUIRE(roc.size() == 5);  // one point per distinct similarity
  for (std::size_t i = 1; i < roc.size(); ++i) {
    CHECK(roc[i].threshold < roc[i - 1].threshold);
    CHECK(roc[i].fpr >= roc[i - 1].fpr);
    CHECK(roc[i].tpr >= roc[i - 1].tpr);
  }
  CHECK(roc.back().fpr == 1.0);
  CHECK(roc.back().tpr == 1.0);
  // threshold 0.8 admits 0.9, 0.8, 0.8: two of three positives, one of three negatives
  CHECK(roc[1].tpr == doctest::Approx(2.0 / 3));
  CHECK(roc[1].fpr == doctest::Approx(1.0 / 3));
}

TEST_CASE("std and ser of accuracies") {
  const std::vector<double> equal{0.9, 0.9, 0.9};
  const auto e = metrics::ComputeStdSer(equal);
  CHECK(e.std == 0.0);
  CHECK(e.ser == 1.0);
  const std::vector<double> two{0.98, 0.96};
  CHECK(metrics::ComputeStdSer(two).ser == doctest::Approx(2.0).epsilon(1e-12));
  const std::vector<double> perfect{1.0, 0.9};
  CHECK_THROWS_AS(metrics::ComputeStdSer(perfect), DegenerateSerError);
  CHECK(metrics::AccuracyStdPercent(perfect) == doctest::Approx(100 * std::sqrt(0.005)).epsilon(1e-12));
}

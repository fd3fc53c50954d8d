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

// Embedding-geometry and fairness statistics per group: intra/inter-class
// angles and cosines around identity centers, the skewness of those against
// an anchor group, the reward built from them, verification accuracy with a
// best threshold, and the STD / SER fairness criteria.
//
// Sums that feed a reported statistic are taken over sorted terms, so every
// statistic is bit-identical under any reordering of samples or identities.

#ifndef RLRBN_CORE_BIAS_METRICS_HPP_
#define RLRBN_CORE_BIAS_METRICS_HPP_

#include <optional>
#include <span>
#include <vector>

#include "core/common.hpp"
#include "core/embedding_model.hpp"
#include "core/grouped_data.hpp"

namespace rlrbn::metrics {

struct IntraStats {
  double theta_intra = 0.0;  // degrees
  double d_intra = 0.0;      // mean cosine to own center
};

struct InterStats {
  double theta_inter = 0.0;  // degrees, mean angle to the nearest other center
  double d_inter = 0.0;      // mean cosine to the nearest other center
};

struct GroupGeometry {
  int group_id = 0;
  double theta_intra = 0.0;
  double theta_inter = 0.0;
  double d_intra = 0.0;
  double d_inter = 0.0;
  int n_identities_used = 0;
};

struct Skew {
  double inter = 0.0;  // B_inter
  double intra = 0.0;  // B_intra
};

// Plain cosine; throws NumericDomainError when either vector is zero.
double Cosine(const Vector& a, const Vector& b);

// Mean embedding of each identity, not renormalized. Row i of `embeddings`
// belongs to sample i of `ds`.
std::vector<Vector> IdentityCenters(const Matrix& embeddings, const data::GroupedDataset& ds);
std::vector<Vector> IdentityCenters(const model::ModelParams& params,
                                    const data::GroupedDataset& ds);

// Embeddings of a dataset plus their identity centers, computed once and
// queried per group.
class EmbeddedSet {
 public:
  EmbeddedSet(const data::GroupedDataset& ds, Matrix embeddings);
  static EmbeddedSet FromModel(const model::ModelParams& params, const data::GroupedDataset& ds);

  const data::GroupedDataset& dataset() const { return *ds_; }
  const Matrix& embeddings() const { return embeddings_; }
  const std::vector<Vector>& centers() const { return centers_; }

  IntraStats Intra(int group) const;
  InterStats Inter(int group) const;
  GroupGeometry Geometry(int group) const;
  Skew SkewAgainst(int group, int anchor_group) const;

 private:
  const data::GroupedDataset* ds_;
  Matrix embeddings_;
  std::vector<Vector> centers_;
};

IntraStats ComputeIntraStats(const model::ModelParams& params, const data::GroupedDataset& ds,
                             int group);
InterStats ComputeInterStats(const model::ModelParams& params, const data::GroupedDataset& ds,
                             int group);
double SkewInter(const model::ModelParams& params, const data::GroupedDataset& val, int group,
                 int anchor_group);
double SkewIntra(const model::ModelParams& params, const data::GroupedDataset& val, int group,
                 int anchor_group);

// Improvement of R = -(B_inter + B_intra) from `prev` to `curr`.
double Reward(const Skew& prev, const Skew& curr);

struct ThresholdResult {
  double accuracy = 0.0;
  double threshold = 0.0;
};

// Best accuracy over thresholds placed at midpoints between distinct sorted
// similarities (plus both extremes). Either orientation of the decision is
// allowed, so flipping every label leaves the result unchanged.
ThresholdResult BestThresholdAccuracy(std::span<const double> similarities,
                                      std::span<const char> same_identity);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

// One point per distinct similarity, thresholds descending (predict "same"
// when similarity >= threshold).
std::vector<RocPoint> RocCurve(std::span<const double> similarities,
                               std::span<const char> same_identity);

std::vector<double> PairSimilarities(const model::ModelParams& params,
                                     const std::vector<data::VerificationPair>& pairs);

// Per-group accuracies (index = group id) when `per_group`, else one overall
// accuracy. Every group in [0, n_groups) must have pairs.
std::vector<double> VerificationAccuracy(const model::ModelParams& params,
                                         const std::vector<data::VerificationPair>& pairs,
                                         int n_groups, bool per_group = true);

struct StdSer {
  double std = 0.0;
  double ser = 1.0;
};

// Sample standard deviation (n - 1) of accuracies expressed in percent.
double AccuracyStdPercent(std::span<const double> accuracies);
// Accuracies are fractions in (0, 1). Throws DegenerateSerError when some
// group has zero error.
StdSer ComputeStdSer(std::span<const double> accuracies);

struct BiasReport {
  std::vector<double> per_group_accuracy;
  double avg_accuracy = 0.0;
  double std = 0.0;
  std::optional<double> ser;  // absent when some group is error-free
  std::vector<GroupGeometry> per_group_geometry;
};

}  // namespace rlrbn::metrics

#endif  // RLRBN_CORE_BIAS_METRICS_HPP_

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

#include "core/bias_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "core/error.hpp"

namespace rlrbn::metrics {

namespace {

double SortedMean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double AngleDegrees(double cosine) { return RadToDeg(std::acos(std::clamp(cosine, -1.0, 1.0))); }

const std::vector<int>& GroupIdentities(const data::GroupedDataset& ds, int group) {
  if (group < 0 || group >= ds.n_groups()) {
    throw ConfigError("group " + std::to_string(group) + " out of range");
  }
  return ds.identities_by_group()[group];
}

}  // namespace

double Cosine(const Vector& a, const Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw NumericDomainError("cosine against a zero-norm vector");
  return a.dot(b) / (na * nb);
}

std::vector<Vector> IdentityCenters(const Matrix& embeddings, const data::GroupedDataset& ds) {
  if (embeddings.rows() != static_cast<Eigen::Index>(ds.samples().size())) {
    throw ConfigError("embedding count does not match the dataset");
  }
  std::vector<Vector> centers;
  centers.reserve(ds.n_identities());
  std::vector<Vector> members;
  for (const std::vector<int>& rows : ds.samples_by_identity()) {
    members.clear();
    for (int r : rows) members.push_back(embeddings.row(r).transpose());
    std::sort(members.begin(), members.end(), [](const Vector& a, const Vector& b) {
      return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                          b.data() + b.size());
    });
    Vector sum = Vector::Zero(embeddings.cols());
    for (const Vector& m : members) sum += m;
    centers.push_back(sum / static_cast<double>(members.size()));
  }
  return centers;
}

std::vector<Vector> IdentityCenters(const model::ModelParams& params,
                                    const data::GroupedDataset& ds) {
  return IdentityCenters(model::EmbedBatch(params, model::FeatureMatrix(ds)), ds);
}

EmbeddedSet::EmbeddedSet(const data::GroupedDataset& ds, Matrix embeddings)
    : ds_(&ds), embeddings_(std::move(embeddings)), centers_(IdentityCenters(embeddings_, ds)) {}

EmbeddedSet EmbeddedSet::FromModel(const model::ModelParams& params,
                                   const data::GroupedDataset& ds) {
  return EmbeddedSet(ds, model::EmbedBatch(params, model::FeatureMatrix(ds)));
}

IntraStats EmbeddedSet::Intra(int group) const {
  const std::vector<int>& ids = GroupIdentities(*ds_, group);
  if (ids.empty()) throw InsufficientIdentitiesError("group has no identities");
  std::vector<double> angle_means;
  std::vector<double> cos_means;
  std::vector<double> angles;
  std::vector<double> cosines;
  for (int id : ids) {
    angles.clear();
    cosines.clear();
    for (int r : ds_->samples_by_identity()[id]) {
      const double c = Cosine(embeddings_.row(r).transpose(), centers_[id]);
      cosines.push_back(c);
      angles.push_back(AngleDegrees(c));
    }
    angle_means.push_back(SortedMean(angles));
    cos_means.push_back(SortedMean(cosines));
  }
  return {SortedMean(std::move(angle_means)), SortedMean(std::move(cos_means))};
}

InterStats EmbeddedSet::Inter(int group) const {
  const std::vector<int>& ids = GroupIdentities(*ds_, group);
  if (ids.size() < 2) {
    throw InsufficientIdentitiesError("group " + std::to_string(group) +
                                      " needs at least 2 identities for inter-class statistics");
  }
  std::vector<double> nearest_cos;
  std::vector<double> nearest_angle;
  for (int i : ids) {
    double best = -2.0;
    for (int k : ids) {
      if (k == i) continue;
      best = std::max(best, Cosine(centers_[k], centers_[i]));
    }
    nearest_cos.push_back(best);
    // The largest cosine is the smallest angle.
    nearest_angle.push_back(AngleDegrees(best));
  }
  return {SortedMean(std::move(nearest_angle)), SortedMean(std::move(nearest_cos))};
}

GroupGeometry EmbeddedSet::Geometry(int group) const {
  const IntraStats intra = Intra(group);
  const InterStats inter = Inter(group);
  GroupGeometry g;
  g.group_id = group;
  g.theta_intra = intra.theta_intra;
  g.d_intra = intra.d_intra;
  g.theta_inter = inter.theta_inter;
  g.d_inter = inter.d_inter;
  g.n_identities_used = static_cast<int>(ds_->identities_by_group()[group].size());
  return g;
}

Skew EmbeddedSet::SkewAgainst(int group, int anchor_group) const {
  if (group == anchor_group) {
    GroupIdentities(*ds_, group);
    return {};
  }
  Skew s;
  s.inter = std::abs(Inter(group).d_inter - Inter(anchor_group).d_inter);
  s.intra = std::abs(Intra(group).d_intra - Intra(anchor_group).d_intra);
  return s;
}

IntraStats ComputeIntraStats(const model::ModelParams& params, const data::GroupedDataset& ds,
                             int group) {
  return EmbeddedSet::FromModel(params, ds).Intra(group);
}

InterStats ComputeInterStats(const model::ModelParams& params, const data::GroupedDataset& ds,
                             int group) {
  return EmbeddedSet::FromModel(params, ds).Inter(group);
}

double SkewInter(const model::ModelParams& params, const data::GroupedDataset& val, int group,
                 int anchor_group) {
  const EmbeddedSet set = EmbeddedSet::FromModel(params, val);
  if (group == anchor_group) return 0.0;
  return std::abs(set.Inter(group).d_inter - set.Inter(anchor_group).d_inter);
}

double SkewIntra(const model::ModelParams& params, const data::GroupedDataset& val, int group,
                 int anchor_group) {
  const EmbeddedSet set = EmbeddedSet::FromModel(params, val);
  if (group == anchor_group) return 0.0;
  return std::abs(set.Intra(group).d_intra - set.Intra(anchor_group).d_intra);
}

double Reward(const Skew& prev, const Skew& curr) {
  const double r_prev = -(prev.inter + prev.intra);
  const double r_curr = -(curr.inter + curr.intra);
  return r_curr - r_prev;
}

ThresholdResult BestThresholdAccuracy(std::span<const double> similarities,
                                      std::span<const char> same_identity) {
  const std::size_t n = similarities.size();
  if (n == 0 || same_identity.size() != n) {
    throw ConfigError("threshold search needs a nonempty, label-aligned similarity list");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return similarities[a] < similarities[b];
  });
  long long total_pos = 0;
  for (char s : same_identity) total_pos += s ? 1 : 0;

  // Split at p: items [0, p) predicted different, [p, n) predicted same.
  long long neg_below = 0;
  long long pos_below = 0;
  ThresholdResult best;
  best.accuracy = -1.0;
  for (std::size_t p = 0; p <= n; ++p) {
    const bool valid = p == 0 || p == n ||
                       similarities[order[p - 1]] < similarities[order[p]];
    if (valid) {
      const long long correct = neg_below + (total_pos - pos_below);
      const long long best_side = std::max<long long>(correct, static_cast<long long>(n) - correct);
      const double acc = static_cast<double>(best_side) / static_cast<double>(n);
      if (acc > best.accuracy) {
        best.accuracy = acc;
        if (p == 0) {
          best.threshold = -std::numeric_limits<double>::infinity();
        } else if (p == n) {
          best.threshold = std::numeric_limits<double>::infinity();
        } else {
          best.threshold = 0.5 * (similarities[order[p - 1]] + similarities[order[p]]);
        }
      }
    }
    if (p < n) {
      if (same_identity[order[p]]) {
        ++pos_below;
      } else {
        ++neg_below;
      }
    }
  }
  return best;
}

std::vector<RocPoint> RocCurve(std::span<const double> similarities,
                               std::span<const char> same_identity) {
  const std::size_t n = similarities.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return similarities[a] > similarities[b];
  });
  double n_pos = 0.0;
  for (char s : same_identity) n_pos += s ? 1.0 : 0.0;
  const double n_neg = static_cast<double>(n) - n_pos;
  std::vector<RocPoint> curve;
  double tp = 0.0;
  double fp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (same_identity[order[i]]) {
      tp += 1.0;
    } else {
      fp += 1.0;
    }
    if (i + 1 < n && similarities[order[i + 1]] == similarities[order[i]]) continue;
    curve.push_back({similarities[order[i]], n_neg > 0 ? fp / n_neg : 0.0,
                     n_pos > 0 ? tp / n_pos : 0.0});
  }
  return curve;
}

std::vector<double> PairSimilarities(const model::ModelParams& params,
                                     const std::vector<data::VerificationPair>& pairs) {
  std::vector<double> sims;
  sims.reserve(pairs.size());
  for (const data::VerificationPair& p : pairs) {
    sims.push_back(Cosine(model::Embed(params, p.sample_a), model::Embed(params, p.sample_b)));
  }
  return sims;
}

std::vector<double> VerificationAccuracy(const model::ModelParams& params,
                                         const std::vector<data::VerificationPair>& pairs,
                                         int n_groups, bool per_group) {
  const std::vector<double> sims = PairSimilarities(params, pairs);
  if (!per_group) {
    if (pairs.empty()) throw ConfigError("no verification pairs");
    std::vector<char> labels;
    for (const auto& p : pairs) labels.push_back(p.same_identity ? 1 : 0);
    return {BestThresholdAccuracy(sims, labels).accuracy};
  }
  std::vector<double> acc(n_groups, 0.0);
  for (int g = 0; g < n_groups; ++g) {
    std::vector<double> s;
    std::vector<char> labels;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      if (pairs[k].group_id != g) continue;
      s.push_back(sims[k]);
      labels.push_back(pairs[k].same_identity ? 1 : 0);
    }
    if (s.empty()) throw ConfigError("no verification pairs for group " + std::to_string(g));
    acc[g] = BestThresholdAccuracy(s, labels).accuracy;
  }
  return acc;
}

double AccuracyStdPercent(std::span<const double> accuracies) {
  const std::size_t n = accuracies.size();
  if (n < 2) throw ConfigError("STD needs at least two groups");
  double mean = 0.0;
  for (double a : accuracies) mean += 100.0 * a;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double a : accuracies) ss += (100.0 * a - mean) * (100.0 * a - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

StdSer ComputeStdSer(std::span<const double> accuracies) {
  StdSer out;
  out.std = AccuracyStdPercent(accuracies);
  double max_err = 0.0;
  double min_err = 1.0;
  for (double a : accuracies) {
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("accuracy outside [0, 1]");
    const double err = 1.0 - a;
    if (err <= 0.0) throw DegenerateSerError("SER undefined: a group has zero error");
    max_err = std::max(max_err, err);
    min_err = std::min(min_err, err);
  }
  out.ser = max_err / min_err;
  return out;
}

}  // namespace rlrbn::metrics

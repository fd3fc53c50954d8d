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

#include "core/margin_loss.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace rlrbn::loss {

namespace {

constexpr double kCosineSlack = 1e-6;
// Floor on sin(theta) in slopes so that |cos| = 1 yields a large but finite value.
constexpr double kMinSine = 1e-6;

double CheckedCosine(double c) {
  if (!(c >= -1.0 - kCosineSlack && c <= 1.0 + kCosineSlack)) {
    throw NumericDomainError("cosine " + std::to_string(c) + " outside [-1, 1]");
  }
  return std::clamp(c, -1.0, 1.0);
}

bool IsCosineKind(LossKind k) { return k == LossKind::kCosface || k == LossKind::kAdaptiveCos; }
bool IsArcKind(LossKind k) { return k == LossKind::kArcface || k == LossKind::kAdaptiveArc; }

}  // namespace

const char* LossKindName(LossKind kind) {
  switch (kind) {
    case LossKind::kSoftmax: return "softmax";
    case LossKind::kNormSoftmax: return "norm_softmax";
    case LossKind::kCosface: return "cosface";
    case LossKind::kArcface: return "arcface";
    case LossKind::kAdaptiveArc: return "adaptive_arc";
    case LossKind::kAdaptiveCos: return "adaptive_cos";
  }
  return "?";
}

LossKind ParseLossKind(const std::string& name) {
  for (LossKind k : {LossKind::kSoftmax, LossKind::kNormSoftmax, LossKind::kCosface,
                     LossKind::kArcface, LossKind::kAdaptiveArc, LossKind::kAdaptiveCos}) {
    if (name == LossKindName(k)) return k;
  }
  throw ConfigError("unknown loss kind '" + name + "'");
}

bool IsAdaptive(LossKind kind) {
  return kind == LossKind::kAdaptiveArc || kind == LossKind::kAdaptiveCos;
}

void LossConfig::Validate() const {
  if (!(scale > 0.0)) throw ConfigError("loss scale must be positive");
  if (!(base_margin >= 0.0)) throw ConfigError("base margin must be non-negative");
  if (anchor_group < 0) throw ConfigError("anchor group must be non-negative");
  if (IsAdaptive(kind)) {
    for (double m : group_margins) {
      if (!(m >= 0.0)) throw ConfigError("group margins must be non-negative");
    }
  }
}

double LossConfig::MarginFor(int group) const {
  if (!IsAdaptive(kind) || group == anchor_group) return base_margin;
  if (group < 0 || group >= static_cast<int>(group_margins.size())) {
    throw ConfigError("no margin configured for group " + std::to_string(group));
  }
  return group_margins[group];
}

double ArcTarget(double cosine, double margin) {
  const double c = CheckedCosine(cosine);
  if (margin == 0.0) return c;
  const double theta = std::acos(c);
  if (theta <= kPi - margin) return std::cos(theta + margin);
  return -1.0 - (theta - (kPi - margin)) * std::sin(margin);
}

double ArcTargetSlope(double cosine, double margin) {
  const double c = CheckedCosine(cosine);
  if (margin == 0.0) return 1.0;
  const double theta = std::acos(c);
  const double sine = std::max(std::sqrt(std::max(0.0, 1.0 - c * c)), kMinSine);
  // d theta / d cos = -1 / sin(theta)
  if (theta <= kPi - margin) return std::sin(theta + margin) / sine;
  return std::sin(margin) / sine;
}

double ArcfaceLogit(double cosine, double margin, double scale) {
  return scale * ArcTarget(cosine, margin);
}

double CosfaceLogit(double cosine, double margin, double scale) {
  return scale * (CheckedCosine(cosine) - margin);
}

LossValue MarginLoss(const LogitBatch& batch, const LossConfig& cfg) {
  cfg.Validate();
  const Eigen::Index n_batch = batch.cosines.rows();
  const Eigen::Index n_classes = batch.cosines.cols();
  if (static_cast<Eigen::Index>(batch.labels.size()) != n_batch ||
      (IsAdaptive(cfg.kind) && static_cast<Eigen::Index>(batch.groups.size()) != n_batch)) {
    throw ConfigError("batch labels/groups do not match the cosine matrix");
  }
  if (n_batch == 0) throw ConfigError("empty batch");

  LossValue out;
  out.d_cosines = Matrix::Zero(n_batch, n_classes);
  const bool raw = cfg.kind == LossKind::kSoftmax;
  const double scale = raw ? 1.0 : cfg.scale;
  const double inv_n = 1.0 / static_cast<double>(n_batch);
  Vector logits(n_classes);

  double total = 0.0;
  for (Eigen::Index j = 0; j < n_batch; ++j) {
    const int y = batch.labels[j];
    if (y < 0 || y >= n_classes) throw ConfigError("label out of range");
    const int group = IsAdaptive(cfg.kind) ? batch.groups[j] : 0;
    const double margin = cfg.MarginFor(group);

    for (Eigen::Index i = 0; i < n_classes; ++i) {
      const double c = batch.cosines(j, i);
      logits[i] = raw ? c : scale * CheckedCosine(c);
    }
    double target_slope = 1.0;  // d target_logit / d cos, before scaling
    if (!raw) {
      const double c = batch.cosines(j, y);
      if (IsArcKind(cfg.kind)) {
        logits[y] = scale * ArcTarget(c, margin);
        target_slope = ArcTargetSlope(c, margin);
      } else if (IsCosineKind(cfg.kind)) {
        logits[y] = scale * (CheckedCosine(c) - margin);
      }
    }

    const double top = logits.maxCoeff();
    double denom = 0.0;
    for (Eigen::Index i = 0; i < n_classes; ++i) denom += std::exp(logits[i] - top);
    const double log_z = top + std::log(denom);
    total += log_z - logits[y];

    for (Eigen::Index i = 0; i < n_classes; ++i) {
      const double p = std::exp(logits[i] - log_z);
      out.d_cosines(j, i) = p * scale * inv_n;
    }
    out.d_cosines(j, y) = (std::exp(logits[y] - log_z) - 1.0) * scale * target_slope * inv_n;
  }
  out.loss = total * inv_n;
  return out;
}

LossValue AdaptiveLoss(const LogitBatch& batch, const LossConfig& cfg) {
  if (!IsAdaptive(cfg.kind)) throw ConfigError("adaptive loss needs an adaptive loss kind");
  return MarginLoss(batch, cfg);
}

LossGradients ComputeLossGradients(const Matrix& features, const Matrix& weights,
                                   const std::vector<int>& labels,
                                   const std::vector<int>& groups, const LossConfig& cfg) {
  if (features.cols() != weights.rows()) {
    throw ConfigError("feature and weight dimensions disagree");
  }
  LossGradients out;
  if (!IsNormalized(cfg.kind)) {
    LogitBatch batch{features * weights, labels, groups};
    LossValue v = MarginLoss(batch, cfg);
    out.loss = v.loss;
    out.d_features = v.d_cosines * weights.transpose();
    out.d_weights = features.transpose() * v.d_cosines;
    return out;
  }

  const Vector f_norm = features.rowwise().norm();
  const Vector w_norm = weights.colwise().norm().transpose();
  if ((f_norm.array() == 0.0).any()) throw NumericDomainError("zero-norm feature");
  if ((w_norm.array() == 0.0).any()) throw NumericDomainError("zero-norm weight column");
  const Matrix x_hat = f_norm.cwiseInverse().asDiagonal() * features;
  const Matrix w_hat = weights * w_norm.cwiseInverse().asDiagonal();

  LogitBatch batch{x_hat * w_hat, labels, groups};
  LossValue v = MarginLoss(batch, cfg);
  out.loss = v.loss;

  // Project out the radial component: d(v/|v|) = (I - v^ v^T) / |v|.
  Matrix g_x = v.d_cosines * w_hat.transpose();
  const Vector radial_x = (g_x.cwiseProduct(x_hat)).rowwise().sum();
  out.d_features = f_norm.cwiseInverse().asDiagonal() *
                   (g_x - radial_x.asDiagonal() * x_hat);

  Matrix g_w = x_hat.transpose() * v.d_cosines;
  const Vector radial_w = (g_w.cwiseProduct(w_hat)).colwise().sum().transpose();
  out.d_weights = (g_w - w_hat * radial_w.asDiagonal()) * w_norm.cwiseInverse().asDiagonal();
  return out;
}

}  // namespace rlrbn::loss

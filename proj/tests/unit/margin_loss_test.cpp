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

#include "core/error.hpp"
#include "core/flavor.hpp"
#include "core/margin_loss.hpp"
#include "doctest.h"

using namespace rlrbn;
using loss::LossConfig;
using loss::LossKind;

namespace {

loss::LogitBatch OneRow(std::vector<double> cosines, int label, int group) {
  loss::LogitBatch b;
  b.cosines = Matrix(1, static_cast<Eigen::Index>(cosines.size()));
  for (std::size_t i = 0; i < cosines.size(); ++i) b.cosines(0, i) = cosines[i];
  b.labels = {label};
  b.groups = {group};
  return b;
}

}  // namespace

TEST_CASE("arcface target logit") {
  CHECK(loss::ArcfaceLogit(1.0, 0.0, 60.0) == 60.0);
  CHECK(loss::ArcfaceLogit(1.0, 0.3, 60.0) == doctest::Approx(60.0 * std::cos(0.3)).epsilon(1e-14));
  CHECK(loss::ArcfaceLogit(0.2, 0.0, 60.0) == doctest::Approx(12.0).epsilon(1e-15));

  // Past theta = pi - m the target continues as a line in theta with slope
  // -sin(m), starting from cos(pi) = -1.
  const double theta = 3.0, m = 0.3;
  const double expected = 60.0 * (-1.0 - (theta - (kPi - m)) * std::sin(m));
  CHECK(loss::ArcfaceLogit(std::cos(theta), m, 60.0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("arcface target is continuous and decreasing in the angle") {
  for (double m : {0.1, 0.3, 0.5, 1.0}) {
    double prev = loss::ArcTarget(1.0, m);
    for (int k = 1; k <= 2000; ++k) {
      const double theta = kPi * k / 2000.0;
      const double v = loss::ArcTarget(std::cos(theta), m);
      CHECK(v < prev);
      CHECK(prev - v < 0.01);  // no jump at the switch point
      prev = v;
    }
  }
}

TEST_CASE("cosface target logit") {
  CHECK(loss::CosfaceLogit(0.0, 0.2, 60.0) == doctest::Approx(-12.0).epsilon(1e-15));
  CHECK(loss::CosfaceLogit(0.37, 0.0, 60.0) == doctest::Approx(60.0 * 0.37).epsilon(1e-15));
  CHECK(loss::CosfaceLogit(0.5, 0.35, 30.0) == doctest::Approx(4.5).epsilon(1e-14));
}

TEST_CASE("cosines outside [-1, 1] are rejected") {
  CHECK_THROWS_AS(loss::ArcTarget(1.5, 0.3), NumericDomainError);
  CHECK_THROWS_AS(loss::CosfaceLogit(-1.2, 0.3, 60.0), NumericDomainError);
  CHECK(loss::ArcTarget(1.0 + 1e-13, 0.0) == 1.0);  // rounding slack is clamped
}

TEST_CASE("adaptive loss on one row matches a long-double evaluation") {
  // Group 2 carries margin 0.45; the anchor (group 0) carries 0.1.
  const std::vector<double> cos{0.31, -0.42, 0.77};
  const int label = 0;
  LossConfig cfg = AdaptiveLossConfig(LossFlavor::kArc, 60.0, 0, {0.1, 0.2, 0.45});
  const double got = loss::AdaptiveLoss(OneRow(cos, label, 2), cfg).loss;

  long double logits[3];
  for (int i = 0; i < 3; ++i) logits[i] = 60.0L * cos[i];
  logits[label] = 60.0L * std::cos(std::acos(static_cast<long double>(cos[label])) + 0.45L);
  long double mx = logits[0];
  for (long double l : logits) mx = std::max(mx, l);
  long double z = 0.0L;
  for (long double l : logits) z += std::exp(l - mx);
  const long double expected = -(logits[label] - mx - std::log(z));
  CHECK(std::abs(got - static_cast<double>(expected)) < 1e-12);

  // The same row under the anchor group uses the base margin.
  const double anchor = loss::AdaptiveLoss(OneRow(cos, label, 0), cfg).loss;
  LossConfig arc = FixedLossConfig(LossFlavor::kArc, 60.0, 0.1);
  CHECK(anchor == doctest::Approx(loss::MarginLoss(OneRow(cos, label, 0), arc).loss).epsilon(1e-14));
}

TEST_CASE("plain softmax gradient is p - onehot") {
  LossConfig cfg;
  cfg.kind = LossKind::kSoftmax;
  const loss::LossValue v = loss::MarginLoss(OneRow({2.0, -1.0}, 1, 0), cfg);
  const double p0 = std::exp(2.0) / (std::exp(2.0) + std::exp(-1.0));
  CHECK(v.loss == doctest::Approx(-std::log(1.0 - p0)).epsilon(1e-14));
  CHECK(v.d_cosines(0, 0) == doctest::Approx(p0).epsilon(1e-14));
  CHECK(v.d_cosines(0, 1) == doctest::Approx(-p0).epsilon(1e-13));
}

TEST_CASE("non-target cosines are pushed down, the target up") {
  for (LossFlavor f : {LossFlavor::kSoft, LossFlavor::kCos, LossFlavor::kArc}) {
    const loss::LossValue v =
        loss::MarginLoss(OneRow({0.2, 0.1, -0.3, 0.05}, 2, 0), FixedLossConfig(f, 60.0, 0.2));
    CHECK(v.d_cosines(0, 2) < 0.0);
    for (int i : {0, 1, 3}) CHECK(v.d_cosines(0, i) > 0.0);
  }
}

TEST_CASE("adaptive loss needs a margin for every non-anchor group") {
  LossConfig cfg = AdaptiveLossConfig(LossFlavor::kCos, 60.0, 0, {0.2, 0.3});
  CHECK_NOTHROW(loss::AdaptiveLoss(OneRow({0.1, 0.2}, 0, 1), cfg));
  CHECK_THROWS_AS(loss::AdaptiveLoss(OneRow({0.1, 0.2}, 0, 3), cfg), ConfigError);
  cfg.group_margins[1] = -0.1;
  CHECK_THROWS_AS(loss::AdaptiveLoss(OneRow({0.1, 0.2}, 0, 1), cfg), ConfigError);
}

TEST_CASE("zero-norm features or weight columns are numeric-domain errors") {
  const LossConfig cfg = FixedLossConfig(LossFlavor::kArc, 60.0, 0.3);
  Matrix features = Matrix::Random(2, 3);
  Matrix weights = Matrix::Random(3, 4);
  CHECK_NOTHROW(loss::ComputeLossGradients(features, weights, {0, 1}, {0, 0}, cfg));
  Matrix w0 = weights;
  w0.col(2).setZero();
  CHECK_THROWS_AS(loss::ComputeLossGradients(features, w0, {0, 1}, {0, 0}, cfg), NumericDomainError);
  Matrix f0 = features;
  f0.row(1).setZero();
  CHECK_THROWS_AS(loss::ComputeLossGradients(f0, weights, {0, 1}, {0, 0}, cfg), NumericDomainError);
}

TEST_CASE("loss kinds have stable names") {
  for (LossKind k : {LossKind::kSoftmax, LossKind::kNormSoftmax, LossKind::kCosface,
                     LossKind::kArcface, LossKind::kAdaptiveArc, LossKind::kAdaptiveCos}) {
    CHECK(loss::ParseLossKind(loss::LossKindName(k)) == k);
  }
}

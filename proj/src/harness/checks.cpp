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

#include "harness/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "core/bias_metrics.hpp"
#include "core/common.hpp"
#include "core/embedding_model.hpp"
#include "core/error.hpp"
#include "core/flavor.hpp"
#include "core/grouped_data.hpp"
#include "core/margin_loss.hpp"
#include "core/offline_sampler.hpp"

namespace rlrbn::harness {

namespace {

constexpr double kFdStep = 1e-5;

std::string Fmt(const char* fmt, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

// ||a - b|| / max(||a||, ||b||), the usual gradient-check ratio.
double RelErr(const Matrix& analytic, const Matrix& numeric) {
  const double scale = std::max({analytic.norm(), numeric.norm(), 1e-300});
  return (analytic - numeric).norm() / scale;
}

template <typename F>
Matrix NumericGradient(Matrix& x, F&& f) {
  Matrix g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double keep = x(i, j);
      x(i, j) = keep + kFdStep;
      const double up = f();
      x(i, j) = keep - kFdStep;
      const double down = f();
      x(i, j) = keep;
      g(i, j) = (up - down) / (2.0 * kFdStep);
    }
  }
  return g;
}

Matrix Uniform(Eigen::Index r, Eigen::Index c, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

Matrix Normal(Eigen::Index r, Eigen::Index c, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

std::vector<int> RandomInts(int n, int hi, Rng& rng) {
  std::uniform_int_distribution<int> d(0, hi - 1);
  std::vector<int> v(n);
  for (int& x : v) x = d(rng);
  return v;
}

// Cosine batch whose target entries stay clear of the arc extension kink.
loss::LogitBatch RandomBatch(int n, int classes, int groups, Rng& rng) {
  loss::LogitBatch b;
  b.cosines = Uniform(n, classes, -0.9, 0.9, rng);
  b.labels = RandomInts(n, classes, rng);
  b.groups = RandomInts(n, groups, rng);
  std::uniform_real_distribution<double> target(-0.5, 0.9);
  for (int j = 0; j < n; ++j) b.cosines(j, b.labels[j]) = target(rng);
  return b;
}

// Direct evaluation of the margin softmax loss from angles, in long double.
double DirectMarginLoss(const loss::LogitBatch& b, double scale, double margin, bool angular) {
  long double total = 0.0L;
  for (Eigen::Index j = 0; j < b.cosines.rows(); ++j) {
    const int y = b.labels[j];
    std::vector<long double> logits;
    for (Eigen::Index i = 0; i < b.cosines.cols(); ++i) {
      const long double c = b.cosines(j, i);
      if (i != y) {
        logits.push_back(scale * c);
      } else if (angular) {
        logits.push_back(scale * std::cos(std::acos(c) + static_cast<long double>(margin)));
      } else {
        logits.push_back(scale * (c - margin));
      }
    }
    const long double top = *std::max_element(logits.begin(), logits.end());
    long double z = 0.0L;
    for (long double l : logits) z += std::exp(l - top);
    total += top + std::log(z) - logits[y];
  }
  return static_cast<double>(total / static_cast<long double>(b.cosines.rows()));
}

data::DatasetSpec TinySpec(std::vector<int> identities, int spi, int d_in, std::uint64_t seed) {
  data::DatasetSpec spec;
  spec.n_groups = static_cast<int>(identities.size());
  spec.identities_per_group = std::move(identities);
  spec.samples_per_identity = spi;
  spec.d_in = d_in;
  spec.group_concentration.assign(spec.n_groups, 80.0);
  spec.group_concentration[0] = 100.0;
  spec.group_center_spread.assign(spec.n_groups, 0.8);
  spec.group_center_spread[0] = 1.0;
  spec.seed = seed;
  return spec;
}

struct TinySetup {
  data::GroupedDataset train;
  data::GroupedDataset val;
  model::Model warmed;
  model::OptimizerConfig opt;
};

TinySetup MakeTinySetup(std::uint64_t seed) {
  TinySetup t;
  const data::GroupedDataset all = data::GenerateSynthetic(TinySpec({12, 9, 9, 9}, 6, 8, seed));
  auto [train, val] = data::SplitTrainVal(all, 4, seed + 1);
  t.train = std::move(train);
  t.val = std::move(val);
  t.opt.learning_rate = 0.02;
  t.opt.batch_size = 32;
  t.opt.seed = seed + 2;
  t.warmed = model::InitModel(t.train.d_in(), {16}, 8, t.train.n_identities(), seed + 3);
  model::TrainEpochs(t.warmed, t.train, FixedLossConfig(LossFlavor::kSoft, 60.0, 0.0), t.opt, 2);
  return t;
}

sampler::TwoPassResult RunTinySampler(const TinySetup& t, std::uint64_t seed) {
  sampler::SamplerConfig sc;
  sc.seed = seed;
  sc.max_states_per_group = 64;
  return sampler::CollectTwoPass(t.train, t.val, t.warmed, FlavorStateSpace(LossFlavor::kSoft, 3),
                                 3, sc, t.opt);
}

std::string LogText(const std::vector<sampler::TransitionRecord>& records) {
  std::ostringstream out;
  sampler::WriteTransitionLog(records, out);
  return out.str();
}

double TotalReward(const metrics::Skew& s) { return -(s.inter + s.intra); }

}  // namespace

CheckResult CheckFairnessRows() {
  struct Row {
    std::vector<double> acc;
    double std;
    double ser;
  };
  const std::vector<Row> rows{{{89.67, 87.97, 84.68, 84.17}, 2.64, 1.53},
                              {{89.88, 88.52, 85.13, 83.42}, 2.98, 1.64},
                              {{90.43, 88.32, 84.75, 83.32}, 3.26, 1.74},
                              {{90.67, 87.77, 84.37, 82.97}, 3.46, 1.83}};
  CheckResult r{"fairness metrics on published rows", true, ""};
  double worst = 0.0;
  for (const Row& row : rows) {
    std::vector<double> frac;
    for (double a : row.acc) frac.push_back(a / 100.0);
    const metrics::StdSer s = metrics::ComputeStdSer(frac);
    const double dev = std::max(std::abs(s.std - row.std), std::abs(s.ser - row.ser));
    worst = std::max(worst, dev);
    r.detail += Fmt("%.4f/%.4f ", s.std, s.ser);
  }
  r.passed = worst <= 0.01;
  r.detail += Fmt("max deviation %.4f (tol 0.01)", worst);
  return r;
}

CheckResult CheckLossReductions(std::uint64_t seed, int n_batches) {
  Rng rng = MakeRng(seed, {0x6c6f7373});
  std::uniform_real_distribution<double> margin_dist(0.1, 0.6);
  double worst_uniform = 0.0;
  double worst_zero = 0.0;
  double worst_direct = 0.0;
  for (int b = 0; b < n_batches; ++b) {
    const loss::LogitBatch batch = RandomBatch(16, 10, 4, rng);
    const double m = margin_dist(rng);
    const double scale = 60.0;

    const double arc = loss::MarginLoss(batch, FixedLossConfig(LossFlavor::kArc, scale, m)).loss;
    const double cos = loss::MarginLoss(batch, FixedLossConfig(LossFlavor::kCos, scale, m)).loss;
    const std::vector<double> uniform(4, m);
    const double ad_arc =
        loss::AdaptiveLoss(batch, AdaptiveLossConfig(LossFlavor::kArc, scale, 0, uniform)).loss;
    const double ad_cos =
        loss::AdaptiveLoss(batch, AdaptiveLossConfig(LossFlavor::kCos, scale, 0, uniform)).loss;
    worst_uniform = std::max({worst_uniform, std::abs(ad_arc - arc), std::abs(ad_cos - cos)});

    const double norm = loss::MarginLoss(batch, FixedLossConfig(LossFlavor::kSoft, scale, 0.0)).loss;
    const std::vector<double> zeros(4, 0.0);
    const double z_arc =
        loss::AdaptiveLoss(batch, AdaptiveLossConfig(LossFlavor::kArc, scale, 0, zeros)).loss;
    const double z_cos =
        loss::AdaptiveLoss(batch, AdaptiveLossConfig(LossFlavor::kCos, scale, 0, zeros)).loss;
    worst_zero = std::max({worst_zero, std::abs(z_arc - norm), std::abs(z_cos - norm)});

    worst_direct = std::max({worst_direct, std::abs(arc - DirectMarginLoss(batch, scale, m, true)),
                             std::abs(cos - DirectMarginLoss(batch, scale, m, false))});
  }
  CheckResult r{"loss reduction identities", false, ""};
  r.passed = worst_uniform <= 1e-12 && worst_zero <= 1e-12 && worst_direct <= 1e-12;
  r.detail = Fmt("uniform %.2e, zero %.2e, direct formula %.2e (tol 1e-12)", worst_uniform,
                 worst_zero, worst_direct);
  return r;
}

CheckResult CheckGradients(std::uint64_t seed) {
  Rng rng = MakeRng(seed, {0x67726164});
  double worst = 0.0;
  std::string worst_name;
  auto note = [&](const std::string& name, double err) {
    if (err > worst) {
      worst = err;
      worst_name = name;
    }
  };
  const std::vector<double> group_margins{0.3, 0.4, 0.5, 0.6};
  struct Kind {
    const char* name;
    loss::LossConfig cfg;
  };
  loss::LossConfig softmax;
  softmax.kind = loss::LossKind::kSoftmax;
  const std::vector<Kind> kinds{
      {"softmax", softmax},
      {"norm-softmax", FixedLossConfig(LossFlavor::kSoft, 60.0, 0.0)},
      {"cosface", FixedLossConfig(LossFlavor::kCos, 60.0, 0.35)},
      {"arcface", FixedLossConfig(LossFlavor::kArc, 60.0, 0.5)},
      {"adaptive-arc", AdaptiveLossConfig(LossFlavor::kArc, 60.0, 0, group_margins)},
      {"adaptive-cos", AdaptiveLossConfig(LossFlavor::kCos, 60.0, 0, group_margins)},
      {"arcface-s8", FixedLossConfig(LossFlavor::kArc, 8.0, 0.5)},
  };

  // Loss with respect to cosines.
  for (const Kind& k : kinds) {
    loss::LogitBatch batch = RandomBatch(6, 5, 4, rng);
    const Matrix analytic = loss::MarginLoss(batch, k.cfg).d_cosines;
    const Matrix numeric =
        NumericGradient(batch.cosines, [&] { return loss::MarginLoss(batch, k.cfg).loss; });
    note(std::string(k.name) + " d/dcos", RelErr(analytic, numeric));
  }

  // Loss with respect to raw features and identity weights.
  for (const Kind& k : kinds) {
    const int n = 6, d = 5, classes = 7;
    Matrix w = Normal(d, classes, rng);
    const std::vector<int> labels = RandomInts(n, classes, rng);
    const std::vector<int> groups = RandomInts(n, 4, rng);
    Matrix x = Normal(n, d, rng) * 0.5;
    for (int j = 0; j < n; ++j) x.row(j) += w.col(labels[j]).transpose();
    const loss::LossGradients g = loss::ComputeLossGradients(x, w, labels, groups, k.cfg);
    auto f = [&] { return loss::ComputeLossGradients(x, w, labels, groups, k.cfg).loss; };
    note(std::string(k.name) + " d/dfeatures", RelErr(g.d_features, NumericGradient(x, f)));
    note(std::string(k.name) + " d/dweights", RelErr(g.d_weights, NumericGradient(w, f)));
  }

  // Encoder and identity weights through the full model.
  for (const Kind& k : kinds) {
    model::ModelParams p = model::InitModel(5, {7, 6}, 4, 6, seed + 11).params;
    for (model::DenseLayer& layer : p.encoder) layer.bias = 0.5 * Normal(layer.bias.size(), 1, rng);
    const Matrix inputs = Normal(8, 5, rng);
    const std::vector<int> labels = RandomInts(8, 6, rng);
    const std::vector<int> groups = RandomInts(8, 4, rng);
    const model::ParamGradients g = model::ComputeGradients(p, inputs, labels, groups, k.cfg);
    auto f = [&] { return model::ComputeGradients(p, inputs, labels, groups, k.cfg).loss; };
    for (std::size_t l = 0; l < p.encoder.size(); ++l) {
      note(std::string(k.name) + " encoder W" + std::to_string(l),
           RelErr(g.encoder[l].weight, NumericGradient(p.encoder[l].weight, f)));
      Matrix bias = p.encoder[l].bias;
      Matrix nb = NumericGradient(bias, [&] {
        p.encoder[l].bias = bias;
        return f();
      });
      p.encoder[l].bias = bias;
      note(std::string(k.name) + " encoder b" + std::to_string(l), RelErr(g.encoder[l].bias, nb));
    }
    note(std::string(k.name) + " identity W",
         RelErr(g.identity_weights, NumericGradient(p.identity_weights, f)));
  }

  // Q-network TD loss with fixed targets.
  {
    qlearn::QNetwork q(5, {10, 10}, seed + 17);
    const Matrix inputs = Uniform(16, 5, 0.0, 1.0, rng);
    const std::vector<int> actions = RandomInts(16, 3, rng);
    std::vector<double> targets(16);
    std::uniform_real_distribution<double> t(-1.0, 1.0);
    for (double& v : targets) v = t(rng);
    std::vector<model::DenseLayer> grad;
    q.TdLossAndGradient(inputs, actions, targets, &grad);
    auto f = [&] { return q.TdLossAndGradient(inputs, actions, targets, nullptr); };
    for (std::size_t l = 0; l < q.layers().size(); ++l) {
      note("q-network W" + std::to_string(l),
           RelErr(grad[l].weight, NumericGradient(q.layers()[l].weight, f)));
      Matrix bias = q.layers()[l].bias;
      Matrix nb = NumericGradient(bias, [&] {
        q.layers()[l].bias = bias;
        return f();
      });
      q.layers()[l].bias = bias;
      note("q-network b" + std::to_string(l), RelErr(grad[l].bias, nb));
    }
  }

  CheckResult r{"gradients vs finite differences", worst <= 1e-4, ""};
  r.detail = Fmt("worst relative error %.2e", worst) + " (" + worst_name + ", tol 1e-4)";
  return r;
}

CheckResult CheckMetricOracle(std::uint64_t seed) {
  const data::GroupedDataset ds = data::GenerateSynthetic(TinySpec({8, 8, 7, 7}, 5, 6, seed));
  Rng rng = MakeRng(seed, {0x6d657472});
  const std::vector<Matrix> embeddings{
      Normal(static_cast<Eigen::Index>(ds.samples().size()), 5, rng),
      model::EmbedBatch(model::InitModel(6, {8}, 5, ds.n_identities(), seed + 5).params,
                        model::FeatureMatrix(ds))};

  double worst = 0.0;
  int argmax_mismatch = 0;
  for (const Matrix& emb : embeddings) {
    // Plain loops over std::vector, sharing nothing with the library.
    const int n_ids = ds.n_identities();
    const int d = static_cast<int>(emb.cols());
    auto row = [&](int r) {
      std::vector<double> v(d);
      for (int k = 0; k < d; ++k) v[k] = emb(r, k);
      return v;
    };
    auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
      double ab = 0, aa = 0, bb = 0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        ab += a[k] * b[k];
        aa += a[k] * a[k];
        bb += b[k] * b[k];
      }
      return ab / (std::sqrt(aa) * std::sqrt(bb));
    };
    auto degrees = [](double c) { return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / kPi; };

    std::vector<std::vector<double>> center(n_ids, std::vector<double>(d, 0.0));
    std::vector<int> count(n_ids, 0);
    for (std::size_t s = 0; s < ds.samples().size(); ++s) {
      const int id = ds.samples()[s].identity_id;
      const std::vector<double> v = row(static_cast<int>(s));
      for (int k = 0; k < d; ++k) center[id][k] += v[k];
      ++count[id];
    }
    for (int id = 0; id < n_ids; ++id)
      for (int k = 0; k < d; ++k) center[id][k] /= count[id];

    std::vector<metrics::GroupGeometry> oracle(ds.n_groups());
    for (int g = 0; g < ds.n_groups(); ++g) {
      std::vector<int> ids;
      for (int id = 0; id < n_ids; ++id)
        if (ds.group_of_identity(id) == g) ids.push_back(id);
      double ti = 0, di = 0, tx = 0, dx = 0;
      for (int id : ids) {
        double a = 0, c = 0;
        int n = 0;
        for (std::size_t s = 0; s < ds.samples().size(); ++s) {
          if (ds.samples()[s].identity_id != id) continue;
          const double cs = cosine(row(static_cast<int>(s)), center[id]);
          a += degrees(cs);
          c += cs;
          ++n;
        }
        ti += a / n;
        di += c / n;
        int by_cos = -1, by_angle = -1;
        double best_cos = -2.0, best_angle = 1e9;
        for (int k : ids) {
          if (k == id) continue;
          const double cs = cosine(center[id], center[k]);
          if (cs > best_cos) {
            best_cos = cs;
            by_cos = k;
          }
          if (degrees(cs) < best_angle) {
            best_angle = degrees(cs);
            by_angle = k;
          }
        }
        argmax_mismatch += by_cos != by_angle;
        tx += best_angle;
        dx += best_cos;
      }
      const double m = static_cast<double>(ids.size());
      oracle[g] = {g, ti / m, tx / m, di / m, dx / m, static_cast<int>(ids.size())};
    }

    const metrics::EmbeddedSet set(ds, emb);
    for (int g = 0; g < ds.n_groups(); ++g) {
      const metrics::GroupGeometry got = set.Geometry(g);
      worst = std::max({worst, std::abs(got.theta_intra - oracle[g].theta_intra),
                        std::abs(got.theta_inter - oracle[g].theta_inter),
                        std::abs(got.d_intra - oracle[g].d_intra),
                        std::abs(got.d_inter - oracle[g].d_inter)});
      for (int anchor = 0; anchor < ds.n_groups(); ++anchor) {
        const metrics::Skew s = set.SkewAgainst(g, anchor);
        worst = std::max(
            {worst, std::abs(s.inter - std::abs(oracle[g].d_inter - oracle[anchor].d_inter)),
             std::abs(s.intra - std::abs(oracle[g].d_intra - oracle[anchor].d_intra))});
      }
    }
  }
  CheckResult r{"metrics vs brute force", worst <= 1e-12 && argmax_mismatch == 0, ""};
  r.detail = Fmt("max deviation %.2e (tol 1e-12), nearest-center disagreements %.0f", worst,
                 argmax_mismatch);
  return r;
}

std::vector<qlearn::Transition> RandomFiniteMdp(const mdp::StateSpace& space, int visits,
                                                double reward_noise, std::uint64_t seed) {
  if (visits < 1) throw ConfigError("visits must be positive");
  Rng rng = MakeRng(seed, {0x6d6470});
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> p(0.0, 1.0);
  const int len = space.EncodingLength();
  std::vector<std::vector<double>> w(mdp::kNumActions, std::vector<double>(len + 1));
  for (auto& row : w)
    for (double& x : row) x = u(rng);

  std::vector<qlearn::Transition> out;
  for (const mdp::MarginState& s : space.AllStates()) {
    const std::vector<double> x = mdp::EncodeState(s, space);
    for (mdp::MarginAction a : mdp::kAllActions) {
      const std::vector<double>& wa = w[static_cast<int>(a)];
      double mean = wa[len];
      for (int k = 0; k < len; ++k) mean += wa[k] * x[k];
      std::vector<double> weights(space.n_bias_bins());
      for (double& v : weights) v = p(rng);
      std::discrete_distribution<int> next_bin(weights.begin(), weights.end());
      std::vector<double> noise(visits);
      double noise_mean = 0.0;
      for (double& v : noise) {
        v = reward_noise * u(rng);
        noise_mean += v / visits;
      }
      for (int k = 0; k < visits; ++k) {
        qlearn::Transition t;
        t.state = s;
        t.action = a;
        t.reward = mean + noise[k] - noise_mean;
        t.next_state = {s.group, mdp::ApplyAction(s, a, space), next_bin(rng)};
        out.push_back(t);
      }
    }
  }
  return out;
}

CheckResult CheckQLearningOracle(std::uint64_t seed, int n_mdps) {
  mdp::StateSpace space = FlavorStateSpace(LossFlavor::kSoft, 3);
  space.bias_edges = {0.1, 0.2, 0.3};  // 3 groups x 4 margins x 4 bins = 48 states
  int worst_agree = space.n_states();
  double worst_mean_err = 0.0;
  bool all_pass = true;
  for (int k = 0; k < n_mdps; ++k) {
    const std::uint64_t mdp_seed = seed * 1000 + k;
    const std::vector<qlearn::Transition> tr = RandomFiniteMdp(space, 3, 0.1, mdp_seed);
    qlearn::AgentConfig ac;
    ac.learning_rate = 3e-4;
    ac.training_iterations = 100000;
    ac.seed = mdp_seed;
    ac.discount = 0.5;
    const qlearn::QNetwork q = qlearn::TrainDqn(tr, space, ac);
    const qlearn::QTable table = qlearn::TabularValueIteration(tr, space, ac.discount);
    int agree = 0;
    for (int i = 0; i < space.n_states(); ++i) {
      agree += qlearn::GreedyAction(q, space.Unflatten(i), space) == table.Greedy(i) ? 1 : 0;
    }
    worst_agree = std::min(worst_agree, agree);
    all_pass = all_pass && agree >= 0.95 * space.n_states();

    // The fit to noisy rewards jitters in proportion to the step size, so the
    // regression case trains longer with a smaller rate and a larger batch.
    ac.discount = 0.0;
    ac.learning_rate = 1e-4;
    ac.training_iterations = 200000;
    ac.batch_size = 128;
    const qlearn::QNetwork q0 = qlearn::TrainDqn(tr, space, ac);
    std::map<std::pair<int, int>, std::pair<double, int>> sums;
    for (const qlearn::Transition& t : tr) {
      auto& e = sums[{space.Flatten(t.state), static_cast<int>(t.action)}];
      e.first += t.reward;
      e.second += 1;
    }
    for (const auto& [key, e] : sums) {
      const qlearn::QValues v = q0.Forward(mdp::EncodeState(space.Unflatten(key.first), space));
      worst_mean_err = std::max(worst_mean_err, std::abs(v[key.second] - e.first / e.second));
    }
  }
  all_pass = all_pass && worst_mean_err <= 1e-2;
  CheckResult r{"q-learning vs tabular value iteration", all_pass, ""};
  r.detail = Fmt("%.0f mdps, worst greedy agreement %.0f/%.0f states (>= 95%%), ", n_mdps,
                 worst_agree, space.n_states()) +
             Fmt("gamma=0 max |Q - mean reward| %.2e (tol 1e-2)", worst_mean_err);
  return r;
}

CheckResult CheckRewardTelescoping(std::uint64_t seed) {
  double worst = 0.0;
  int trajectories = 0;

  // Epoch-by-epoch training trajectory, one per non-anchor group.
  TinySetup t = MakeTinySetup(seed);
  {
    model::Model m = t.warmed;
    const loss::LossConfig cfg = FixedLossConfig(LossFlavor::kSoft, 60.0, 0.0);
    std::vector<std::vector<metrics::Skew>> path(t.train.n_groups());
    for (int epoch = 0; epoch <= 6; ++epoch) {
      if (epoch > 0) model::TrainEpochs(m, t.train, cfg, t.opt, 1);
      const metrics::EmbeddedSet set = metrics::EmbeddedSet::FromModel(m.params, t.val);
      for (int g = 1; g < t.train.n_groups(); ++g) path[g].push_back(set.SkewAgainst(g, 0));
    }
    for (int g = 1; g < t.train.n_groups(); ++g) {
      double sum = 0.0;
      for (std::size_t k = 1; k < path[g].size(); ++k) sum += metrics::Reward(path[g][k - 1], path[g][k]);
      worst = std::max(worst, std::abs(sum - (TotalReward(path[g].back()) - TotalReward(path[g][0]))));
      ++trajectories;
    }
  }

  // Paths through the sampler log: a record continues another when it
  // starts from the state and skew the other one ended in.
  const sampler::TwoPassResult res = RunTinySampler(t, seed + 7);
  const auto& recs = res.sample.records;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    double sum = 0.0;
    std::size_t cur = i;
    std::set<std::size_t> seen;
    while (true) {
      seen.insert(cur);
      sum += recs[cur].transition.reward;
      std::size_t parent = recs.size();
      for (std::size_t k = 0; k < recs.size(); ++k) {
        if (seen.count(k)) continue;
        const auto& p = recs[k];
        if (p.transition.next_state == recs[cur].transition.state && p.after.inter == recs[cur].before.inter &&
            p.after.intra == recs[cur].before.intra) {
          parent = k;
          break;
        }
      }
      if (parent == recs.size()) break;
      cur = parent;
    }
    worst = std::max(worst, std::abs(sum - (TotalReward(recs[i].after) - TotalReward(recs[cur].before))));
    ++trajectories;
  }
  CheckResult r{"reward telescoping", worst <= 1e-12 && trajectories > 0, ""};
  r.detail = Fmt("%.0f trajectories, max |sum r - (R_T - R_0)| %.2e (tol 1e-12)", trajectories, worst);
  return r;
}

CheckResult CheckSamplerDiscipline(std::uint64_t seed) {
  const TinySetup t = MakeTinySetup(seed);
  const sampler::TwoPassResult a = RunTinySampler(t, seed + 7);
  const sampler::TwoPassResult b = RunTinySampler(t, seed + 7);
  const bool reproducible = LogText(a.sample.records) == LogText(b.sample.records) &&
                            LogText(a.calibration.records) == LogText(b.calibration.records) &&
                            a.space == b.space;
  int duplicates = 0;
  int bad_margin = 0;
  int bad_reward = 0;
  int bad_count = 0;
  for (const auto* pass : {&a.calibration, &a.sample}) {
    const mdp::StateSpace space = pass == &a.sample ? a.space : [&] {
      mdp::StateSpace s = a.space;
      s.bias_edges.clear();
      s.bias_upper.reset();
      return s;
    }();
    std::set<std::tuple<int, int, int, int>> keys;
    std::vector<int> per_group(space.n_groups_nonanchor, 0);
    for (const sampler::TransitionRecord& r : pass->records) {
      const qlearn::Transition& tr = r.transition;
      duplicates += keys.insert({tr.state.group, tr.state.margin_index, tr.state.bias_index,
                                 static_cast<int>(tr.action)})
                            .second
                        ? 0
                        : 1;
      bad_margin += tr.next_state.margin_index == mdp::ApplyAction(tr.state, tr.action, space) &&
                            tr.next_state.group == tr.state.group
                        ? 0
                        : 1;
      bad_reward += std::abs(tr.reward - metrics::Reward(r.before, r.after)) <= 1e-12 ? 0 : 1;
      ++per_group[tr.state.group];
    }
    for (int g = 0; g < space.n_groups_nonanchor; ++g) {
      bad_count += per_group[g] <= 3 * pass->visited_per_group[g] ? 0 : 1;
    }
  }
  CheckResult r{"offline sampler discipline", false, ""};
  r.passed = reproducible && duplicates == 0 && bad_margin == 0 && bad_reward == 0 &&
             bad_count == 0 && !a.sample.records.empty();
  r.detail = std::to_string(a.sample.records.size()) + " transitions, duplicates " +
             std::to_string(duplicates) + ", margin violations " + std::to_string(bad_margin) +
             ", reward mismatches " + std::to_string(bad_reward) + ", count overflows " +
             std::to_string(bad_count) + ", reproducible " + (reproducible ? "yes" : "no");
  return r;
}

std::vector<CheckResult> RunSelfTest(std::uint64_t seed) {
  return {CheckFairnessRows(),        CheckLossReductions(seed),    CheckGradients(seed),
          CheckMetricOracle(seed),    CheckQLearningOracle(seed),   CheckRewardTelescoping(seed),
          CheckSamplerDiscipline(seed)};
}

}  // namespace rlrbn::harness

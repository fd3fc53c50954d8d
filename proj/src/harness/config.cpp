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

#include "harness/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "core/common.hpp"
#include "core/error.hpp"

namespace rlrbn::harness {

using nlohmann::json;

namespace {

// Reads the keys of one JSON object into typed fields, rejecting keys that
// no field claimed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("'" + path_ + "' must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : j_.items()) {
      if (!claimed_.count(key)) throw ConfigError("unknown config key '" + Qualify(key) + "'");
    }
  }

  template <typename T>
  void Get(const char* key, T& out) {
    claimed_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("bad value for '" + Qualify(key) + "': " + e.what());
    }
  }

  template <typename T>
  void GetOptional(const char* key, std::optional<T>& out) {
    claimed_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    T v{};
    Get(key, v);
    out = v;
  }

  bool Has(const char* key) const { return j_.contains(key); }
  Section Sub(const char* key) {
    claimed_.insert(key);
    static const json kEmpty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : kEmpty, Qualify(key));
  }
  const json& At(const char* key) {
    claimed_.insert(key);
    return j_.at(key);
  }

 private:
  std::string Qualify(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  const json& j_;
  std::string path_;
  std::set<std::string> claimed_;
};

}  // namespace

std::string DataConfig::GroupName(int g) const {
  if (g < static_cast<int>(group_names.size())) return group_names[g];
  return "G" + std::to_string(g);
}

data::DatasetSpec DataConfig::Spec(std::uint64_t seed) const {
  data::DatasetSpec spec;
  spec.n_groups = n_groups();
  for (int n : train_identities_per_group) {
    spec.identities_per_group.push_back(n + val_identities_per_group + test_identities_per_group);
  }
  spec.samples_per_identity = samples_per_identity;
  spec.d_in = d_in;
  spec.group_concentration = group_concentration;
  spec.group_center_spread = group_center_spread;
  spec.seed = seed;
  return spec;
}

void ExperimentConfig::Validate() const {
  const int g = data.n_groups();
  if (g < 2) throw ConfigError("need at least two groups");
  data.Spec(0).Validate();
  for (int n : data.train_identities_per_group) {
    if (n < 2) throw ConfigError("every group needs at least 2 training identities");
  }
  if (data.val_identities_per_group < 2 || data.test_identities_per_group < 2) {
    throw ConfigError("validation and test sets need at least 2 identities per group");
  }
  if (data.pairs_per_group < 2 || data.pairs_per_group % 2 != 0) {
    throw ConfigError("pairs_per_group must be a positive even number");
  }
  if (!data.group_names.empty() && static_cast<int>(data.group_names.size()) != g) {
    throw ConfigError("group_names must have one entry per group");
  }
  if (loss.anchor_group < 0 || loss.anchor_group >= g) throw ConfigError("anchor_group out of range");
  if (!(loss.scale > 0.0)) throw ConfigError("scale must be positive");
  if (model.embedding_dim < 1) throw ConfigError("embedding_dim must be positive");
  for (int h : model.hidden)
    if (h < 1) throw ConfigError("hidden widths must be positive");
  optimizer.Validate();
  agent.Validate();
  if (sampler.warmup_epochs < 0) throw ConfigError("warmup_epochs must be non-negative");
  if (sampler.n_bias_bins < 1) throw ConfigError("n_bias_bins must be at least 1");
  sampler::SamplerConfig sc;
  sc.epochs_per_action = sampler.epochs_per_action;
  sc.max_states_per_group = sampler.max_states_per_group;
  sc.Validate();
  if (rbn.total_epochs < 1) throw ConfigError("total_epochs must be positive");
  if (rbn.decision_interval < 1) throw ConfigError("decision_interval must be at least 1");
  for (rbn::BaselineMode m : rbn.baselines) {
    if (m == rbn::BaselineMode::kNone) throw ConfigError("baselines may list fixed or manual only");
  }
  GridSpace().Validate();
  if (seeds.empty()) throw ConfigError("seeds must be nonempty");
  if (output_dir.empty()) throw ConfigError("output_dir must be nonempty");
  for (const auto& r : sweep.ratios) {
    if (static_cast<int>(r.size()) != g) throw ConfigError("every sweep ratio needs one entry per group");
    for (double x : r)
      if (!(x > 0.0)) throw ConfigError("sweep ratios must be positive");
  }
}

mdp::StateSpace ExperimentConfig::GridSpace() const {
  mdp::StateSpace space = FlavorStateSpace(loss.flavor, data.n_groups() - 1);
  if (loss.margin_grid) {
    space.margin_grid = *loss.margin_grid;
    if (space.margin_grid.size() >= 2) space.step = space.margin_grid[1] - space.margin_grid[0];
  }
  return space;
}

json ToJson(const ExperimentConfig& c) {
  json j;
  j["data"] = {{"train_identities_per_group", c.data.train_identities_per_group},
               {"samples_per_identity", c.data.samples_per_identity},
               {"d_in", c.data.d_in},
               {"group_concentration", c.data.group_concentration},
               {"group_center_spread", c.data.group_center_spread},
               {"val_identities_per_group", c.data.val_identities_per_group},
               {"test_identities_per_group", c.data.test_identities_per_group},
               {"pairs_per_group", c.data.pairs_per_group},
               {"group_names", c.data.group_names}};
  j["loss"] = {{"flavor", FlavorName(c.loss.flavor)},
               {"scale", c.loss.scale},
               {"anchor_group", c.loss.anchor_group},
               {"margin_grid", c.loss.margin_grid ? json(*c.loss.margin_grid) : json(nullptr)},
               {"baseline_margin",
                c.loss.baseline_margin ? json(*c.loss.baseline_margin) : json(nullptr)}};
  j["model"] = {{"hidden", c.model.hidden}, {"embedding_dim", c.model.embedding_dim}};
  j["optimizer"] = {{"learning_rate", c.optimizer.learning_rate},
                    {"momentum", c.optimizer.momentum},
                    {"weight_decay", c.optimizer.weight_decay},
                    {"batch_size", c.optimizer.batch_size},
                    {"lr_decay_epochs", c.optimizer.lr_decay_epochs}};
  j["sampler"] = {{"warmup_epochs", c.sampler.warmup_epochs},
                  {"epochs_per_action", c.sampler.epochs_per_action},
                  {"max_states_per_group", c.sampler.max_states_per_group},
                  {"n_bias_bins", c.sampler.n_bias_bins}};
  j["agent"] = {{"discount", c.agent.discount},
                {"learning_rate", c.agent.learning_rate},
                {"training_iterations", c.agent.training_iterations},
                {"batch_size", c.agent.batch_size},
                {"hidden", c.agent.hidden}};
  std::vector<std::string> baselines;
  for (rbn::BaselineMode m : c.rbn.baselines) baselines.push_back(rbn::BaselineModeName(m));
  j["rbn"] = {{"total_epochs", c.rbn.total_epochs},
              {"decision_interval", c.rbn.decision_interval},
              {"baselines", baselines}};
  j["sweep"] = {{"ratios", c.sweep.ratios},
                {"total_train_identities", c.sweep.total_train_identities}};
  j["output_dir"] = c.output_dir;
  j["seeds"] = c.seeds;
  return j;
}

ExperimentConfig ConfigFromJson(const json& j) {
  ExperimentConfig c;
  {
    Section root(j, "");
    {
      Section s = root.Sub("data");
      s.Get("train_identities_per_group", c.data.train_identities_per_group);
      s.Get("samples_per_identity", c.data.samples_per_identity);
      s.Get("d_in", c.data.d_in);
      s.Get("group_concentration", c.data.group_concentration);
      s.Get("group_center_spread", c.data.group_center_spread);
      s.Get("val_identities_per_group", c.data.val_identities_per_group);
      s.Get("test_identities_per_group", c.data.test_identities_per_group);
      s.Get("pairs_per_group", c.data.pairs_per_group);
      s.Get("group_names", c.data.group_names);
    }
    {
      Section s = root.Sub("loss");
      std::string flavor = FlavorName(c.loss.flavor);
      s.Get("flavor", flavor);
      c.loss.flavor = ParseFlavor(flavor);
      s.Get("scale", c.loss.scale);
      s.Get("anchor_group", c.loss.anchor_group);
      s.GetOptional("margin_grid", c.loss.margin_grid);
      s.GetOptional("baseline_margin", c.loss.baseline_margin);
    }
    {
      Section s = root.Sub("model");
      s.Get("hidden", c.model.hidden);
      s.Get("embedding_dim", c.model.embedding_dim);
    }
    {
      Section s = root.Sub("optimizer");
      s.Get("learning_rate", c.optimizer.learning_rate);
      s.Get("momentum", c.optimizer.momentum);
      s.Get("weight_decay", c.optimizer.weight_decay);
      s.Get("batch_size", c.optimizer.batch_size);
      s.Get("lr_decay_epochs", c.optimizer.lr_decay_epochs);
    }
    {
      Section s = root.Sub("sampler");
      s.Get("warmup_epochs", c.sampler.warmup_epochs);
      s.Get("epochs_per_action", c.sampler.epochs_per_action);
      s.Get("max_states_per_group", c.sampler.max_states_per_group);
      s.Get("n_bias_bins", c.sampler.n_bias_bins);
    }
    {
      Section s = root.Sub("agent");
      s.Get("discount", c.agent.discount);
      s.Get("learning_rate", c.agent.learning_rate);
      s.Get("training_iterations", c.agent.training_iterations);
      s.Get("batch_size", c.agent.batch_size);
      s.Get("hidden", c.agent.hidden);
    }
    {
      Section s = root.Sub("rbn");
      s.Get("total_epochs", c.rbn.total_epochs);
      s.Get("decision_interval", c.rbn.decision_interval);
      if (s.Has("baselines")) {
        std::vector<std::string> names;
        s.Get("baselines", names);
        c.rbn.baselines.clear();
        for (const std::string& n : names) c.rbn.baselines.push_back(rbn::ParseBaselineMode(n));
      }
    }
    {
      Section s = root.Sub("sweep");
      s.Get("ratios", c.sweep.ratios);
      s.Get("total_train_identities", c.sweep.total_train_identities);
    }
    root.Get("output_dir", c.output_dir);
    root.Get("seeds", c.seeds);
  }
  c.Validate();
  return c;
}

void ApplyOverride(json& j, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError("empty path component in override '" + key + "'");
    if (!node->is_object()) throw ConfigError("override path '" + key + "' crosses a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

ExperimentConfig LoadConfig(const std::string& path, const std::vector<std::string>& overrides) {
  json j = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open config " + path);
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("malformed config " + path + ": " + e.what());
    }
  }
  for (const std::string& o : overrides) ApplyOverride(j, o);
  return ConfigFromJson(j);
}

std::string Fnv1aHex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t tag) {
  Rng rng = MakeRng(seed, {tag, 0x7365656473ULL});
  return rng();
}

std::vector<int> RatioIdentities(const std::vector<double>& ratio, int total) {
  const double sum = std::accumulate(ratio.begin(), ratio.end(), 0.0);
  if (!(sum > 0.0)) throw ConfigError("ratio must have a positive sum");
  std::vector<int> out;
  for (double r : ratio) out.push_back(std::max(2, static_cast<int>(std::lround(total * r / sum))));
  return out;
}

std::string RatioLabel(const std::vector<double>& ratio) {
  // Renders thirds as n/3 so labels read like 5:5/3:5/3:5/3.
  std::string out;
  for (std::size_t k = 0; k < ratio.size(); ++k) {
    if (k) out += ':';
    const double r = ratio[k];
    const double thirds = r * 3.0;
    char buf[32];
    if (std::abs(r - std::round(r)) < 1e-9) {
      std::snprintf(buf, sizeof buf, "%d", static_cast<int>(std::lround(r)));
    } else if (std::abs(thirds - std::round(thirds)) < 1e-9) {
      std::snprintf(buf, sizeof buf, "%d/3", static_cast<int>(std::lround(thirds)));
    } else {
      std::snprintf(buf, sizeof buf, "%g", r);
    }
    out += buf;
  }
  return out;
}

}  // namespace rlrbn::harness

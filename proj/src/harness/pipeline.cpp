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

#include "harness/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/bias_metrics.hpp"
#include "core/embedding_model.hpp"
#include "core/grouped_data.hpp"
#include "core/offline_sampler.hpp"
#include "core/qlearning.hpp"
#include "core/rbn_trainer.hpp"

namespace rlrbn::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "rlrbn 0.1.0";
constexpr int kManifestFormat = 1;

// Seed stream tags.
constexpr std::uint64_t kTagData = 1;
constexpr std::uint64_t kTagSplit = 2;
constexpr std::uint64_t kTagPairs = 3;
constexpr std::uint64_t kTagInit = 4;
constexpr std::uint64_t kTagSgd = 5;
constexpr std::uint64_t kTagSampler = 6;
constexpr std::uint64_t kTagAgent = 7;

void Log(const Logger& log, const std::string& line) {
  if (log) log(line);
}

std::string Join(const std::string& dir, const std::string& rel) {
  return (fs::path(dir) / rel).string();
}

void EnsureParent(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

json ReadJsonFile(const std::string& path) {
  const std::string text = ReadTextFile(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw IoError("malformed JSON in " + path);
  return j;
}

void WriteJsonFile(const std::string& path, const json& j) {
  WriteTextFile(path, j.dump(2) + "\n");
}

json RunSeedsJson(const RunSeeds& s) {
  return {{"data", s.data},   {"split", s.split},     {"pairs", s.pairs}, {"init", s.init},
          {"sgd", s.sgd},     {"sampler", s.sampler}, {"agent", s.agent}};
}

// The config minus the parts that only say where and how often to run.
json RunConfigJson(const ExperimentConfig& cfg) {
  json j = ToJson(cfg);
  j.erase("output_dir");
  j.erase("seeds");
  j.erase("sweep");
  return j;
}

// Config slice each stage depends on, besides its upstream stages.
json StageSlice(const ExperimentConfig& cfg, std::uint64_t seed, Stage stage) {
  const json c = ToJson(cfg);
  switch (stage) {
    case Stage::kGenData: {
      json d = c["data"];
      d.erase("pairs_per_group");
      d.erase("group_names");
      return {{"data", d}, {"seed", seed}, {"version", kVersion}};
    }
    case Stage::kSplit:
      return {{"val", cfg.data.val_identities_per_group},
              {"test", cfg.data.test_identities_per_group}};
    case Stage::kPairs:
      return {{"pairs_per_group", cfg.data.pairs_per_group}};
    case Stage::kWarmup:
      return {{"model", c["model"]},
              {"optimizer", c["optimizer"]},
              {"loss", c["loss"]},
              {"warmup_epochs", cfg.sampler.warmup_epochs}};
    case Stage::kSample:
      return {{"sampler", c["sampler"]}};
    case Stage::kTrainDqn:
      return {{"agent", c["agent"]}};
    case Stage::kDumpPolicy:
      return json::object();
    case Stage::kTrain:
      return {{"rbn", c["rbn"]}};
    case Stage::kEvaluate:
      return json::object();
    case Stage::kReport:
      return {{"group_names", c["data"]["group_names"]}};
  }
  throw Error(ErrorCode::kInternal, "unhandled stage");
}

std::vector<std::string> StageOutputs(const ExperimentConfig& cfg, Stage stage) {
  switch (stage) {
    case Stage::kGenData:
      return {"data/all.txt"};
    case Stage::kSplit:
      return {"data/train.txt", "data/val.txt", "data/test.txt"};
    case Stage::kPairs:
      return {"data/pairs.csv"};
    case Stage::kWarmup:
      return {"model/init.ckpt", "model/warmup.ckpt", "model/warmup_stats.json"};
    case Stage::kSample:
      return {"sample/calibration.csv", "sample/transitions.csv", "sample/space.json",
              "sample/sampler.json"};
    case Stage::kTrainDqn:
      return {"agent/qnetwork.json"};
    case Stage::kDumpPolicy:
      return {"agent/policy.json"};
    case Stage::kTrain: {
      std::vector<std::string> out{"train/rbn.ckpt", "train/margin_history.csv"};
      for (rbn::BaselineMode m : cfg.rbn.baselines) {
        out.push_back(std::string("train/baseline-") + rbn::BaselineModeName(m) + ".ckpt");
      }
      return out;
    }
    case Stage::kEvaluate: {
      std::vector<std::string> out;
      for (const std::string& id : MethodIds(cfg)) {
        out.push_back("eval/" + id + ".json");
        for (int g = 0; g < cfg.data.n_groups(); ++g) {
          out.push_back("eval/roc/" + id + "_" + cfg.data.GroupName(g) + ".csv");
        }
      }
      return out;
    }
    case Stage::kReport:
      return {"report.csv", "summary.json"};
  }
  throw Error(ErrorCode::kInternal, "unhandled stage");
}

model::OptimizerConfig SgdConfig(const ExperimentConfig& cfg, const RunSeeds& seeds) {
  model::OptimizerConfig opt = cfg.optimizer;
  opt.seed = seeds.sgd;
  return opt;
}

rbn::RBNConfig RbnConfig(const ExperimentConfig& cfg) {
  rbn::RBNConfig rc;
  rc.flavor = cfg.loss.flavor;
  rc.decision_interval = cfg.rbn.decision_interval;
  rc.total_epochs = cfg.rbn.total_epochs;
  rc.warmup_epochs = cfg.sampler.warmup_epochs;
  rc.anchor_group = cfg.loss.anchor_group;
  rc.scale = cfg.loss.scale;
  rc.baseline_margin = cfg.loss.baseline_margin;
  return rc;
}

std::string CheckpointFor(const std::string& id) {
  return id == "rbn" ? "train/rbn.ckpt" : "train/baseline-" + id + ".ckpt";
}

class Run {
 public:
  Run(const ExperimentConfig& cfg, std::uint64_t seed, std::string dir)
      : cfg_(cfg), seed_(seed), seeds_(DeriveRunSeeds(seed)), dir_(std::move(dir)) {}

  std::string P(const std::string& rel) const { return Join(dir_, rel); }

  data::GroupedDataset Dataset(const char* name) const {
    return data::LoadDataset(P(std::string("data/") + name + ".txt"));
  }

  void Execute(Stage stage) {
    for (const std::string& out : StageOutputs(cfg_, stage)) EnsureParent(P(out));
    switch (stage) {
      case Stage::kGenData: GenData(); break;
      case Stage::kSplit: Split(); break;
      case Stage::kPairs: Pairs(); break;
      case Stage::kWarmup: Warmup(); break;
      case Stage::kSample: Sample(); break;
      case Stage::kTrainDqn: TrainDqn(); break;
      case Stage::kDumpPolicy: DumpPolicy(); break;
      case Stage::kTrain: Train(); break;
      case Stage::kEvaluate: Evaluate(); break;
      case Stage::kReport: Report(); break;
    }
  }

 private:
  void GenData() {
    data::SaveDataset(data::GenerateSynthetic(cfg_.data.Spec(seeds_.data)), P("data/all.txt"));
  }

  void Split() {
    const data::GroupedDataset all = Dataset("all");
    auto [rest, test] =
        data::SplitTrainVal(all, cfg_.data.test_identities_per_group, DeriveSeed(seeds_.split, 0));
    auto [train, val] =
        data::SplitTrainVal(rest, cfg_.data.val_identities_per_group, DeriveSeed(seeds_.split, 1));
    data::SaveDataset(train, P("data/train.txt"));
    data::SaveDataset(val, P("data/val.txt"));
    data::SaveDataset(test, P("data/test.txt"));
  }

  void Pairs() {
    const data::GroupedDataset test = Dataset("test");
    data::SavePairs(data::MakeVerificationPairs(test, cfg_.data.pairs_per_group, seeds_.pairs),
                    P("data/pairs.csv"));
  }

  void Warmup() {
    const data::GroupedDataset train = Dataset("train");
    const model::Model init = model::InitModel(train.d_in(), cfg_.model.hidden,
                                               cfg_.model.embedding_dim, train.n_identities(),
                                               seeds_.init);
    model::SaveCheckpoint(init, P("model/init.ckpt"));
    const mdp::StateSpace grid = cfg_.GridSpace();
    const std::vector<double> margins(train.n_groups(), grid.margin_grid[0]);
    model::Model warmed = init;
    const model::EpochStats stats = model::TrainEpochs(
        warmed, train,
        AdaptiveLossConfig(cfg_.loss.flavor, cfg_.loss.scale, cfg_.loss.anchor_group, margins),
        SgdConfig(cfg_, seeds_), cfg_.sampler.warmup_epochs);
    model::SaveCheckpoint(warmed, P("model/warmup.ckpt"));
    WriteJsonFile(P("model/warmup_stats.json"), {{"epochs", cfg_.sampler.warmup_epochs},
                                                 {"mean_loss", stats.mean_loss},
                                                 {"margin", grid.margin_grid[0]}});
  }

  void Sample() {
    const data::GroupedDataset train = Dataset("train");
    const data::GroupedDataset val = Dataset("val");
    const model::Model warmed = model::LoadCheckpoint(P("model/warmup.ckpt"));
    sampler::SamplerConfig sc;
    sc.epochs_per_action = cfg_.sampler.epochs_per_action;
    sc.max_states_per_group = cfg_.sampler.max_states_per_group;
    sc.flavor = cfg_.loss.flavor;
    sc.scale = cfg_.loss.scale;
    sc.anchor_group = cfg_.loss.anchor_group;
    sc.seed = seeds_.sampler;
    const sampler::TwoPassResult r =
        sampler::CollectTwoPass(train, val, warmed, cfg_.GridSpace(), cfg_.sampler.n_bias_bins,
                                sc, SgdConfig(cfg_, seeds_));
    sampler::SaveTransitionLog(r.calibration.records, P("sample/calibration.csv"));
    sampler::SaveTransitionLog(r.sample.records, P("sample/transitions.csv"));
    WriteJsonFile(P("sample/space.json"), mdp::ToJson(r.space));
    const json warm = ReadJsonFile(P("model/warmup_stats.json"));
    WriteJsonFile(P("sample/sampler.json"),
                  {{"seed", seeds_.sampler},
                   {"bias_edges", r.space.bias_edges},
                   {"bias_upper", r.space.bias_upper ? json(*r.space.bias_upper) : json(nullptr)},
                   {"calibration_records", r.calibration.records.size()},
                   {"calibration_visited_per_group", r.calibration.visited_per_group},
                   {"calibration_truncated", r.calibration.truncated},
                   {"records", r.sample.records.size()},
                   {"visited_per_group", r.sample.visited_per_group},
                   {"truncated", r.sample.truncated},
                   {"warmup", warm}});
    if (r.calibration.truncated || r.sample.truncated) {
      warnings_.push_back("sampler hit max_states_per_group; the log is partial");
    }
  }

  void TrainDqn() {
    const mdp::StateSpace space = mdp::StateSpaceFromJson(ReadJsonFile(P("sample/space.json")));
    const std::vector<qlearn::Transition> transitions =
        sampler::Transitions(sampler::LoadTransitionLog(P("sample/transitions.csv")));
    qlearn::AgentConfig ac = cfg_.agent;
    ac.seed = seeds_.agent;
    const qlearn::QNetwork q = qlearn::TrainDqn(transitions, space, ac);
    WriteJsonFile(P("agent/qnetwork.json"),
                  {{"space", mdp::ToJson(space)},
                   {"network", q.ToJson()},
                   {"td_loss", qlearn::TdLoss(q, transitions, space, ac.discount)}});
  }

  void DumpPolicy() {
    const json j = ReadJsonFile(P("agent/qnetwork.json"));
    try {
      const mdp::StateSpace space = mdp::StateSpaceFromJson(j.at("space"));
      const qlearn::QNetwork q = qlearn::QNetwork::FromJson(j.at("network"));
      qlearn::SavePolicy(qlearn::DumpPolicy(q, space), P("agent/policy.json"));
    } catch (const json::exception& e) {
      throw IoError(std::string("malformed agent/qnetwork.json: ") + e.what());
    }
  }

  void Train() {
    const data::GroupedDataset train = Dataset("train");
    const data::GroupedDataset val = Dataset("val");
    const model::Model init = model::LoadCheckpoint(P("model/init.ckpt"));
    const qlearn::PolicyTable policy = qlearn::LoadPolicy(P("agent/policy.json"));
    const model::OptimizerConfig opt = SgdConfig(cfg_, seeds_);
    rbn::RBNConfig rc = RbnConfig(cfg_);

    const rbn::RbnResult res = rbn::TrainRbn(train, val, policy, rc, opt, init);
    model::SaveCheckpoint(res.model, P("train/rbn.ckpt"));
    {
      std::ofstream out(P("train/margin_history.csv"));
      if (!out) throw IoError("cannot open " + P("train/margin_history.csv") + " for writing");
      rbn::WriteMarginHistory(res.history, out);
    }
    if (res.clamped_states > 0) {
      warnings_.push_back(std::to_string(res.clamped_states) +
                          " deployment states lay above the fitted bias range");
    }
    for (rbn::BaselineMode m : cfg_.rbn.baselines) {
      rc.baseline_mode = m;
      model::SaveCheckpoint(rbn::TrainBaseline(train, rc, policy.space, opt, init),
                            P(std::string("train/baseline-") + rbn::BaselineModeName(m) + ".ckpt"));
    }
  }

  void Evaluate() {
    const data::GroupedDataset test = Dataset("test");
    const std::vector<data::VerificationPair> pairs = data::LoadPairs(test, P("data/pairs.csv"));
    for (const std::string& id : MethodIds(cfg_)) {
      const model::Model m = model::LoadCheckpoint(P(CheckpointFor(id)));
      WriteJsonFile(P("eval/" + id + ".json"), BiasReportToJson(rbn::Evaluate(m.params, pairs, test)));
      const std::vector<double> sims = metrics::PairSimilarities(m.params, pairs);
      for (int g = 0; g < test.n_groups(); ++g) {
        std::vector<double> s;
        std::vector<char> same;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
          if (pairs[i].group_id != g) continue;
          s.push_back(sims[i]);
          same.push_back(pairs[i].same_identity ? 1 : 0);
        }
        std::ostringstream out;
        WriteRoc(metrics::RocCurve(s, same), out);
        WriteTextFile(P("eval/roc/" + id + "_" + cfg_.data.GroupName(g) + ".csv"), out.str());
      }
    }
  }

  void Report() {
    const std::vector<MethodResult> results = LoadRunResults(cfg_, dir_);
    std::vector<ReportRow> rows;
    json methods = json::array();
    for (const MethodResult& r : results) {
      rows.push_back({r.label, std::to_string(seed_), r.report});
      methods.push_back({{"id", r.id}, {"label", r.label}, {"report", BiasReportToJson(r.report)}});
    }
    std::vector<std::string> names;
    for (int g = 0; g < cfg_.data.n_groups(); ++g) names.push_back(cfg_.data.GroupName(g));
    std::ostringstream table;
    WriteReportTable(rows, names, table);
    WriteTextFile(P("report.csv"), table.str());
    const qlearn::PolicyTable policy = qlearn::LoadPolicy(P("agent/policy.json"));
    WriteJsonFile(P("summary.json"), {{"seed", seed_},
                                      {"group_names", names},
                                      {"methods", methods},
                                      {"policy_up_fraction_by_bias_bin", UpFractionByBiasBin(policy)}});
  }

 public:
  std::vector<std::string> warnings_;

 private:
  const ExperimentConfig& cfg_;
  std::uint64_t seed_;
  RunSeeds seeds_;
  std::string dir_;
};

json ReadManifest(const std::string& dir) {
  const std::string path = Join(dir, "manifest.json");
  if (!fs::exists(path)) return json::object();
  json j = json::parse(ReadTextFile(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return json::object();
  return j;
}

json FreshManifest(const ExperimentConfig& cfg, std::uint64_t seed, const json& old) {
  json m;
  m["format"] = kManifestFormat;
  m["version"] = kVersion;
  m["seed"] = seed;
  m["seeds"] = RunSeedsJson(DeriveRunSeeds(seed));
  m["config"] = RunConfigJson(cfg);
  m["config_hash"] = Fnv1aHex(RunConfigJson(cfg).dump());
  m["stages"] = old.contains("stages") && old["stages"].is_object() ? old["stages"] : json::object();
  return m;
}

std::vector<std::string> StageKeys(const ExperimentConfig& cfg, std::uint64_t seed) {
  std::vector<std::string> keys;
  std::string prev;
  for (Stage s : AllStages()) {
    prev = Fnv1aHex(prev + "|" + StageName(s) + "|" + StageSlice(cfg, seed, s).dump());
    keys.push_back(prev);
  }
  return keys;
}

bool OutputsExist(const ExperimentConfig& cfg, const std::string& dir, Stage stage) {
  for (const std::string& out : StageOutputs(cfg, stage)) {
    if (!fs::exists(Join(dir, out))) return false;
  }
  return true;
}

void ExecuteRecorded(Run& run, const ExperimentConfig& cfg, const std::string& dir, json& manifest,
                     Stage stage, const std::string& key, const Logger& log) {
  manifest["stages"].erase(StageName(stage));
  WriteJsonFile(Join(dir, "manifest.json"), manifest);
  try {
    run.Execute(stage);
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  } catch (const fs::filesystem_error& e) {
    throw StageError(stage, IoError(e.what()));
  } catch (const std::exception& e) {
    throw StageError(stage, Error(ErrorCode::kInternal, e.what()));
  }
  for (const std::string& w : run.warnings_) Log(log, std::string("warning: ") + w);
  run.warnings_.clear();
  manifest["stages"][StageName(stage)] = {{"key", key}, {"outputs", StageOutputs(cfg, stage)}};
  WriteJsonFile(Join(dir, "manifest.json"), manifest);
}

}  // namespace

const std::vector<Stage>& AllStages() {
  static const std::vector<Stage> kStages{Stage::kGenData,  Stage::kSplit,    Stage::kPairs,
                                          Stage::kWarmup,   Stage::kSample,   Stage::kTrainDqn,
                                          Stage::kDumpPolicy, Stage::kTrain,  Stage::kEvaluate,
                                          Stage::kReport};
  return kStages;
}

const char* StageName(Stage stage) {
  switch (stage) {
    case Stage::kGenData: return "gen-data";
    case Stage::kSplit: return "split";
    case Stage::kPairs: return "pairs";
    case Stage::kWarmup: return "warmup";
    case Stage::kSample: return "sample";
    case Stage::kTrainDqn: return "train-dqn";
    case Stage::kDumpPolicy: return "dump-policy";
    case Stage::kTrain: return "train";
    case Stage::kEvaluate: return "evaluate";
    case Stage::kReport: return "report";
  }
  return "unknown";
}

Stage ParseStage(const std::string& name) {
  for (Stage s : AllStages()) {
    if (name == StageName(s)) return s;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown stage '" + name + "'");
}

RunSeeds DeriveRunSeeds(std::uint64_t seed) {
  RunSeeds s;
  s.data = DeriveSeed(seed, kTagData);
  s.split = DeriveSeed(seed, kTagSplit);
  s.pairs = DeriveSeed(seed, kTagPairs);
  s.init = DeriveSeed(seed, kTagInit);
  s.sgd = DeriveSeed(seed, kTagSgd);
  s.sampler = DeriveSeed(seed, kTagSampler);
  s.agent = DeriveSeed(seed, kTagAgent);
  return s;
}

std::string SeedDir(const ExperimentConfig& cfg, std::uint64_t seed) {
  return Join(cfg.output_dir, "seed-" + std::to_string(seed));
}

std::vector<std::string> MethodIds(const ExperimentConfig& cfg) {
  std::vector<std::string> ids;
  for (rbn::BaselineMode m : cfg.rbn.baselines) ids.push_back(rbn::BaselineModeName(m));
  ids.push_back("rbn");
  return ids;
}

std::string MethodLabel(const ExperimentConfig& cfg, const std::string& id) {
  const std::string flavor = FlavorName(cfg.loss.flavor);
  if (id == "rbn") return "RL-RBN(" + flavor + ")";
  if (id == "manual") return "M-RBN(" + flavor + ")";
  switch (cfg.loss.flavor) {
    case LossFlavor::kSoft: return "NormSoftmax";
    case LossFlavor::kCos: return "Cosface";
    case LossFlavor::kArc: return "Arcface";
  }
  return id;
}

std::vector<StageOutcome> RunSeed(const ExperimentConfig& cfg, std::uint64_t seed,
                                  const std::string& run_dir, const Logger& log) {
  cfg.Validate();
  fs::create_directories(run_dir);
  const json old = ReadManifest(run_dir);
  const bool same_run = old.value("config_hash", std::string()) ==
                            Fnv1aHex(RunConfigJson(cfg).dump()) &&
                        old.contains("seed") && old["seed"] == seed;
  json manifest = FreshManifest(cfg, seed, same_run ? old : json::object());
  Run run(cfg, seed, run_dir);
  const std::vector<std::string> keys = StageKeys(cfg, seed);
  std::vector<StageOutcome> outcomes;
  bool dirty = false;
  for (std::size_t i = 0; i < AllStages().size(); ++i) {
    const Stage stage = AllStages()[i];
    const json& entry = manifest["stages"].contains(StageName(stage))
                            ? manifest["stages"][StageName(stage)]
                            : json();
    const bool fresh = !dirty && entry.is_object() && entry.value("key", std::string()) == keys[i] &&
                       OutputsExist(cfg, run_dir, stage);
    if (fresh) {
      Log(log, "seed " + std::to_string(seed) + ": " + StageName(stage) + " up to date");
      outcomes.push_back({stage, false, keys[i]});
      continue;
    }
    dirty = true;
    Log(log, "seed " + std::to_string(seed) + ": running " + StageName(stage));
    ExecuteRecorded(run, cfg, run_dir, manifest, stage, keys[i], log);
    outcomes.push_back({stage, true, keys[i]});
  }
  return outcomes;
}

void RunStage(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& run_dir,
              Stage stage, const Logger& log) {
  cfg.Validate();
  fs::create_directories(run_dir);
  const json old = ReadManifest(run_dir);
  const bool same_run = old.value("config_hash", std::string()) ==
                            Fnv1aHex(RunConfigJson(cfg).dump()) &&
                        old.contains("seed") && old["seed"] == seed;
  json manifest = FreshManifest(cfg, seed, same_run ? old : json::object());
  // Later stages no longer describe the artifacts they were built from.
  bool after = false;
  for (Stage s : AllStages()) {
    if (after) manifest["stages"].erase(StageName(s));
    if (s == stage) after = true;
  }
  const std::vector<std::string> keys = StageKeys(cfg, seed);
  std::size_t idx = 0;
  while (AllStages()[idx] != stage) ++idx;
  Run run(cfg, seed, run_dir);
  Log(log, "seed " + std::to_string(seed) + ": running " + StageName(stage));
  ExecuteRecorded(run, cfg, run_dir, manifest, stage, keys[idx], log);
}

std::vector<MethodResult> LoadRunResults(const ExperimentConfig& cfg, const std::string& run_dir) {
  std::vector<MethodResult> out;
  for (const std::string& id : MethodIds(cfg)) {
    out.push_back({id, MethodLabel(cfg, id),
                   BiasReportFromJson(ReadJsonFile(Join(run_dir, "eval/" + id + ".json")))});
  }
  return out;
}

Comparison WriteExperimentReport(const ExperimentConfig& cfg, const Logger& log) {
  const std::vector<std::string> ids = MethodIds(cfg);
  std::vector<std::string> names;
  for (int g = 0; g < cfg.data.n_groups(); ++g) names.push_back(cfg.data.GroupName(g));

  std::vector<std::vector<metrics::BiasReport>> per_method(ids.size());
  std::vector<ReportRow> rows;
  json runs = json::array();
  Comparison cmp;
  const bool has_fixed = ids.front() == "fixed";
  for (std::uint64_t seed : cfg.seeds) {
    const std::string dir = SeedDir(cfg, seed);
    const std::vector<MethodResult> results = LoadRunResults(cfg, dir);
    json methods = json::array();
    for (std::size_t k = 0; k < results.size(); ++k) {
      per_method[k].push_back(results[k].report);
      rows.push_back({results[k].label, std::to_string(seed), results[k].report});
      methods.push_back({{"id", results[k].id},
                         {"label", results[k].label},
                         {"report", BiasReportToJson(results[k].report)}});
    }
    const std::vector<double> up =
        UpFractionByBiasBin(qlearn::LoadPolicy(Join(dir, "agent/policy.json")));
    bool monotone = true;
    for (std::size_t b = 1; b < up.size(); ++b) monotone = monotone && up[b] >= up[b - 1];
    cmp.monotone_up_policies += monotone ? 1 : 0;
    ++cmp.seeds;
    json run = {{"seed", seed}, {"methods", methods}, {"policy_up_fraction_by_bias_bin", up}};
    if (has_fixed) {
      const metrics::BiasReport& base = results.front().report;
      const metrics::BiasReport& rl = results.back().report;
      const bool win = rl.std < base.std && base.ser && rl.ser && *rl.ser < *base.ser;
      cmp.wins += win ? 1 : 0;
      cmp.mean_ser_baseline += base.ser.value_or(0.0);
      cmp.mean_ser_rbn += rl.ser.value_or(0.0);
      run["rbn_beats_fixed"] = win;
    }
    runs.push_back(run);
  }
  json mean = json::array();
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const metrics::BiasReport m = MeanReport(per_method[k]);
    rows.push_back({MethodLabel(cfg, ids[k]), "mean", m});
    mean.push_back({{"id", ids[k]}, {"label", MethodLabel(cfg, ids[k])}, {"report", BiasReportToJson(m)}});
  }
  std::ostringstream table;
  WriteReportTable(rows, names, table);
  WriteTextFile(Join(cfg.output_dir, "report.csv"), table.str());

  json summary = {{"version", kVersion},
                  {"config_hash", Fnv1aHex(RunConfigJson(cfg).dump())},
                  {"group_names", names},
                  {"runs", runs},
                  {"mean", mean}};
  if (has_fixed && cmp.seeds > 0) {
    cmp.mean_ser_baseline /= cmp.seeds;
    cmp.mean_ser_rbn /= cmp.seeds;
    cmp.mean_ser_reduction =
        cmp.mean_ser_baseline > 0.0 ? 1.0 - cmp.mean_ser_rbn / cmp.mean_ser_baseline : 0.0;
    summary["rbn_vs_fixed"] = {{"seeds", cmp.seeds},
                               {"wins", cmp.wins},
                               {"mean_ser_fixed", cmp.mean_ser_baseline},
                               {"mean_ser_rbn", cmp.mean_ser_rbn},
                               {"mean_ser_reduction", cmp.mean_ser_reduction}};
  }
  summary["monotone_up_policies"] = cmp.monotone_up_policies;
  WriteJsonFile(Join(cfg.output_dir, "summary.json"), summary);
  Log(log, "wrote " + Join(cfg.output_dir, "report.csv"));
  return cmp;
}

std::string RunExperiment(const ExperimentConfig& cfg, const Logger& log) {
  cfg.Validate();
  fs::create_directories(cfg.output_dir);
  std::vector<std::string> dirs;
  for (std::uint64_t seed : cfg.seeds) {
    RunSeed(cfg, seed, SeedDir(cfg, seed), log);
    dirs.push_back("seed-" + std::to_string(seed));
  }
  WriteJsonFile(Join(cfg.output_dir, "manifest.json"),
                {{"format", kManifestFormat},
                 {"version", kVersion},
                 {"config", ToJson(cfg)},
                 {"config_hash", Fnv1aHex(RunConfigJson(cfg).dump())},
                 {"seeds", cfg.seeds},
                 {"runs", dirs}});
  WriteExperimentReport(cfg, log);
  return cfg.output_dir;
}

std::string RunSweep(const ExperimentConfig& cfg, const Logger& log) {
  cfg.Validate();
  const std::string sweep_dir = Join(cfg.output_dir, "sweep");
  std::vector<ReportRow> rows;
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < cfg.sweep.ratios.size(); ++k) {
    ExperimentConfig c = cfg;
    c.data.train_identities_per_group =
        RatioIdentities(cfg.sweep.ratios[k], cfg.sweep.total_train_identities);
    c.output_dir = Join(sweep_dir, "ratio-" + std::to_string(k));
    Log(log, "ratio " + RatioLabel(cfg.sweep.ratios[k]) + " -> " + c.output_dir);
    RunExperiment(c, log);
    const std::vector<std::string> ids = MethodIds(c);
    for (const std::string& id : ids) {
      std::vector<metrics::BiasReport> reports;
      for (std::uint64_t seed : c.seeds) {
        reports.push_back(
            BiasReportFromJson(ReadJsonFile(Join(SeedDir(c, seed), "eval/" + id + ".json"))));
      }
      rows.push_back({MethodLabel(c, id), "mean", MeanReport(reports)});
      labels.push_back(RatioLabel(cfg.sweep.ratios[k]));
    }
  }
  std::vector<std::string> names;
  for (int g = 0; g < cfg.data.n_groups(); ++g) names.push_back(cfg.data.GroupName(g));
  std::ostringstream table;
  WriteReportTable(rows, names, table, "ratio", labels);
  WriteTextFile(Join(sweep_dir, "report.csv"), table.str());
  Log(log, "wrote " + Join(sweep_dir, "report.csv"));
  return sweep_dir;
}

}  // namespace rlrbn::harness

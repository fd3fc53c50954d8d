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

// Staged experiment runner. One seed owns one run directory:
//
//   manifest.json            config, derived seeds, per-stage keys
//   data/                    all.txt train.txt val.txt test.txt pairs.csv
//   model/                   init.ckpt warmup.ckpt warmup_stats.json
//   sample/                  calibration.csv transitions.csv space.json
//                            sampler.json
//   agent/                   qnetwork.json policy.json
//   train/                   rbn.ckpt margin_history.csv baseline-<mode>.ckpt
//   eval/                    <method>.json roc/<method>_<group>.csv
//   report.csv summary.json
//
// A stage is skipped when its key (a digest of its config slice chained
// with the upstream key) matches the manifest and its outputs exist; once
// one stage runs, every later stage runs too.

#ifndef RLRBN_HARNESS_PIPELINE_HPP_
#define RLRBN_HARNESS_PIPELINE_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "harness/config.hpp"
#include "harness/report.hpp"

namespace rlrbn::harness {

enum class Stage {
  kGenData,
  kSplit,
  kPairs,
  kWarmup,
  kSample,
  kTrainDqn,
  kDumpPolicy,
  kTrain,
  kEvaluate,
  kReport,
};

const std::vector<Stage>& AllStages();
const char* StageName(Stage stage);
Stage ParseStage(const std::string& name);

// A stage failure: keeps the cause's code and prefixes the stage name.
class StageError : public Error {
 public:
  StageError(Stage stage, const Error& cause)
      : Error(cause.code(), std::string("stage ") + StageName(stage) + ": " + cause.what()),
        stage_(stage) {}
  Stage stage() const noexcept { return stage_; }

 private:
  Stage stage_;
};

using Logger = std::function<void(const std::string&)>;

struct StageOutcome {
  Stage stage = Stage::kGenData;
  bool ran = false;
  std::string key;
};

// Seeds of the independent random streams of one run.
struct RunSeeds {
  std::uint64_t data = 0;
  std::uint64_t split = 0;
  std::uint64_t pairs = 0;
  std::uint64_t init = 0;
  std::uint64_t sgd = 0;
  std::uint64_t sampler = 0;
  std::uint64_t agent = 0;
};
RunSeeds DeriveRunSeeds(std::uint64_t seed);

std::string SeedDir(const ExperimentConfig& cfg, std::uint64_t seed);

// Method ids in report order: the configured baselines, then "rbn".
std::vector<std::string> MethodIds(const ExperimentConfig& cfg);
// NormSoftmax / Cosface / Arcface, M-RBN(<flavor>), RL-RBN(<flavor>).
std::string MethodLabel(const ExperimentConfig& cfg, const std::string& id);

// Runs every stage of one seed, skipping up-to-date ones.
std::vector<StageOutcome> RunSeed(const ExperimentConfig& cfg, std::uint64_t seed,
                                  const std::string& run_dir, const Logger& log = {});

// Runs one stage unconditionally from the artifacts already on disk and
// records it in the manifest.
void RunStage(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& run_dir,
              Stage stage, const Logger& log = {});

struct MethodResult {
  std::string id;
  std::string label;
  metrics::BiasReport report;
};

// Reads eval/<method>.json of a finished run.
std::vector<MethodResult> LoadRunResults(const ExperimentConfig& cfg, const std::string& run_dir);

// Head-to-head of RL-RBN against the fixed-margin baseline over seeds.
struct Comparison {
  int seeds = 0;
  int wins = 0;  // strictly lower STD and strictly lower SER
  double mean_ser_baseline = 0.0;
  double mean_ser_rbn = 0.0;
  double mean_ser_reduction = 0.0;  // 1 - mean_ser_rbn / mean_ser_baseline
  int monotone_up_policies = 0;     // non-decreasing Up fraction over bias bins
};

// Builds <output_dir>/report.csv and summary.json from the seed runs.
Comparison WriteExperimentReport(const ExperimentConfig& cfg, const Logger& log = {});

// All seeds, then the aggregate report. Returns the output directory.
std::string RunExperiment(const ExperimentConfig& cfg, const Logger& log = {});

// One experiment per ratio under <output_dir>/sweep/ratio-<k>, plus
// <output_dir>/sweep/report.csv with the seed-mean row of every method.
std::string RunSweep(const ExperimentConfig& cfg, const Logger& log = {});

}  // namespace rlrbn::harness

#endif  // RLRBN_HARNESS_PIPELINE_HPP_

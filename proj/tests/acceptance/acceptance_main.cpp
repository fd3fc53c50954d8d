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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "harness/checks.hpp"
#include "harness/config.hpp"
#include "harness/pipeline.hpp"
#include "harness/report.hpp"

namespace fs = std::filesystem;
using rlrbn::harness::CheckResult;

namespace {

std::string Fmt(const char* fmt, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

// Relative path -> contents of every regular file under `root`.
std::map<std::string, std::string> ReadTree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    out[fs::relative(e.path(), root).generic_string()] =
        rlrbn::harness::ReadTextFile(e.path().string());
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rlrbn acceptance suite"};
  std::string work_dir = "acceptance-runs";
  std::uint64_t seed = 0;
  std::string config_path;
  app.add_option("--work-dir", work_dir, "scratch directory for the experiment runs");
  app.add_option("--seed", seed, "seed of the oracle checks");
  app.add_option("--config", config_path, "experiment config (defaults if omitted)");
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  auto report = [&](int id, const CheckResult& r, double seconds) {
    if (!r.passed) ++failures;
    std::cout << "criterion " << id << ": " << (r.passed ? "PASS" : "FAIL") << " " << r.name
              << ": " << r.detail << Fmt(" [%.1fs]", seconds) << std::endl;
  };
  auto timed = [&](int id, const std::function<CheckResult()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    const CheckResult r = f();
    report(id, r, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  };

  timed(1, [] { return rlrbn::harness::CheckFairnessRows(); });
  timed(2, [&] { return rlrbn::harness::CheckLossReductions(seed, 100); });
  timed(3, [&] { return rlrbn::harness::CheckGradients(seed); });
  timed(4, [&] { return rlrbn::harness::CheckMetricOracle(seed); });
  timed(5, [&] { return rlrbn::harness::CheckQLearningOracle(seed, 5); });
  timed(6, [&] { return rlrbn::harness::CheckRewardTelescoping(seed); });
  timed(7, [&] { return rlrbn::harness::CheckSamplerDiscipline(seed); });

  // Criteria 8 to 10 share two fresh runs of the default experiment.
  rlrbn::harness::ExperimentConfig cfg = rlrbn::harness::LoadConfig(config_path, {});
  const fs::path dir_a = fs::path(work_dir) / "run-a";
  const fs::path dir_b = fs::path(work_dir) / "run-b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  rlrbn::harness::Comparison cmp;
  double seconds_a = 0.0;
  std::string run_error;
  try {
    cfg.output_dir = dir_a.string();
    const auto t0 = std::chrono::steady_clock::now();
    rlrbn::harness::RunExperiment(cfg);
    cmp = rlrbn::harness::WriteExperimentReport(cfg);
    seconds_a = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  } catch (const std::exception& e) {
    run_error = e.what();
  }

  if (!run_error.empty()) {
    report(8, {"bias reduction against the fixed-margin baseline", false, run_error}, 0.0);
    report(9, {"policy raises margins more often at higher skew", false, run_error}, 0.0);
  } else {
    const bool ok8 = cmp.seeds == 10 && cmp.wins >= 8 && cmp.mean_ser_reduction >= 0.20;
    report(8,
           {"bias reduction against the fixed-margin baseline", ok8,
            std::to_string(cmp.wins) + "/" + std::to_string(cmp.seeds) +
                " seeds with lower STD and SER (need 8/10)" +
                Fmt(", mean SER %.4f -> %.4f, reduction %.1f%% (need 20%%)", cmp.mean_ser_baseline,
                    cmp.mean_ser_rbn, 100.0 * cmp.mean_ser_reduction)},
           seconds_a);
    const bool ok9 = cmp.seeds == 10 && cmp.monotone_up_policies >= 7;
    report(9,
           {"policy raises margins more often at higher skew", ok9,
            std::to_string(cmp.monotone_up_policies) + "/" + std::to_string(cmp.seeds) +
                " policies with non-decreasing Up fraction over bias bins (need 7/10)"},
           0.0);
  }

  {
    CheckResult r{"byte-identical reruns", false, ""};
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (!run_error.empty()) throw std::runtime_error("first run failed: " + run_error);
      cfg.output_dir = dir_b.string();
      rlrbn::harness::RunExperiment(cfg);
      // The top-level manifest records its own output directory, so it is the
      // one file expected to differ.
      std::map<std::string, std::string> a = ReadTree(dir_a);
      std::map<std::string, std::string> b = ReadTree(dir_b);
      a.erase("manifest.json");
      b.erase("manifest.json");
      std::vector<std::string> differing;
      for (const auto& [path, text] : a) {
        auto it = b.find(path);
        if (it == b.end() || it->second != text) differing.push_back(path);
      }
      for (const auto& [path, text] : b) {
        if (!a.count(path)) differing.push_back(path);
      }
      r.passed = differing.empty() && a.count("report.csv") && a.count("summary.json");
      r.detail = std::to_string(a.size()) + " files compared (report.csv, summary.json and every "
                 "per-seed artifact), " + std::to_string(differing.size()) + " differ";
      if (!differing.empty()) r.detail += ", first: " + differing.front();
    } catch (const std::exception& e) {
      r.detail = e.what();
    }
    report(10, r, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}

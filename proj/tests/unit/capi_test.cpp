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

#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "harness/report.hpp"
#include "nlohmann/json.hpp"
#include "rlrbn/rlrbn.h"
#include "test_util.hpp"

namespace {

std::string Take(char* s) {
  std::string out = s == nullptr ? "" : s;
  rlrbn_string_free(s);
  return out;
}

void Collect(const char* line, void* user) {
  static_cast<std::vector<std::string>*>(user)->push_back(line);
}

}  // namespace

TEST_CASE("c api: status names and version") {
  CHECK(std::string(rlrbn_status_name(RLRBN_OK)) == "ok");
  CHECK(std::string(rlrbn_status_name(RLRBN_ERR_MISSING_ARTIFACT)) == "missing_artifact");
  CHECK(std::string(rlrbn_status_name(RLRBN_ERR_DEGENERATE_SER)) == "degenerate_ser");
  CHECK_FALSE(std::string(rlrbn_version()).empty());
}

TEST_CASE("c api: config handles") {
  rlrbn_config* cfg = nullptr;
  REQUIRE(rlrbn_config_default(&cfg) == RLRBN_OK);
  CHECK(rlrbn_config_set(cfg, "rbn.total_epochs=9") == RLRBN_OK);
  CHECK(rlrbn_config_set(cfg, "output_dir=somewhere") == RLRBN_OK);
  char* text = nullptr;
  REQUIRE(rlrbn_config_to_json(cfg, &text) == RLRBN_OK);
  const auto j = nlohmann::json::parse(Take(text));
  CHECK(j.at("rbn").at("total_epochs") == 9);

  char* dir = nullptr;
  REQUIRE(rlrbn_seed_dir(cfg, 4, &dir) == RLRBN_OK);
  CHECK(Take(dir) == (std::filesystem::path("somewhere") / "seed-4").string());

  CHECK(rlrbn_config_set(cfg, "rbn.nope=1") == RLRBN_ERR_CONFIG);
  CHECK(std::string(rlrbn_last_error()).find("nope") != std::string::npos);
  // A rejected assignment leaves the handle unchanged.
  REQUIRE(rlrbn_config_to_json(cfg, &text) == RLRBN_OK);
  CHECK(nlohmann::json::parse(Take(text)) == j);
  rlrbn_config_free(cfg);

  const char* overrides[] = {"seeds=[1,2]"};
  REQUIRE(rlrbn_config_load(nullptr, overrides, 1, &cfg) == RLRBN_OK);
  rlrbn_config_free(cfg);
  cfg = nullptr;
  CHECK(rlrbn_config_load("/nonexistent/c.json", nullptr, 0, &cfg) == RLRBN_ERR_MISSING_ARTIFACT);
  CHECK(cfg == nullptr);
  CHECK(rlrbn_config_default(nullptr) == RLRBN_ERR_INVALID_ARGUMENT);
}

TEST_CASE("c api: std and ser") {
  const double acc[] = {0.8967, 0.8797, 0.8468, 0.8417};
  double std = 0, ser = 0;
  REQUIRE(rlrbn_std_ser(acc, 4, &std, &ser) == RLRBN_OK);
  CHECK(std == doctest::Approx(2.64).epsilon(0.005));
  CHECK(ser == doctest::Approx(1.53).epsilon(0.01));

  const double perfect[] = {1.0, 0.9};
  std = -1;
  CHECK(rlrbn_std_ser(perfect, 2, &std, &ser) == RLRBN_ERR_DEGENERATE_SER);
  CHECK(std == doctest::Approx(7.0710678).epsilon(1e-6));
  CHECK(rlrbn_std_ser(acc, 0, &std, &ser) != RLRBN_OK);
}

TEST_CASE("c api: tiny pipeline and datasets") {
  const std::string root = rlrbn::testing::ScratchDir("capi");
  const auto j = rlrbn::harness::ToJson(rlrbn::testing::TinyConfig(root));
  const std::string path = root + "/cfg.json";
  rlrbn::harness::WriteTextFile(path, j.dump());
  rlrbn_config* cfg = nullptr;
  REQUIRE(rlrbn_config_load(path.c_str(), nullptr, 0, &cfg) == RLRBN_OK);

  // Stages report which one failed.
  CHECK(rlrbn_run_stage(cfg, 3, (root + "/empty").c_str(), "train", nullptr, nullptr) ==
        RLRBN_ERR_MISSING_ARTIFACT);
  CHECK(std::string(rlrbn_last_error_stage()) == "train");
  CHECK(rlrbn_run_stage(cfg, 3, nullptr, "compile", nullptr, nullptr) == RLRBN_ERR_INVALID_ARGUMENT);

  std::vector<std::string> log;
  REQUIRE(rlrbn_run_seed(cfg, 3, nullptr, Collect, &log) == RLRBN_OK);
  CHECK_FALSE(log.empty());
  CHECK(std::filesystem::exists(root + "/seed-3/report.csv"));
  CHECK(rlrbn_write_report(cfg, nullptr, nullptr) == RLRBN_OK);
  CHECK(std::filesystem::exists(root + "/report.csv"));

  rlrbn_dataset* ds = nullptr;
  REQUIRE(rlrbn_dataset_load((root + "/seed-3/data/train.txt").c_str(), &ds) == RLRBN_OK);
  int n = 0, ids = 0, groups = 0, d = 0;
  REQUIRE(rlrbn_dataset_info(ds, &n, &ids, &groups, &d) == RLRBN_OK);
  CHECK(groups == 4);
  CHECK(d == 6);
  CHECK(ids == 12 + 6 + 6 + 6);
  CHECK(n == ids * 4);
  std::vector<int> sizes(groups);
  REQUIRE(rlrbn_dataset_group_sizes(ds, sizes.data()) == RLRBN_OK);
  CHECK(sizes == std::vector<int>{12, 6, 6, 6});
  rlrbn_dataset_free(ds);
  CHECK(rlrbn_dataset_load((root + "/missing.txt").c_str(), &ds) == RLRBN_ERR_MISSING_ARTIFACT);
  rlrbn_config_free(cfg);
}

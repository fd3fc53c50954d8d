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

#include "rlrbn/rlrbn.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <span>
#include <new>
#include <string>
#include <vector>

#include "core/bias_metrics.hpp"
#include "core/error.hpp"
#include "core/grouped_data.hpp"
#include "harness/checks.hpp"
#include "harness/config.hpp"
#include "harness/pipeline.hpp"

struct rlrbn_config {
  nlohmann::json doc;  // as loaded plus overrides
  rlrbn::harness::ExperimentConfig cfg;
};

struct rlrbn_dataset {
  rlrbn::data::GroupedDataset ds;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_stage;

rlrbn_status Fail(rlrbn_status s, const std::string& message, const std::string& stage = "") {
  g_last_error = message;
  g_last_stage = stage;
  return s;
}

// Runs `body`, mapping exceptions to status codes.
template <typename F>
rlrbn_status Guard(F&& body) {
  g_last_error.clear();
  g_last_stage.clear();
  try {
    return body();
  } catch (const rlrbn::harness::StageError& e) {
    return Fail(static_cast<rlrbn_status>(e.code()), e.what(), rlrbn::harness::StageName(e.stage()));
  } catch (const rlrbn::Error& e) {
    return Fail(static_cast<rlrbn_status>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return Fail(RLRBN_ERR_CONFIG, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return Fail(RLRBN_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return Fail(RLRBN_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Fail(RLRBN_ERR_INTERNAL, e.what());
  } catch (...) {
    return Fail(RLRBN_ERR_INTERNAL, "unknown exception");
  }
}

rlrbn::harness::Logger MakeLogger(rlrbn_log_fn log, void* user) {
  if (!log) return {};
  return [log, user](const std::string& line) { log(line.c_str(), user); };
}

char* CopyString(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* rlrbn_version(void) { return "0.1.0"; }

const char* rlrbn_status_name(rlrbn_status status) {
  if (status == RLRBN_OK) return "ok";
  return rlrbn::ErrorCodeName(static_cast<rlrbn::ErrorCode>(status));
}

const char* rlrbn_last_error(void) { return g_last_error.c_str(); }
const char* rlrbn_last_error_stage(void) { return g_last_stage.c_str(); }

void rlrbn_string_free(char* s) { std::free(s); }

rlrbn_status rlrbn_config_default(rlrbn_config** out) {
  return rlrbn_config_load(nullptr, nullptr, 0, out);
}

rlrbn_status rlrbn_config_load(const char* path, const char* const* overrides, size_t n,
                               rlrbn_config** out) {
  return Guard([&] {
    if (!out) return Fail(RLRBN_ERR_INVALID_ARGUMENT, "out is null");
    if (n > 0 && !overrides) return Fail(RLRBN_ERR_INVALID_ARGUMENT, "overrides is null");
    std::vector<std::string> ov;
    for (size_t i = 0; i < n; ++i) ov.emplace_back(overrides[i] ? overrides[i] : "");
    auto handle = std::make_unique<rlrbn_config>();
    handle->cfg = rlrbn::harness::LoadConfig(path ? path : "", ov);
    handle->doc = rlrbn::harness::ToJson(handle->cfg);
    *out = handle.release();
    return RLRBN_OK;
  });
}

rlrbn_status rlrbn_config_set(rlrbn_config* cfg, const char* assignment) {
  return Guard([&] {
    if (!cfg || !assignment) return Fail(RLRBN_ERR_INVALID_ARGUMENT, "null argument");
    nlohmann::json doc = cfg->doc;
    rlrbn::harness::ApplyOverride(doc, assignment);
    cfg->cfg = rlrbn::harness::ConfigFromJson(doc);
    cfg->doc = std::move(doc);
    return RLRBN_OK;
  });
}

rlrbn_status rlrbn_config_to_json(const rlrbn_config* cfg, char** out) {
  return Guard([&] {
    if (!cfg || !out) return Fail(RLRBN_ERR_INVALID_ARGUMENT, "null argument");
    *out = CopyString(rlrbn::harness::ToJson(cfg->cfg).dump(2));
    return RLRBN_OK;
  });
}

void rlrbn_config_free(rlrbn_config* cfg) { delete cfg; }

rlrbn_status rlrbn_seed_dir(const rlrbn_config* cfg, uint64_t seed, char** out) {
  return Guard([&] {
    if (!cfg || !out) return Fail(RLRBN_ERR_INVALID_ARGUMENT, "null argument");
    *out = CopyString(rlrbn::harness::SeedDir(cfg->cfg, seed));
    return RLRBN_OK;
  });
}

rlrbn_status rlrbn_run_experiment(const rlrbn_config* cfg, rlrbn_log_fn log, void* user) {
  return Guard([&] {
    if (!cfg) return Fail(RLRBN_ERR_INVALID_ARGUMENT, "config is null");
    rlrbn::harness::RunExperiment(cfg->cfg, MakeLogger(log, user));
    return RLRBN_OK;
  });
}

rlrbn_status rlrbn_run_seed(const rlrbn_config* cfg, uint64_t seed, const char* run_dir,
                            rlrbn_log_fn log, void* user) {
  return Guard([&] {
    if (!cfg) return Fail(RLRBN_ERR_INVALID_ARGUMENT, "config is null");
    const std::string dir = run_dir ? run_dir : rlrbn::harness::SeedDir(cfg->cfg, seed);
    rlrbn::harness::RunSeed(cfg->cfg, seed, dir, MakeLogger(log, user));
    return RLRBN_OK;
  });
}

rlrbn_status rlrbn_run_stage(const rlrbn_config* cfg, uint64_t seed, const char* run_dir,
                             const char* stage, rlrbn_log_fn log, void* user) {
  return Guard([&] {
    if (!cfg || !stage) return Fail(RLRBN_ERR_INVALID_ARGUMENT, "null argument");
    const std::string dir = run_dir ? run_dir : rlrbn::harness::SeedDir(cfg->cfg, seed);
    rlrbn::harness::RunStage(cfg->cfg, seed, dir, rlrbn::harness::ParseStage(stage),
                             MakeLogger(log, user));
    return RLRBN_OK;
  });
}

rlrbn_status rlrbn_write_report(const rlrbn_config* cfg, rlrbn_log_fn log, void* user) {
  return Guard([&] {
    if (!cfg) return Fail(RLRBN_ERR_INVALID_ARGUMENT, "config is null");
    rlrbn::harness::WriteExperimentReport(cfg->cfg, MakeLogger(log, user));
    return RLRBN_OK;
  });
}

rlrbn_status rlrbn_sweep(const rlrbn_config* cfg, rlrbn_log_fn log, void* user) {
  return Guard([&] {
    if (!cfg) return Fail(RLRBN_ERR_INVALID_ARGUMENT, "config is null");
    rlrbn::harness::RunSweep(cfg->cfg, MakeLogger(log, user));
    return RLRBN_OK;
  });
}

rlrbn_status rlrbn_selftest(uint64_t seed, rlrbn_log_fn log, void* user, int* n_failed) {
  return Guard([&] {
    if (!n_failed) return Fail(RLRBN_ERR_INVALID_ARGUMENT, "n_failed is null");
    *n_failed = 0;
    for (const rlrbn::harness::CheckResult& r : rlrbn::harness::RunSelfTest(seed)) {
      if (!r.passed) ++*n_failed;
      if (log) {
        const std::string line = std::string(r.passed ? "PASS " : "FAIL ") + r.name + ": " + r.detail;
        log(line.c_str(), user);
      }
    }
    return RLRBN_OK;
  });
}

rlrbn_status rlrbn_std_ser(const double* accuracies, size_t n, double* std_out, double* ser_out) {
  return Guard([&] {
    if (!accuracies || !std_out || !ser_out) return Fail(RLRBN_ERR_INVALID_ARGUMENT, "null argument");
    const std::span<const double> acc(accuracies, n);
    *std_out = rlrbn::metrics::AccuracyStdPercent(acc);
    *ser_out = rlrbn::metrics::ComputeStdSer(acc).ser;  // throws when degenerate
    return RLRBN_OK;
  });
}

rlrbn_status rlrbn_dataset_load(const char* path, rlrbn_dataset** out) {
  return Guard([&] {
    if (!path || !out) return Fail(RLRBN_ERR_INVALID_ARGUMENT, "null argument");
    auto handle = std::make_unique<rlrbn_dataset>();
    handle->ds = rlrbn::data::LoadDataset(path);
    *out = handle.release();
    return RLRBN_OK;
  });
}

rlrbn_status rlrbn_dataset_info(const rlrbn_dataset* ds, int* n_samples, int* n_identities,
                                int* n_groups, int* d_in) {
  return Guard([&] {
    if (!ds) return Fail(RLRBN_ERR_INVALID_ARGUMENT, "dataset is null");
    if (n_samples) *n_samples = static_cast<int>(ds->ds.samples().size());
    if (n_identities) *n_identities = ds->ds.n_identities();
    if (n_groups) *n_groups = ds->ds.n_groups();
    if (d_in) *d_in = ds->ds.d_in();
    return RLRBN_OK;
  });
}

rlrbn_status rlrbn_dataset_group_sizes(const rlrbn_dataset* ds, int* counts) {
  return Guard([&] {
    if (!ds || !counts) return Fail(RLRBN_ERR_INVALID_ARGUMENT, "null argument");
    const auto& by_group = ds->ds.identities_by_group();
    for (std::size_t g = 0; g < by_group.size(); ++g) counts[g] = static_cast<int>(by_group[g].size());
    return RLRBN_OK;
  });
}

void rlrbn_dataset_free(rlrbn_dataset* ds) { delete ds; }

}  // extern "C"

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

// rlrbn command-line front end. Progress goes to stderr, tables to stdout.
// Failures print one JSON error record on stderr and exit nonzero.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rlrbn/rlrbn.h"

namespace {

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> run_dir;
};

struct CliFailure {
  int exit_code;
  std::string status;
  std::string message;
  std::string stage;
};

void LogToStderr(const char* line, void*) { std::cerr << line << '\n'; }

[[noreturn]] void ThrowStatus(rlrbn_status s) {
  throw CliFailure{static_cast<int>(s), rlrbn_status_name(s), rlrbn_last_error(),
                   rlrbn_last_error_stage()};
}

void Check(rlrbn_status s) {
  if (s != RLRBN_OK) ThrowStatus(s);
}

std::string TakeString(char* s) {
  std::string out(s);
  rlrbn_string_free(s);
  return out;
}

// Owns a config handle.
class Config {
 public:
  explicit Config(const Options& opt) {
    std::vector<const char*> ov;
    for (const std::string& o : opt.overrides) ov.push_back(o.c_str());
    Check(rlrbn_config_load(opt.config_path.empty() ? nullptr : opt.config_path.c_str(),
                            ov.data(), ov.size(), &cfg_));
    char* text = nullptr;
    Check(rlrbn_config_to_json(cfg_, &text));
    json_ = nlohmann::json::parse(TakeString(text));
  }
  ~Config() { rlrbn_config_free(cfg_); }
  Config(const Config&) = delete;
  Config& operator=(const Config&) = delete;

  const rlrbn_config* get() const { return cfg_; }
  const nlohmann::json& json() const { return json_; }
  std::string output_dir() const { return json_.at("output_dir").get<std::string>(); }
  std::uint64_t first_seed() const { return json_.at("seeds").at(0).get<std::uint64_t>(); }

 private:
  rlrbn_config* cfg_ = nullptr;
  nlohmann::json json_;
};

void PrintFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliFailure{RLRBN_ERR_MISSING_ARTIFACT, "missing_artifact", "cannot read " + path, ""};
  std::cout << in.rdbuf();
}

std::uint64_t SeedOf(const Options& opt, const Config& cfg) {
  return opt.seed ? *opt.seed : cfg.first_seed();
}

std::string RunDirOf(const Options& opt, const Config& cfg) {
  if (opt.run_dir) return *opt.run_dir;
  char* dir = nullptr;
  Check(rlrbn_seed_dir(cfg.get(), SeedOf(opt, cfg), &dir));
  return TakeString(dir);
}

bool TargetsOneSeed(const Options& opt) { return opt.seed.has_value() || opt.run_dir.has_value(); }

void RunStageCommand(const std::string& stage, const Options& opt) {
  const Config cfg(opt);
  const std::string dir = RunDirOf(opt, cfg);
  Check(rlrbn_run_stage(cfg.get(), SeedOf(opt, cfg), dir.c_str(), stage.c_str(), LogToStderr,
                        nullptr));
}

void ReportCommand(const Options& opt) {
  const Config cfg(opt);
  if (TargetsOneSeed(opt)) {
    const std::string dir = RunDirOf(opt, cfg);
    Check(rlrbn_run_stage(cfg.get(), SeedOf(opt, cfg), dir.c_str(), "report", LogToStderr,
                          nullptr));
    PrintFile(dir + "/report.csv");
  } else {
    Check(rlrbn_write_report(cfg.get(), LogToStderr, nullptr));
    PrintFile(cfg.output_dir() + "/report.csv");
  }
}

void RunCommand(const Options& opt) {
  const Config cfg(opt);
  if (TargetsOneSeed(opt)) {
    const std::string dir = RunDirOf(opt, cfg);
    Check(rlrbn_run_seed(cfg.get(), SeedOf(opt, cfg), dir.c_str(), LogToStderr, nullptr));
    PrintFile(dir + "/report.csv");
  } else {
    Check(rlrbn_run_experiment(cfg.get(), LogToStderr, nullptr));
    PrintFile(cfg.output_dir() + "/report.csv");
  }
}

void SweepCommand(const Options& opt) {
  const Config cfg(opt);
  Check(rlrbn_sweep(cfg.get(), LogToStderr, nullptr));
  PrintFile(cfg.output_dir() + "/sweep/report.csv");
}

void PrintLine(const char* line, void*) { std::cout << line << std::endl; }

void SelftestCommand(const Options& opt) {
  // Only the seed matters here; a config is still parsed so bad flags fail.
  const Config cfg(opt);
  int failed = 0;
  Check(rlrbn_selftest(opt.seed.value_or(0), PrintLine, nullptr, &failed));
  if (failed > 0) {
    throw CliFailure{1, "check_failed", std::to_string(failed) + " check(s) failed", ""};
  }
}

void ShowConfigCommand(const Options& opt) {
  const Config cfg(opt);
  std::cout << cfg.json().dump(2) << '\n';
}

void EmitError(const std::string& command, const CliFailure& f) {
  nlohmann::json rec = {{"error",
                         {{"command", command},
                          {"status", f.status},
                          {"code", f.exit_code},
                          {"message", f.message}}}};
  if (!f.stage.empty()) rec["error"]["stage"] = f.stage;
  std::cerr << rec.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rlrbn: group-adaptive margin training with a learned margin policy"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rlrbn_version()));

  Options opt;
  std::uint64_t seed = 0;
  std::string run_dir;

  struct Command {
    const char* name;
    const char* help;
    bool per_seed;
  };
  const std::vector<Command> commands = {
      {"gen-data", "generate the synthetic grouped dataset", true},
      {"split", "split identities into train, validation and test", true},
      {"pairs", "draw verification pairs from the test identities", true},
      {"warmup", "warm up the encoder with a plain normalized softmax", true},
      {"sample", "collect transitions with the offline sampler", true},
      {"train-dqn", "fit the Q-network to the logged transitions", true},
      {"dump-policy", "write the greedy action of every state", true},
      {"train", "train the RL-driven model and the baselines", true},
      {"evaluate", "score every trained model on the test pairs", true},
      {"report", "write and print the report table", true},
      {"run", "run the whole pipeline for every seed (or one seed)", true},
      {"sweep", "run the pipeline over the group-ratio grid", false},
      {"selftest", "run the oracle and property checks", true},
      {"show-config", "print the effective configuration", false},
  };
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("-c,--config", opt.config_path, "JSON config file (defaults if omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("-s,--set", opt.overrides, "override, e.g. rbn.total_epochs=10 (repeatable)");
    if (c.per_seed) {
      sub->add_option("--seed", seed, "run seed (default: first configured seed)");
      sub->add_option("--run-dir", run_dir, "run directory (default: <output_dir>/seed-<seed>)");
    }
  }

  std::string command = "rlrbn";
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (!app.get_subcommands().empty()) command = app.get_subcommands().front()->get_name();
    EmitError(command, {RLRBN_ERR_INVALID_ARGUMENT, "invalid_argument", e.what(), ""});
    return RLRBN_ERR_INVALID_ARGUMENT;
  }

  CLI::App* sub = app.get_subcommands().front();
  command = sub->get_name();
  if (const CLI::Option* o = sub->get_option_no_throw("--seed"); o && o->count() > 0) opt.seed = seed;
  if (const CLI::Option* o = sub->get_option_no_throw("--run-dir"); o && o->count() > 0) {
    opt.run_dir = run_dir;
  }

  try {
    if (command == "report") {
      ReportCommand(opt);
    } else if (command == "run") {
      RunCommand(opt);
    } else if (command == "sweep") {
      SweepCommand(opt);
    } else if (command == "selftest") {
      SelftestCommand(opt);
    } else if (command == "show-config") {
      ShowConfigCommand(opt);
    } else {
      RunStageCommand(command, opt);
    }
  } catch (const CliFailure& f) {
    EmitError(command, f);
    return f.exit_code;
  } catch (const std::exception& e) {
    EmitError(command, {RLRBN_ERR_INTERNAL, "internal", e.what(), ""});
    return RLRBN_ERR_INTERNAL;
  }
  return 0;
}

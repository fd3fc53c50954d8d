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

#ifndef RLRBN_HARNESS_REPORT_HPP_
#define RLRBN_HARNESS_REPORT_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "core/bias_metrics.hpp"
#include "core/qlearning.hpp"
#include "json.hpp"

namespace rlrbn::harness {

nlohmann::json BiasReportToJson(const metrics::BiasReport& r);
metrics::BiasReport BiasReportFromJson(const nlohmann::json& j);

// One table row: a method's report for one seed (or a mean over seeds).
struct ReportRow {
  std::string method;  // display label, e.g. RL-RBN(soft)
  std::string seed;    // seed number, or "mean"
  metrics::BiasReport report;
};

// Mean of per-group accuracy, Avg, STD and SER over rows; SER is averaged
// over the rows where it is defined.
metrics::BiasReport MeanReport(const std::vector<metrics::BiasReport>& reports);

// Comma-separated table with columns
//   method,seed,<group names...>,Avg,STD,SER
// Accuracies and Avg in percent, every number rounded to 2 decimals; an
// undefined SER is written as NA.
void WriteReportTable(const std::vector<ReportRow>& rows,
                      const std::vector<std::string>& group_names, std::ostream& out,
                      const std::string& leading_column = "",
                      const std::vector<std::string>& leading_values = {});

// (threshold, FPR, TPR) points, one per line after a header.
void WriteRoc(const std::vector<metrics::RocPoint>& roc, std::ostream& out);

// Fraction of Up actions in each bias bin, aggregated over groups and
// margin indices.
std::vector<double> UpFractionByBiasBin(const qlearn::PolicyTable& policy);

// Writes `text` to `path`, creating parent directories.
void WriteTextFile(const std::string& path, const std::string& text);
std::string ReadTextFile(const std::string& path);

}  // namespace rlrbn::harness

#endif  // RLRBN_HARNESS_REPORT_HPP_

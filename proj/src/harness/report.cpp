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

#include "harness/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "core/error.hpp"

namespace rlrbn::harness {

using nlohmann::json;

namespace {

std::string Fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  // Avoid "-0.00" so tables stay byte-stable around zero.
  if (std::string(buf) == "-0.00") return "0.00";
  return buf;
}

}  // namespace

json BiasReportToJson(const metrics::BiasReport& r) {
  json j;
  j["per_group_accuracy"] = r.per_group_accuracy;
  j["avg_accuracy"] = r.avg_accuracy;
  j["std"] = r.std;
  j["ser"] = r.ser ? json(*r.ser) : json(nullptr);
  json geo = json::array();
  for (const metrics::GroupGeometry& g : r.per_group_geometry) {
    geo.push_back({{"group_id", g.group_id},
                   {"theta_intra", g.theta_intra},
                   {"theta_inter", g.theta_inter},
                   {"d_intra", g.d_intra},
                   {"d_inter", g.d_inter},
                   {"n_identities_used", g.n_identities_used}});
  }
  j["per_group_geometry"] = geo;
  return j;
}

metrics::BiasReport BiasReportFromJson(const json& j) {
  try {
    metrics::BiasReport r;
    r.per_group_accuracy = j.at("per_group_accuracy").get<std::vector<double>>();
    r.avg_accuracy = j.at("avg_accuracy").get<double>();
    r.std = j.at("std").get<double>();
    if (!j.at("ser").is_null()) r.ser = j.at("ser").get<double>();
    for (const json& g : j.at("per_group_geometry")) {
      metrics::GroupGeometry geo;
      geo.group_id = g.at("group_id").get<int>();
      geo.theta_intra = g.at("theta_intra").get<double>();
      geo.theta_inter = g.at("theta_inter").get<double>();
      geo.d_intra = g.at("d_intra").get<double>();
      geo.d_inter = g.at("d_inter").get<double>();
      geo.n_identities_used = g.at("n_identities_used").get<int>();
      r.per_group_geometry.push_back(geo);
    }
    return r;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed bias report: ") + e.what());
  }
}

metrics::BiasReport MeanReport(const std::vector<metrics::BiasReport>& reports) {
  metrics::BiasReport m;
  if (reports.empty()) return m;
  const std::size_t g = reports.front().per_group_accuracy.size();
  m.per_group_accuracy.assign(g, 0.0);
  double ser_sum = 0.0;
  int ser_n = 0;
  for (const metrics::BiasReport& r : reports) {
    if (r.per_group_accuracy.size() != g) throw ConfigError("reports disagree on the group count");
    for (std::size_t k = 0; k < g; ++k) m.per_group_accuracy[k] += r.per_group_accuracy[k];
    m.avg_accuracy += r.avg_accuracy;
    m.std += r.std;
    if (r.ser) {
      ser_sum += *r.ser;
      ++ser_n;
    }
  }
  const double n = static_cast<double>(reports.size());
  for (double& a : m.per_group_accuracy) a /= n;
  m.avg_accuracy /= n;
  m.std /= n;
  if (ser_n > 0) m.ser = ser_sum / ser_n;
  return m;
}

void WriteReportTable(const std::vector<ReportRow>& rows,
                      const std::vector<std::string>& group_names, std::ostream& out,
                      const std::string& leading_column,
                      const std::vector<std::string>& leading_values) {
  if (!leading_column.empty() && leading_values.size() != rows.size()) {
    throw ConfigError("one leading value per report row is required");
  }
  if (!leading_column.empty()) out << leading_column << ',';
  out << "method,seed";
  for (const std::string& g : group_names) out << ',' << g;
  out << ",Avg,STD,SER\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ReportRow& row = rows[i];
    if (!leading_column.empty()) out << leading_values[i] << ',';
    out << row.method << ',' << row.seed;
    for (double a : row.report.per_group_accuracy) out << ',' << Fixed2(100.0 * a);
    out << ',' << Fixed2(100.0 * row.report.avg_accuracy) << ',' << Fixed2(row.report.std) << ','
        << (row.report.ser ? Fixed2(*row.report.ser) : std::string("NA")) << '\n';
  }
}

void WriteRoc(const std::vector<metrics::RocPoint>& roc, std::ostream& out) {
  out << "threshold,fpr,tpr\n" << std::setprecision(17);
  for (const metrics::RocPoint& p : roc) out << p.threshold << ',' << p.fpr << ',' << p.tpr << '\n';
}

std::vector<double> UpFractionByBiasBin(const qlearn::PolicyTable& policy) {
  const int nb = policy.space.n_bias_bins();
  std::vector<double> up(nb, 0.0);
  std::vector<double> count(nb, 0.0);
  for (const qlearn::PolicyRow& r : policy.rows) {
    count[r.state.bias_index] += 1.0;
    if (r.action == mdp::MarginAction::kUp) up[r.state.bias_index] += 1.0;
  }
  for (int b = 0; b < nb; ++b) up[b] = count[b] > 0.0 ? up[b] / count[b] : 0.0;
  return up;
}

void WriteTextFile(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace rlrbn::harness

// Copyright 2026 The Flipset Authors
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

#include "flipset/reports.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

#include "flipset/error.hpp"

namespace flipset {

namespace {

// Shortest round-trip decimal form, matching the JSON output.
std::string number(double v) { return nlohmann::json(v).dump(); }

}  // namespace

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw InputError("write failed for " + path.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

nlohmann::json to_json(const FlipsetResult& r) {
  nlohmann::json j;
  j["test_index"] = r.test_index;
  j["original_prob"] = r.original_prob;
  j["original_label"] = r.original_label;
  j["members"] = r.members;
  j["member_deltas"] = r.member_deltas;
  j["k"] = r.k();
  j["found"] = r.found();
  j["estimated_prob"] = r.estimated_prob;
  j["algorithm"] = std::string(to_string(r.algorithm));
  j["outer_passes"] = r.outer_passes;
  j["verified"] = r.verified ? nlohmann::json(std::string(to_string(*r.verified))) : nlohmann::json();
  j["retrained_prob"] = r.retrained_prob ? nlohmann::json(*r.retrained_prob) : nlohmann::json();
  return j;
}

FlipsetResult flipset_result_from_json(const nlohmann::json& j) {
  try {
    FlipsetResult r;
    r.test_index = j.at("test_index").get<Index>();
    r.original_prob = j.at("original_prob").get<double>();
    r.original_label = j.at("original_label").get<int>();
    r.members = j.at("members").get<std::vector<Index>>();
    r.member_deltas = j.at("member_deltas").get<std::vector<double>>();
    r.estimated_prob = j.at("estimated_prob").get<double>();
    r.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    r.outer_passes = j.at("outer_passes").get<int>();
    if (const auto& v = j.at("verified"); !v.is_null()) {
      r.verified = v.get<std::string>() == "flipped" ? Verdict::kFlipped : Verdict::kNotFlipped;
    }
    if (const auto& v = j.at("retrained_prob"); !v.is_null()) r.retrained_prob = v.get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("flipset result record: ") + e.what());
  }
}

nlohmann::json to_json(const PointRecord& record) {
  nlohmann::json j = to_json(record.result);
  j["error"] = record.error ? nlohmann::json(*record.error) : nlohmann::json();
  return j;
}

PointRecord point_record_from_json(const nlohmann::json& j) {
  PointRecord record;
  record.result = flipset_result_from_json(j);
  if (j.contains("error") && !j["error"].is_null()) record.error = j["error"].get<std::string>();
  return record;
}

nlohmann::json summary_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["dataset_name"] = report.dataset_name;
  j["feature_kind"] = std::string(to_string(report.feature_kind));
  j["algorithm"] = std::string(to_string(report.algorithm));
  j["n_test"] = report.n_test;
  j["found_count"] = report.found_count;
  j["flipped_count"] = report.flipped_count;
  j["error_count"] = report.error_count;
  j["found_rate"] = report.found_rate;
  j["flip_rate"] = report.flip_rate;
  j["flip_rate_given_found"] = report.flip_rate_given_found
                                   ? nlohmann::json(*report.flip_rate_given_found)
                                   : nlohmann::json();
  j["mean_k"] = report.mean_k;
  j["mean_outer_passes"] = report.mean_outer_passes;
  j["k_values"] = report.k_values;
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [k, margin] : report.k_vs_confidence) pairs.push_back({k, margin});
  j["k_vs_confidence"] = std::move(pairs);
  return j;
}

nlohmann::json to_json(const CalibrationReport& report) {
  nlohmann::json j;
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : report.points) {
    points.push_back({{"test_index", p.test_index},
                      {"pearson_r", p.pearson_r ? nlohmann::json(*p.pearson_r) : nlohmann::json()},
                      {"sign_agreement", p.sign_agreement},
                      {"mean_abs_estimated", p.mean_abs_estimated},
                      {"mean_abs_actual", p.mean_abs_actual}});
  }
  j["points"] = std::move(points);
  j["mean_r"] = report.mean_r ? nlohmann::json(*report.mean_r) : nlohmann::json();
  j["mean_sign_agreement"] = report.mean_sign_agreement;
  return j;
}

nlohmann::json to_json(const AttributionSweepReport& report) {
  nlohmann::json j;
  j["k_grid"] = report.k_grid;
  j["n_test"] = report.n_test;
  nlohmann::json curves;
  for (std::size_t m = 0; m < report.methods.size(); ++m) {
    curves[std::string(to_string(report.methods[m]))] = report.mean_abs_delta[m];
  }
  j["curves"] = std::move(curves);
  return j;
}

std::string points_jsonl(const std::vector<PointRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<PointRecord> read_points_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<PointRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(point_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::string k_confidence_csv(const std::vector<PointRecord>& records) {
  std::string out = "test_index,k,prob,abs_margin\n";
  for (const auto& record : records) {
    const auto& r = record.result;
    if (record.error || !r.found()) continue;
    out += std::to_string(r.test_index) + "," + std::to_string(r.k()) + "," +
           number(r.original_prob) + "," + number(std::abs(r.original_prob - 0.5)) + "\n";
  }
  return out;
}

std::string k_histogram_csv(const ExperimentReport& report) {
  std::map<Index, Index> counts;
  for (Index k : report.k_values) ++counts[k];
  std::string out = "k,count\n";
  for (const auto& [k, c] : counts) out += std::to_string(k) + "," + std::to_string(c) + "\n";
  return out;
}

std::string attribution_csv(const AttributionSweepReport& report) {
  std::string out = "method,k,mean_abs_delta\n";
  for (std::size_t m = 0; m < report.methods.size(); ++m) {
    for (std::size_t j = 0; j < report.k_grid.size(); ++j) {
      out += std::string(to_string(report.methods[m])) + "," + std::to_string(report.k_grid[j]) +
             "," + number(report.mean_abs_delta[m][j]) + "\n";
    }
  }
  return out;
}

ExperimentFiles experiment_files(const std::filesystem::path& dir) {
  return {dir / "summary.json", dir / "points.jsonl", dir / "k_confidence.csv",
          dir / "k_histogram.csv", dir / "timing.json"};
}

ExperimentFiles write_experiment_outputs(const std::filesystem::path& dir,
                                         const ExperimentRun& run) {
  const auto files = experiment_files(dir);
  write_atomic(files.points, points_jsonl(run.records));
  write_atomic(files.k_confidence, k_confidence_csv(run.records));
  write_atomic(files.k_histogram, k_histogram_csv(run.report));
  nlohmann::json timing;
  timing["wall_time_seconds"] = run.report.wall_time_seconds;
  timing["n_test"] = run.report.n_test;
  write_atomic(files.timing, timing.dump(2) + "\n");
  write_atomic(files.summary, summary_json(run.report).dump(2) + "\n");
  return files;
}

}  // namespace flipset

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

#ifndef FLIPSET_REPORTS_HPP_
#define FLIPSET_REPORTS_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "flipset/flipset.hpp"
#include "flipset/verification.hpp"

namespace flipset {

// Writes via a sibling temporary file and rename, so readers never observe a
// partially written file.
void write_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

nlohmann::json to_json(const FlipsetResult& result);
FlipsetResult flipset_result_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PointRecord& record);
PointRecord point_record_from_json(const nlohmann::json& j);

// Deterministic summary: no timings, keys sorted.
nlohmann::json summary_json(const ExperimentReport& report);
nlohmann::json to_json(const CalibrationReport& report);
nlohmann::json to_json(const AttributionSweepReport& report);

std::string points_jsonl(const std::vector<PointRecord>& records);
std::vector<PointRecord> read_points_jsonl(const std::filesystem::path& path);

// test_index,k,prob,abs_margin for every found set.
std::string k_confidence_csv(const std::vector<PointRecord>& records);
// k,count
std::string k_histogram_csv(const ExperimentReport& report);
// method,k,mean_abs_delta
std::string attribution_csv(const AttributionSweepReport& report);

struct ExperimentFiles {
  std::filesystem::path summary;
  std::filesystem::path points;
  std::filesystem::path k_confidence;
  std::filesystem::path k_histogram;
  std::filesystem::path timing;
};

ExperimentFiles experiment_files(const std::filesystem::path& dir);
ExperimentFiles write_experiment_outputs(const std::filesystem::path& dir, const ExperimentRun& run);

}  // namespace flipset

#endif  // FLIPSET_REPORTS_HPP_

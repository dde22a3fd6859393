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

#include "flipset/config.hpp"

#include <fstream>
#include <set>

#include "flipset/error.hpp"

namespace flipset {

namespace {

using json = nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw InputError("config: '" + where + "' must be an object");
  std::set<std::string> names(known.begin(), known.end());
  for (const auto& item : j.items()) {
    if (!names.count(item.key())) {
      throw InputError("config: unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

FeatureKind RunConfig::feature_kind() const {
  if (dataset.format == "synthetic") return FeatureKind::kSynthetic;
  if (dataset.format == "embeddings") return FeatureKind::kEmbedding;
  return FeatureKind::kBow;
}

void RunConfig::validate(bool check_paths) const {
  const auto& f = dataset.format;
  if (f != "jsonl" && f != "csv" && f != "embeddings" && f != "synthetic") {
    throw InputError("config: dataset.format must be jsonl, csv, embeddings or synthetic");
  }
  if (f != "synthetic") {
    if (dataset.path.empty()) throw InputError("config: dataset.path is required for " + f);
    if (check_paths && !std::filesystem::exists(dataset.path)) {
      throw InputError("config: dataset path does not exist: " + dataset.path);
    }
  }
  if (feature_kind() == FeatureKind::kBow) bow.validate();
  if (feature_kind() == FeatureKind::kSynthetic) synthetic.validate();
  hyper.validate();
  if (max_passes < 1) throw InputError("config: max_passes must be >= 1");
  if (parallelism < 1) throw InputError("config: parallelism must be >= 1");
  if (max_test_points < 0) throw InputError("config: max_test_points must be >= 0");
  if (calibration_points < 1) throw InputError("config: calibration.points must be >= 1");
  for (Index k : k_grid) {
    if (k < 0) throw InputError("config: attribution.k_grid entries must be >= 0");
  }
  if (sweep_test_points < 0) throw InputError("config: attribution.test_points must be >= 0");
}

json to_json(const RunConfig& c) {
  json j;
  j["dataset"] = {{"name", c.dataset.name}, {"path", c.dataset.path}, {"format", c.dataset.format}};
  j["bow"] = {{"lowercase", c.bow.lowercase},
              {"token_pattern", c.bow.token_pattern},
              {"min_df", c.bow.min_df},
              {"max_vocab", c.bow.max_vocab},
              {"weighting", std::string(to_string(c.bow.weighting))}};
  j["synthetic"] = {{"seed", c.synthetic.seed},
                    {"n_train", c.synthetic.n_train},
                    {"n_test", c.synthetic.n_test},
                    {"dimension", c.synthetic.dimension},
                    {"class_separation", c.synthetic.class_separation},
                    {"noise_rate", c.synthetic.noise_rate}};
  j["hyper"] = {{"lambda", c.hyper.lambda},
                {"tau", c.hyper.tau},
                {"newton_tol", c.hyper.newton_tol},
                {"newton_max_iter", c.hyper.newton_max_iter},
                {"solver_tol", c.hyper.solver_tol}};
  j["algorithm"] = std::string(to_string(c.algorithm));
  j["max_passes"] = c.max_passes;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["parallelism"] = c.parallelism;
  j["max_test_points"] = c.max_test_points;
  j["calibration"] = {{"points", c.calibration_points}, {"min_r", c.calibration_min_r}};
  json methods = json::array();
  for (auto m : c.methods) methods.push_back(std::string(to_string(m)));
  j["attribution"] = {{"methods", methods}, {"k_grid", c.k_grid}, {"test_points", c.sweep_test_points}};
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  try {
    reject_unknown(j,
                   {"dataset", "bow", "synthetic", "hyper", "algorithm", "max_passes", "output_dir",
                    "seed", "parallelism", "max_test_points", "calibration", "attribution"},
                   "config");
    read(j, "seed", c.seed);
    c.synthetic.seed = c.seed;
    if (j.contains("dataset")) {
      const auto& d = j["dataset"];
      reject_unknown(d, {"name", "path", "format"}, "dataset");
      read(d, "name", c.dataset.name);
      read(d, "path", c.dataset.path);
      read(d, "format", c.dataset.format);
    }
    if (j.contains("bow")) {
      const auto& b = j["bow"];
      reject_unknown(b, {"lowercase", "token_pattern", "min_df", "max_vocab", "weighting"}, "bow");
      read(b, "lowercase", c.bow.lowercase);
      read(b, "token_pattern", c.bow.token_pattern);
      read(b, "min_df", c.bow.min_df);
      read(b, "max_vocab", c.bow.max_vocab);
      if (b.contains("weighting")) c.bow.weighting = parse_weighting(b["weighting"].get<std::string>());
    }
    if (j.contains("synthetic")) {
      const auto& s = j["synthetic"];
      reject_unknown(s, {"seed", "n_train", "n_test", "dimension", "class_separation", "noise_rate"},
                     "synthetic");
      read(s, "seed", c.synthetic.seed);
      read(s, "n_train", c.synthetic.n_train);
      read(s, "n_test", c.synthetic.n_test);
      read(s, "dimension", c.synthetic.dimension);
      read(s, "class_separation", c.synthetic.class_separation);
      read(s, "noise_rate", c.synthetic.noise_rate);
    }
    if (j.contains("hyper")) {
      const auto& h = j["hyper"];
      reject_unknown(h, {"lambda", "tau", "newton_tol", "newton_max_iter", "solver_tol"}, "hyper");
      read(h, "lambda", c.hyper.lambda);
      read(h, "tau", c.hyper.tau);
      read(h, "newton_tol", c.hyper.newton_tol);
      read(h, "newton_max_iter", c.hyper.newton_max_iter);
      read(h, "solver_tol", c.hyper.solver_tol);
    }
    if (j.contains("algorithm")) c.algorithm = parse_algorithm(j["algorithm"].get<std::string>());
    read(j, "max_passes", c.max_passes);
    read(j, "output_dir", c.output_dir);
    read(j, "parallelism", c.parallelism);
    read(j, "max_test_points", c.max_test_points);
    if (j.contains("calibration")) {
      const auto& cal = j["calibration"];
      reject_unknown(cal, {"points", "min_r"}, "calibration");
      read(cal, "points", c.calibration_points);
      read(cal, "min_r", c.calibration_min_r);
    }
    if (j.contains("attribution")) {
      const auto& a = j["attribution"];
      reject_unknown(a, {"methods", "k_grid", "test_points"}, "attribution");
      if (a.contains("methods")) {
        c.methods.clear();
        for (const auto& m : a["methods"]) c.methods.push_back(parse_attribution_method(m.get<std::string>()));
      }
      read(a, "k_grid", c.k_grid);
      read(a, "test_points", c.sweep_test_points);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace flipset

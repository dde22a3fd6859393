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

#include "flipset/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "flipset/artifact.hpp"
#include "flipset/config.hpp"
#include "flipset/error.hpp"
#include "flipset/reports.hpp"
#include "flipset/service.hpp"
#include "flipset/verification.hpp"

namespace flipset {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Test points per checkpoint of a resumable experiment.
constexpr Index kCheckpointStride = 32;

void configure_logging() {
  auto logger = spdlog::get("flipset");
  if (!logger) {
    logger = spdlog::stderr_logger_mt("flipset");
    spdlog::set_default_logger(logger);
  }
  const char* level = std::getenv("FLIPSET_LOG");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::warn);
}

// Config file plus flag overrides; flags are applied after the file.
struct RunOptions {
  std::string config_path;
  std::vector<std::function<void(RunConfig&)>> overrides;

  RunConfig resolve() const {
    RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    for (const auto& apply : overrides) apply(config);
    config.validate(/*check_paths=*/true);
    return config;
  }
};

template <typename T>
void add_override(CLI::App* app, RunOptions& opts, const std::string& name,
                  std::function<void(RunConfig&, const T&)> apply, const std::string& help) {
  app->add_option_function<T>(
      name,
      [&opts, apply](const T& value) {
        opts.overrides.push_back([apply, value](RunConfig& c) { apply(c, value); });
      },
      help);
}

void add_run_options(CLI::App* app, RunOptions& opts) {
  app->add_option("-c,--config", opts.config_path, "JSON run config")->check(CLI::ExistingFile);
  add_override<std::string>(app, opts, "--dataset",
                            [](RunConfig& c, const std::string& v) { c.dataset.path = v; },
                            "dataset path");
  add_override<std::string>(app, opts, "--format",
                            [](RunConfig& c, const std::string& v) { c.dataset.format = v; },
                            "jsonl, csv, embeddings or synthetic");
  add_override<std::string>(app, opts, "--name",
                            [](RunConfig& c, const std::string& v) { c.dataset.name = v; },
                            "dataset name used in reports");
  add_override<std::string>(app, opts, "-o,--output-dir",
                            [](RunConfig& c, const std::string& v) { c.output_dir = v; },
                            "output directory");
  add_override<std::uint64_t>(app, opts, "--seed",
                              [](RunConfig& c, const std::uint64_t& v) {
                                c.seed = v;
                                c.synthetic.seed = v;
                              },
                              "seed (also seeds synthetic data)");
  add_override<double>(app, opts, "--lambda",
                       [](RunConfig& c, const double& v) { c.hyper.lambda = v; },
                       "L2 regularization strength");
  add_override<double>(app, opts, "--tau", [](RunConfig& c, const double& v) { c.hyper.tau = v; },
                       "decision threshold");
  add_override<std::string>(app, opts, "--algorithm",
                            [](RunConfig& c, const std::string& v) {
                              c.algorithm = parse_algorithm(v);
                            },
                            "greedy or iterative");
  add_override<int>(app, opts, "--max-passes",
                    [](RunConfig& c, const int& v) { c.max_passes = v; },
                    "iterative search pass cap");
  add_override<int>(app, opts, "-j,--parallelism",
                    [](RunConfig& c, const int& v) { c.parallelism = v; },
                    "worker threads for per-test-point work");
  add_override<Index>(app, opts, "--max-test-points",
                      [](RunConfig& c, const Index& v) { c.max_test_points = v; },
                      "sweep at most this many test points (0 = all)");
}

std::vector<Index> first_indices(Index n, Index limit) {
  const Index count = limit > 0 ? std::min(n, limit) : n;
  std::vector<Index> out(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = i;
  return out;
}

std::string snippet(const std::string& text, std::size_t width = 80) {
  std::string s = text.substr(0, width);
  for (char& ch : s) {
    if (ch == '\n' || ch == '\r' || ch == '\t') ch = ' ';
  }
  return text.size() > width ? s + "..." : s;
}

int cmd_train(const RunOptions& opts, const std::string& model_dir_flag, std::ostream& out) {
  const RunConfig config = opts.resolve();
  const fs::path model_dir =
      model_dir_flag.empty() ? fs::path(config.output_dir) / "model" : fs::path(model_dir_flag);
  spdlog::info("training on {}", config.dataset.name);
  const ModelBundle bundle = train_bundle(config);
  save_bundle(bundle, model_dir);
  out << metrics_summary(bundle) << "model written to " << model_dir.string() << "\n";
  return 0;
}

struct FlipsetFlags {
  std::string model_dir;
  Index test_index = -1;
  std::string algorithm = "iterative";
  int max_passes = kDefaultMaxPasses;
  bool verify = false;
  std::string out_path;
};

int cmd_flipset(const FlipsetFlags& flags, std::ostream& out) {
  const ModelBundle bundle = load_bundle(flags.model_dir);
  const Dataset& train = bundle.data.splits.train;
  const Dataset& test = bundle.data.splits.test;
  test.check_index(flags.test_index);
  const Algorithm algorithm = parse_algorithm(flags.algorithm);
  if (flags.max_passes < 1) throw InputError("--max-passes must be >= 1");

  const Eigen::VectorXd x_t = dense_column<double>(test.row(flags.test_index));
  const double tau = bundle.model.hyper.tau;
  FlipsetResult result = FlipsetSearcher(bundle.model, train)
                             .run(algorithm, x_t, tau, flags.max_passes, flags.test_index);
  if (flags.verify && result.found()) {
    result = verify_flip(std::move(result), train, x_t, bundle.model.hyper);
  }

  out << std::setprecision(6);
  out << "test point " << flags.test_index << ": p = " << result.original_prob
      << ", label = " << result.original_label << "\n";
  if (test.has_texts()) out << "  \"" << snippet(test.text(flags.test_index).value_or("")) << "\"\n";
  if (!result.found()) {
    out << to_string(algorithm) << ": no subset found\n";
  } else {
    out << to_string(algorithm) << ": k = " << result.k() << ", estimated p = "
        << result.estimated_prob;
    if (algorithm == Algorithm::kIterative) out << ", passes = " << result.outer_passes;
    out << "\n";
    for (std::size_t r = 0; r < result.members.size(); ++r) {
      const Index i = result.members[r];
      out << "  [" << i << "] label " << train.label(i) << ", delta " << result.member_deltas[r];
      if (train.has_texts()) out << "  \"" << snippet(train.text(i).value_or("")) << "\"";
      out << "\n";
    }
    if (result.retrained_prob) {
      out << "retrained p = " << *result.retrained_prob << " ("
          << to_string(*result.verified) << ")\n";
    }
  }
  const fs::path path = flags.out_path.empty()
                            ? fs::path(flags.model_dir) / ("flipset_" + std::string(to_string(algorithm)) +
                                                           "_" + std::to_string(flags.test_index) + ".json")
                            : fs::path(flags.out_path);
  write_atomic(path, to_json(result).dump(2) + "\n");
  out << "result written to " << path.string() << "\n";
  return 0;
}

// Fields that change experiment results; a resume is only valid if they match.
json experiment_key(const RunConfig& config, bool verify) {
  json key = to_json(config);
  key.erase("parallelism");
  key.erase("output_dir");
  key.erase("calibration");
  key.erase("attribution");
  key["verify"] = verify;
  return key;
}

int cmd_experiment(const RunOptions& opts, bool verify, bool fresh, std::ostream& out) {
  const RunConfig config = opts.resolve();
  const ModelBundle bundle = train_bundle(config);
  const auto& data = bundle.data.splits;
  const fs::path dir =
      fs::path(config.output_dir) / ("experiment_" + std::string(to_string(config.algorithm)));
  fs::create_directories(dir);

  const json key = experiment_key(bundle.config, verify);
  const auto files = experiment_files(dir);
  std::vector<PointRecord> previous;
  if (!fresh && fs::exists(dir / "config.json") && fs::exists(files.points)) {
    if (json::parse(read_file(dir / "config.json")) == key) {
      previous = read_points_jsonl(files.points);
      spdlog::info("resuming with {} completed points", previous.size());
    } else {
      spdlog::warn("existing results in {} used a different config; starting over", dir.string());
    }
  }
  write_atomic(dir / "config.json", key.dump(2) + "\n");

  const auto indices = first_indices(data.test.size(), config.max_test_points);
  ExperimentOptions options;
  options.algorithm = config.algorithm;
  options.max_passes = config.max_passes;
  options.parallelism = config.parallelism;
  options.verify = verify;

  ExperimentRun run;
  double wall = 0;
  for (std::size_t begin = 0; begin < indices.size(); begin += kCheckpointStride) {
    const std::size_t end = std::min(indices.size(), begin + kCheckpointStride);
    options.test_indices.assign(indices.begin() + static_cast<std::ptrdiff_t>(begin),
                                indices.begin() + static_cast<std::ptrdiff_t>(end));
    ExperimentRun chunk = run_experiment(data, config.dataset.name, config.feature_kind(),
                                         bundle.model, options, previous);
    wall += chunk.report.wall_time_seconds;
    for (auto& record : chunk.records) {
      if (record.error) {
        spdlog::warn("test point {}: {}", record.result.test_index, *record.error);
      }
      run.records.push_back(std::move(record));
    }
    write_atomic(files.points, points_jsonl(run.records));
    spdlog::info("{}/{} test points done", end, indices.size());
  }
  run.report = summarize(config.dataset.name, config.feature_kind(), config.algorithm, run.records);
  run.report.wall_time_seconds = wall;
  write_experiment_outputs(dir, run);

  const auto& r = run.report;
  out << std::fixed << std::setprecision(3);
  out << to_string(r.algorithm) << " on " << r.dataset_name << ": " << r.n_test
      << " test points\n"
      << "  found:        " << 100.0 * r.found_rate << "% (" << r.found_count << ")\n"
      << "  flipped:      " << 100.0 * r.flip_rate << "% of all";
  if (r.flip_rate_given_found) out << ", " << 100.0 * *r.flip_rate_given_found << "% of found";
  out << "\n"
      << "  mean k:       " << r.mean_k << "\n"
      << "  mean passes:  " << r.mean_outer_passes << "\n"
      << "  errors:       " << r.error_count << "\n"
      << "  wall time:    " << r.wall_time_seconds << " s\n"
      << "outputs in " << dir.string() << "\n";
  return 0;
}

int cmd_calibrate(const RunOptions& opts, std::ostream& out) {
  const RunConfig config = opts.resolve();
  const ModelBundle bundle = train_bundle(config);
  const auto& data = bundle.data.splits;
  const auto indices = first_indices(data.test.size(), config.calibration_points);
  const CalibrationReport report =
      loo_calibration(bundle.model, data.train, data.test, indices, config.parallelism);

  fs::create_directories(config.output_dir);
  const fs::path path = fs::path(config.output_dir) / "calibration.json";
  write_atomic(path, to_json(report).dump(2) + "\n");

  out << std::fixed << std::setprecision(4);
  for (const auto& p : report.points) {
    out << "test " << p.test_index << ": r = ";
    if (p.pearson_r) out << *p.pearson_r; else out << "undefined";
    out << ", sign agreement = " << p.sign_agreement << "\n";
  }
  out << "mean r = ";
  if (report.mean_r) out << *report.mean_r; else out << "undefined";
  out << ", mean sign agreement = " << report.mean_sign_agreement << "\n"
      << "report written to " << path.string() << "\n";
  if (!report.mean_r || *report.mean_r < config.calibration_min_r) {
    out << "calibration FAILED: mean r below floor " << config.calibration_min_r << "\n";
    return exit_code_for(ErrorKind::kNumerical);
  }
  out << "calibration passed (floor " << config.calibration_min_r << ")\n";
  return 0;
}

int cmd_attribution(const RunOptions& opts, const std::vector<std::string>& methods,
                    const std::vector<Index>& k_grid, std::ostream& out) {
  RunConfig config = opts.resolve();
  if (!methods.empty()) {
    config.methods.clear();
    for (const auto& m : methods) config.methods.push_back(parse_attribution_method(m));
  }
  if (!k_grid.empty()) config.k_grid = k_grid;
  config.validate(/*check_paths=*/true);

  const ModelBundle bundle = train_bundle(config);
  SweepOptions options;
  options.methods = config.methods;
  options.k_grid = config.k_grid;
  options.test_indices = first_indices(bundle.data.splits.test.size(), config.sweep_test_points);
  options.seed = config.seed;
  options.parallelism = config.parallelism;
  const AttributionSweepReport report = attribution_sweep(bundle.data.splits, bundle.model, options);

  fs::create_directories(config.output_dir);
  const fs::path csv = fs::path(config.output_dir) / "attribution.csv";
  write_atomic(csv, attribution_csv(report));
  write_atomic(fs::path(config.output_dir) / "attribution.json", to_json(report).dump(2) + "\n");

  out << std::left << std::setw(10) << "method";
  for (Index k : report.k_grid) out << std::right << std::setw(12) << ("k=" + std::to_string(k));
  out << "\n" << std::fixed << std::setprecision(5);
  for (std::size_t m = 0; m < report.methods.size(); ++m) {
    out << std::left << std::setw(10) << to_string(report.methods[m]);
    for (double v : report.mean_abs_delta[m]) out << std::right << std::setw(12) << v;
    out << "\n";
  }
  out << "mean |delta prediction| over " << report.n_test << " test points; written to "
      << csv.string() << "\n";
  return 0;
}

struct ServeFlags {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string store = "flipset-store";
  std::string ui_dir;
  int workers = kDefaultWhatifWorkers;
};

int cmd_serve(const ServeFlags& flags, std::ostream& out) {
  ServiceOptions options;
  options.store_dir = flags.store;
  options.ui_dir = flags.ui_dir;
  options.whatif_workers = flags.workers;
  ContestService service(options);
  if (!service.bind(flags.host, flags.port)) {
    throw InputError("cannot bind " + flags.host + ":" + std::to_string(flags.port));
  }
  out << "serving on http://" << flags.host << ":" << flags.port << " (store "
      << flags.store << ")" << std::endl;
  return service.listen_after_bind() ? 0 : exit_code_for(ErrorKind::kInput);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"flipset: find small training subsets whose removal flips a prediction"};
  app.require_subcommand(1);

  RunOptions run_opts;
  std::string model_dir;
  auto* train = app.add_subcommand("train", "train a model and write its artifact");
  add_run_options(train, run_opts);
  train->add_option("--model-dir", model_dir, "artifact directory (default <output>/model)");

  FlipsetFlags fs_flags;
  auto* flipset = app.add_subcommand("flipset", "search a flipset for one test point");
  flipset->add_option("-m,--model", fs_flags.model_dir, "model artifact directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  flipset->add_option("-t,--test-index", fs_flags.test_index, "test point index")->required();
  flipset->add_option("--algorithm", fs_flags.algorithm, "greedy or iterative");
  flipset->add_option("--max-passes", fs_flags.max_passes, "iterative search pass cap");
  flipset->add_flag("--verify", fs_flags.verify, "confirm the flip by exact retraining");
  flipset->add_option("--out", fs_flags.out_path, "result JSON path");

  bool no_verify = false;
  bool fresh = false;
  auto* experiment = app.add_subcommand("experiment", "sweep test points and write reports");
  add_run_options(experiment, run_opts);
  experiment->add_flag("--no-verify", no_verify, "skip exact retrain verification");
  experiment->add_flag("--fresh", fresh, "ignore results of an earlier interrupted run");

  auto* calibrate = app.add_subcommand("calibrate", "compare deltas with exact leave-one-out");
  add_run_options(calibrate, run_opts);

  std::vector<std::string> methods;
  std::vector<Index> k_grid;
  auto* attribution = app.add_subcommand("attribution", "remove top-k attributed points and retrain");
  add_run_options(attribution, run_opts);
  attribution->add_option("--methods", methods, "methods to compare")->delimiter(',');
  attribution->add_option("--k-grid", k_grid, "removal sizes")->delimiter(',');

  ServeFlags serve_flags;
  auto* serve = app.add_subcommand("serve", "run the contestation HTTP service");
  serve->add_option("--host", serve_flags.host, "bind address");
  serve->add_option("--port", serve_flags.port, "port");
  serve->add_option("--store", serve_flags.store, "model and session store directory");
  serve->add_option("--ui", serve_flags.ui_dir, "built UI bundle to serve under /");
  serve->add_option("--workers", serve_flags.workers, "what-if retrain workers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code_for(ErrorKind::kInput);
  }

  try {
    if (*train) return cmd_train(run_opts, model_dir, out);
    if (*flipset) return cmd_flipset(fs_flags, out);
    if (*experiment) return cmd_experiment(run_opts, !no_verify, fresh, out);
    if (*calibrate) return cmd_calibrate(run_opts, out);
    if (*attribution) return cmd_attribution(run_opts, methods, k_grid, out);
    if (*serve) return cmd_serve(serve_flags, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(ErrorKind::kData);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(ErrorKind::kData);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(ErrorKind::kNumerical);
  }
  return exit_code_for(ErrorKind::kInput);
}

}  // namespace flipset

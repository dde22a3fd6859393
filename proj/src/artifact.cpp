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

#include "flipset/artifact.hpp"

#include <cstdint>
#include <cstring>
#include <sstream>

#include "flipset/error.hpp"
#include "flipset/reports.hpp"
#include "flipset/stats.hpp"

namespace flipset {

namespace {

constexpr const char* kFormatTag = "flipset-model/1";

std::string theta_bytes(const Eigen::VectorXd& theta) {
  std::string bytes(static_cast<std::size_t>(theta.size()) * sizeof(double), '\0');
  std::memcpy(bytes.data(), theta.data(), bytes.size());
  return bytes;
}

}  // namespace

Metrics evaluate(const TrainedModel& model, const Dataset& test) {
  Metrics m;
  m.n_test = test.size();
  if (test.empty()) return m;
  const Eigen::VectorXd probs = sigmoid(margins(test, model.theta));
  Index correct = 0, tp = 0, fp = 0, fn = 0;
  std::vector<double> scores(static_cast<std::size_t>(test.size()));
  std::vector<int> labels(static_cast<std::size_t>(test.size()));
  for (Index i = 0; i < test.size(); ++i) {
    const int pred = predicted_label(probs[i], model.hyper.tau);
    const int y = test.label(i);
    correct += pred == y;
    tp += pred == 1 && y == 1;
    fp += pred == 1 && y == 0;
    fn += pred == 0 && y == 1;
    scores[static_cast<std::size_t>(i)] = probs[i];
    labels[static_cast<std::size_t>(i)] = y;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  const double denom = static_cast<double>(2 * tp + fp + fn);
  m.f1 = denom > 0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
  m.auc = stats::roc_auc(scores, labels);
  return m;
}

nlohmann::json to_json(const Metrics& m) {
  return {{"n_test", m.n_test},
          {"accuracy", m.accuracy},
          {"f1", m.f1},
          {"auc", m.auc ? nlohmann::json(*m.auc) : nlohmann::json()}};
}

LoadedData load_dataset(const RunConfig& config) {
  config.validate(/*check_paths=*/true);
  LoadedData out;
  const auto& format = config.dataset.format;
  if (format == "synthetic") {
    out.splits = make_synthetic(config.synthetic);
  } else if (format == "embeddings") {
    out.splits = load_embeddings(config.dataset.path);
  } else {
    const Corpus corpus = load_corpus(config.dataset.path, parse_corpus_format(format));
    BowFeatures features = featurize_bow(corpus, config.bow);
    out.splits = std::move(features.splits);
    out.vocabulary = std::move(features.vocabulary);
  }
  if (out.splits.train.empty()) throw DataError("dataset has no training instances");
  return out;
}

ModelBundle train_bundle(RunConfig config) {
  if (config.dataset.format != "synthetic" && !config.dataset.path.empty() &&
      std::filesystem::exists(config.dataset.path)) {
    config.dataset.path = std::filesystem::absolute(config.dataset.path).lexically_normal().string();
  }
  ModelBundle bundle;
  bundle.data = load_dataset(config);
  bundle.model = train(bundle.data.splits.train, config.hyper);
  bundle.metrics = evaluate(bundle.model, bundle.data.splits.test);
  bundle.config = std::move(config);
  return bundle;
}

nlohmann::json model_json(const ModelBundle& bundle) {
  nlohmann::json j;
  j["format"] = kFormatTag;
  j["config"] = to_json(bundle.config);
  j["dimension"] = bundle.model.dimension();
  j["n_train"] = bundle.data.splits.train.size();
  j["n_test"] = bundle.data.splits.test.size();
  j["final_grad_norm"] = bundle.model.final_grad_norm;
  j["iterations"] = bundle.model.iterations;
  j["metrics"] = to_json(bundle.metrics);
  j["theta_file"] = "theta.bin";
  j["vocabulary_file"] = bundle.data.vocabulary ? nlohmann::json("vocab.json") : nlohmann::json();
  return j;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_atomic(dir / "theta.bin", theta_bytes(bundle.model.theta));
  if (bundle.data.vocabulary) {
    write_atomic(dir / "vocab.json", bundle.data.vocabulary->manifest().dump(1) + "\n");
  }
  write_atomic(dir / "summary.txt", metrics_summary(bundle));
  // Written last: its presence marks a complete bundle.
  write_atomic(dir / "model.json", model_json(bundle).dump(2) + "\n");
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "model.json")) {
    throw InputError("no model bundle at " + dir.string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(dir / "model.json"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model.json: " + std::string(e.what()));
  }
  if (j.value("format", "") != kFormatTag) throw DataError("model.json: unknown format tag");
  ModelBundle bundle;
  bundle.config = run_config_from_json(j.at("config"));
  bundle.data = load_dataset(bundle.config);

  const std::string bytes = read_file(dir / "theta.bin");
  const Index d = j.at("dimension").get<Index>();
  if (static_cast<Index>(bytes.size()) != d * static_cast<Index>(sizeof(double))) {
    throw DataError("theta.bin: expected " + std::to_string(d) + " parameters");
  }
  if (bundle.data.splits.train.dimension() != d) {
    throw DataError("model dimension " + std::to_string(d) +
                    " does not match re-featurized data dimension " +
                    std::to_string(bundle.data.splits.train.dimension()));
  }
  bundle.model.theta.resize(d);
  std::memcpy(bundle.model.theta.data(), bytes.data(), bytes.size());
  bundle.model.hyper = bundle.config.hyper;
  bundle.model.final_grad_norm = j.at("final_grad_norm").get<double>();
  bundle.model.iterations = j.at("iterations").get<int>();
  bundle.metrics = evaluate(bundle.model, bundle.data.splits.test);
  return bundle;
}

std::string metrics_summary(const ModelBundle& bundle) {
  std::ostringstream out;
  const auto& m = bundle.metrics;
  out << "dataset:        " << bundle.config.dataset.name << " ("
      << to_string(bundle.config.feature_kind()) << ")\n"
      << "train / test:   " << bundle.data.splits.train.size() << " / "
      << bundle.data.splits.test.size() << "\n"
      << "dimension:      " << bundle.model.dimension() << "\n"
      << "lambda / tau:   " << bundle.model.hyper.lambda << " / " << bundle.model.hyper.tau << "\n"
      << "newton:         " << bundle.model.iterations << " iterations, |grad| = "
      << bundle.model.final_grad_norm << "\n"
      << "test accuracy:  " << m.accuracy << "\n"
      << "test F1:        " << m.f1 << "\n"
      << "test AUC:       ";
  if (m.auc) out << *m.auc; else out << "undefined";
  out << "\n";
  return out.str();
}

}  // namespace flipset

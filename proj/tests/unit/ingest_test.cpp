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

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

#include "flipset/artifact.hpp"
#include "flipset/ingest.hpp"
#include "flipset/model.hpp"

namespace flipset {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "flipset_ingest_test";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_text(const std::string& name, const std::string& content) {
  const fs::path path = scratch(name);
  std::ofstream(path, std::ios::binary) << content;
  return path;
}

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

Corpus one_doc(std::string text) {
  Corpus corpus;
  corpus.train.push_back({std::move(text), 1, SplitKind::kTrain});
  return corpus;
}

BowConfig unpruned(Weighting weighting) {
  BowConfig config;
  config.min_df = 1;
  config.weighting = weighting;
  return config;
}

double accuracy_of(const DatasetSplits& data) {
  Hyperparams h;
  h.lambda = 0.01;
  return evaluate(train(data.train, h), data.test).accuracy;
}

TEST_CASE("load_corpus: two jsonl lines in file order") {
  const auto path = write_text("two.jsonl",
                               "{\"text\": \"good film\", \"label\": 0, \"split\": \"train\"}\n"
                               "{\"text\": \"bad film\", \"label\": 1, \"split\": \"train\"}\n");
  const Corpus corpus = load_corpus(path, CorpusFormat::kJsonl);
  REQUIRE(corpus.train.size() == 2);
  CHECK(corpus.test.empty());
  CHECK(corpus.train[0].text == "good film");
  CHECK(corpus.train[0].label == 0);
  CHECK(corpus.train[1].label == 1);
}

TEST_CASE("load_corpus: a non-binary label names its row") {
  const auto path = write_text("bad_label.jsonl",
                               "{\"text\": \"a\", \"label\": 0, \"split\": \"train\"}\n"
                               "{\"text\": \"b\", \"label\": 2, \"split\": \"test\"}\n");
  const std::string message = error_of([&] { load_corpus(path, CorpusFormat::kJsonl); });
  CHECK(message.find("line 2") != std::string::npos);
  CHECK_THROWS_AS(load_corpus(path, CorpusFormat::kJsonl), DataError);
}

TEST_CASE("load_corpus: csv with quoted fields and an empty text") {
  const auto path = write_text("small.csv",
                               "text,label,split\n"
                               "\"hello, world\",1,train\n"
                               ",0,test\n");
  const Corpus corpus = load_corpus(path, CorpusFormat::kCsv);
  REQUIRE(corpus.train.size() == 1);
  REQUIRE(corpus.test.size() == 1);
  CHECK(corpus.train[0].text == "hello, world");
  CHECK(corpus.test[0].text.empty());
}

TEST_CASE("load_corpus: malformed rows cite the line") {
  const auto path = write_text("malformed.jsonl",
                               "{\"text\": \"a\", \"label\": 0, \"split\": \"train\"}\n"
                               "{\"text\": \"b\", \"label\": 1}\n");
  CHECK(error_of([&] { load_corpus(path, CorpusFormat::kJsonl); }).find("line 2") !=
        std::string::npos);
  CHECK_THROWS_AS(load_corpus(scratch("missing.jsonl"), CorpusFormat::kJsonl), InputError);
}

TEST_CASE("load_corpus: the bundled mini corpus matches its manifest") {
  const fs::path dir = fs::path(FLIPSET_SOURCE_DIR) / "data" / "mini_sentiment";
  const auto manifest = nlohmann::json::parse(std::ifstream(dir / "manifest.json"));
  const Corpus corpus = load_corpus(dir / manifest.at("file").get<std::string>(), CorpusFormat::kJsonl);
  CHECK(corpus.train.size() == manifest.at("n_train").get<std::size_t>());
  CHECK(corpus.test.size() == manifest.at("n_test").get<std::size_t>());
  const auto positives = std::count_if(corpus.train.begin(), corpus.train.end(),
                                       [](const CorpusRecord& r) { return r.label == 1; });
  CHECK(static_cast<std::size_t>(2 * positives) == corpus.train.size());
}

TEST_CASE("featurize_bow: counts for a single document") {
  const BowFeatures f = featurize_bow(one_doc("a a b"), unpruned(Weighting::kCount));
  REQUIRE(f.vocabulary.tokens == std::vector<std::string>{"a", "b"});
  const Eigen::VectorXd row = f.splits.train.row(0).transpose();
  REQUIRE(row.size() == 3);
  CHECK(row[f.vocabulary.column("a")] == 2.0);
  CHECK(row[f.vocabulary.column("b")] == 1.0);
  CHECK(row[2] == 1.0);
}

TEST_CASE("featurize_bow: binary weighting") {
  const BowFeatures f = featurize_bow(one_doc("a a b"), unpruned(Weighting::kBinary));
  const Eigen::VectorXd row = f.splits.train.row(0).transpose();
  CHECK(row[f.vocabulary.column("a")] == 1.0);
  CHECK(row[f.vocabulary.column("b")] == 1.0);
}

TEST_CASE("featurize_bow: min_df prunes rare tokens") {
  Corpus corpus;
  corpus.train.push_back({"a b", 1, SplitKind::kTrain});
  corpus.train.push_back({"b c", 0, SplitKind::kTrain});
  BowConfig config;
  config.min_df = 2;
  const BowFeatures f = featurize_bow(corpus, config);
  CHECK(f.vocabulary.tokens == std::vector<std::string>{"b"});
  config.min_df = 3;
  CHECK_THROWS_AS(featurize_bow(corpus, config), DataError);
}

TEST_CASE("featurize_bow: tokenization lowercases and splits on punctuation") {
  CHECK(tokenize("Great,GREAT film!! 10/10", BowConfig{}) ==
        std::vector<std::string>{"great", "great", "film", "10", "10"});
}

TEST_CASE("featurize_bow: test tokens never reach the vocabulary") {
  Corpus corpus;
  corpus.train.push_back({"good plot good cast", 1, SplitKind::kTrain});
  corpus.train.push_back({"bad plot", 0, SplitKind::kTrain});
  corpus.test.push_back({"good unseen unseen words", 1, SplitKind::kTest});
  corpus.test.push_back({"unseen bad", 0, SplitKind::kTest});
  const BowConfig config = unpruned(Weighting::kCount);
  const BowFeatures full = featurize_bow(corpus, config);
  Corpus train_only = corpus;
  train_only.test.clear();
  CHECK(full.vocabulary.manifest() == featurize_bow(train_only, config).vocabulary.manifest());
  CHECK(full.vocabulary.column("unseen") == -1);
  // The out-of-vocabulary test row keeps only known tokens.
  const Eigen::VectorXd row = full.splits.test.row(0).transpose();
  CHECK(row.sum() == 2.0);
}

TEST_CASE("featurize_bow: manifests are reproducible and round-trip") {
  Corpus corpus;
  corpus.train.push_back({"x y z", 1, SplitKind::kTrain});
  corpus.train.push_back({"y z w", 0, SplitKind::kTrain});
  BowConfig config = unpruned(Weighting::kTfidf);
  const auto first = featurize_bow(corpus, config).vocabulary.manifest();
  CHECK(first == featurize_bow(corpus, config).vocabulary.manifest());
  CHECK(Vocabulary::from_manifest(first).manifest() == first);
}

std::vector<EmbeddingRecord> three_records() {
  return {{1, SplitKind::kTrain, {0.1, -2.5, 3.0e-300, 7.0}},
          {0, SplitKind::kTrain, {1.0 / 3.0, 0.0, -0.0, 1e10}},
          {1, SplitKind::kTest, {5.0, 4.0, 3.0, 2.0}}};
}

TEST_CASE("embeddings: a bias column is appended") {
  const auto path = scratch("three.emb");
  write_embedding_records(path, three_records());
  const DatasetSplits splits = load_embeddings(path);
  CHECK(splits.train.size() == 2);
  CHECK(splits.test.size() == 1);
  CHECK(splits.train.dimension() == 5);
  CHECK(splits.test.row(0).coeff(4) == 1.0);
}

TEST_CASE("embeddings: a dimension mismatch cites the record") {
  auto records = three_records();
  records[1].values.pop_back();
  const std::string message = error_of([&] { embedding_splits(records); });
  CHECK(message.find("record 2") != std::string::npos);
  CHECK_THROWS_AS(embedding_splits(records), DataError);
}

TEST_CASE("embeddings: write then read is bitwise exact") {
  const auto path = scratch("roundtrip.emb");
  const auto records = three_records();
  write_embedding_records(path, records);
  const auto back = read_embedding_records(path);
  REQUIRE(back.size() == records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    CHECK(back[r].label == records[r].label);
    CHECK(back[r].split == records[r].split);
    REQUIRE(back[r].values.size() == records[r].values.size());
    CHECK(std::memcmp(back[r].values.data(), records[r].values.data(),
                      records[r].values.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("synthetic: the same seed gives identical splits") {
  SyntheticSpec spec;
  spec.seed = 42;
  const DatasetSplits a = make_synthetic(spec);
  const DatasetSplits b = make_synthetic(spec);
  CHECK(Eigen::MatrixXd(a.train.features()) == Eigen::MatrixXd(b.train.features()));
  CHECK(Eigen::MatrixXd(a.test.features()) == Eigen::MatrixXd(b.test.features()));
  CHECK(a.train.labels() == b.train.labels());
  spec.seed = 43;
  CHECK(Eigen::MatrixXd(make_synthetic(spec).train.features()) != Eigen::MatrixXd(a.train.features()));
}

TEST_CASE("synthetic: wide separation is linearly separable in practice") {
  SyntheticSpec spec;
  spec.seed = 1;
  spec.dimension = 2;
  spec.class_separation = 10.0;
  spec.n_test = 500;
  CHECK(accuracy_of(make_synthetic(spec)) >= 0.99);
}

TEST_CASE("synthetic: half the labels flipped leaves chance accuracy") {
  std::vector<double> accuracies;
  for (std::uint64_t seed : {1, 2, 3}) {
    SyntheticSpec spec;
    spec.seed = seed;
    spec.noise_rate = 0.5;
    spec.n_test = 500;
    accuracies.push_back(accuracy_of(make_synthetic(spec)));
  }
  std::sort(accuracies.begin(), accuracies.end());
  CHECK(accuracies[1] >= 0.4);
  CHECK(accuracies[1] <= 0.6);
}

TEST_CASE("synthetic: invalid sizes are input errors") {
  SyntheticSpec spec;
  spec.n_train = 0;
  CHECK_THROWS_AS(make_synthetic(spec), InputError);
  spec = SyntheticSpec{};
  spec.noise_rate = 1.5;
  CHECK_THROWS_AS(make_synthetic(spec), InputError);
}

}  // namespace
}  // namespace flipset

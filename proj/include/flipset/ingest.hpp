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

#ifndef FLIPSET_INGEST_HPP_
#define FLIPSET_INGEST_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "flipset/dataset.hpp"

namespace flipset {

struct CorpusRecord {
  std::string text;
  int label = 0;
  SplitKind split = SplitKind::kTrain;
};

struct Corpus {
  std::vector<CorpusRecord> train;
  std::vector<CorpusRecord> test;
};

enum class CorpusFormat { kCsv, kJsonl };

CorpusFormat parse_corpus_format(std::string_view name);
std::string_view to_string(CorpusFormat format);

// Reads text/label/split records in file order. CSV needs a header naming
// the three columns; JSONL needs the three fields on every line. Errors cite
// the 1-based line number.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);

enum class Weighting { kBinary, kCount, kTfidf };
Weighting parse_weighting(std::string_view name);
std::string_view to_string(Weighting weighting);

struct BowConfig {
  bool lowercase = true;
  // Only "alnum" is supported: tokens are maximal runs of ASCII letters and
  // digits; everything else separates.
  std::string token_pattern = "alnum";
  int min_df = 2;
  int max_vocab = 10000;
  Weighting weighting = Weighting::kCount;

  void validate() const;
};

std::vector<std::string> tokenize(std::string_view text, const BowConfig& config);

struct Vocabulary {
  std::vector<std::string> tokens;  // column order
  std::vector<Index> document_frequency;
  std::vector<double> idf;
  Index n_documents = 0;
  BowConfig config;

  Index size() const { return static_cast<Index>(tokens.size()); }
  // -1 if absent.
  Index column(const std::string& token) const;
  nlohmann::json manifest() const;
  static Vocabulary from_manifest(const nlohmann::json& manifest);

  std::unordered_map<std::string, Index> index;
};

struct BowFeatures {
  DatasetSplits splits;
  Vocabulary vocabulary;
};

// Builds the vocabulary from the training records only, then featurizes both
// splits. The last column is a constant bias feature.
BowFeatures featurize_bow(const Corpus& corpus, const BowConfig& config);

Vocabulary build_vocabulary(const std::vector<CorpusRecord>& train, const BowConfig& config);
Dataset featurize_records(const std::vector<CorpusRecord>& records, const Vocabulary& vocabulary,
                          SplitKind kind);

// Binary embedding file, little-endian throughout:
//   header: uint64 n, uint64 d
//   n rows: uint8 label, uint8 split (0 train, 1 test), d x float64
struct EmbeddingRecord {
  int label = 0;
  SplitKind split = SplitKind::kTrain;
  std::vector<double> values;
};

std::vector<EmbeddingRecord> read_embedding_records(const std::filesystem::path& path);
void write_embedding_records(const std::filesystem::path& path,
                             const std::vector<EmbeddingRecord>& records);

// Dense splits with a bias column appended (d + 1 features). Records must
// share one dimension; the error names the first that does not, counting
// records from 1.
DatasetSplits embedding_splits(const std::vector<EmbeddingRecord>& records);
DatasetSplits load_embeddings(const std::filesystem::path& path);

struct SyntheticSpec {
  std::uint64_t seed = 0;
  Index n_train = 200;
  Index n_test = 50;
  Index dimension = 10;
  double class_separation = 2.0;
  double noise_rate = 0.0;

  void validate() const;
};

// Two unit-variance Gaussian blobs centred at +-(class_separation / 2) u for
// a seeded random unit vector u. Labels are fair coin flips, then each is
// flipped with probability noise_rate. A bias column is appended.
DatasetSplits make_synthetic(const SyntheticSpec& spec);

// Appends a constant-1 column.
SparseRows<double> with_bias(const Matrix<double>& dense);

}  // namespace flipset

#endif  // FLIPSET_INGEST_HPP_

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

#include "flipset/ingest.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "flipset/error.hpp"

namespace flipset {

namespace {

static_assert(std::endian::native == std::endian::little,
              "embedding I/O assumes a little-endian host");

int parse_label(const nlohmann::json& value, const std::string& where) {
  int label = -1;
  if (value.is_number_integer()) {
    label = value.get<int>();
  } else if (value.is_string()) {
    const auto& s = value.get_ref<const std::string&>();
    if (s == "0" || s == "1") label = s[0] - '0';
    else throw DataError(where + ": label '" + s + "' is not 0 or 1");
  } else {
    throw DataError(where + ": label must be an integer 0 or 1");
  }
  if (label != 0 && label != 1) {
    throw DataError(where + ": non-binary label " + std::to_string(label));
  }
  return label;
}

SplitKind parse_split(const std::string& value, const std::string& where) {
  if (value == "train") return SplitKind::kTrain;
  if (value == "test") return SplitKind::kTest;
  throw DataError(where + ": split must be 'train' or 'test', got '" + value + "'");
}

void add_record(Corpus& corpus, CorpusRecord record) {
  (record.split == SplitKind::kTrain ? corpus.train : corpus.test).push_back(std::move(record));
}

Corpus load_jsonl(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(where + ": malformed JSON (" + e.what() + ")");
    }
    if (!row.is_object()) throw DataError(where + ": expected a JSON object");
    for (const char* field : {"text", "label", "split"}) {
      if (!row.contains(field)) throw DataError(where + ": missing field '" + field + "'");
    }
    if (!row["text"].is_string() || !row["split"].is_string()) {
      throw DataError(where + ": 'text' and 'split' must be strings");
    }
    add_record(corpus, {row["text"].get<std::string>(), parse_label(row["label"], where),
                        parse_split(row["split"].get<std::string>(), where)});
  }
  return corpus;
}

// RFC 4180 style: quoted fields may contain separators, doubled quotes and
// newlines. Returns false at end of input.
bool read_csv_row(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no) {
  fields.clear();
  int c = in.peek();
  if (c == EOF) return false;
  ++line_no;
  std::string field;
  bool quoted = false;
  bool any = false;
  while (true) {
    c = in.get();
    if (c == EOF) {
      if (quoted) throw DataError("line " + std::to_string(line_no) + ": unterminated quote");
      break;
    }
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(static_cast<char>(c));
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field.push_back(static_cast<char>(c));
    }
  }
  if (any) fields.push_back(std::move(field));
  return true;
}

Corpus load_csv(std::istream& in) {
  Corpus corpus;
  std::vector<std::string> fields;
  std::size_t line_no = 0;
  if (!read_csv_row(in, fields, line_no)) throw DataError("csv: empty file");
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < fields.size(); ++i) column[fields[i]] = i;
  for (const char* name : {"text", "label", "split"}) {
    if (!column.count(name)) throw DataError(std::string("csv header lacks column '") + name + "'");
  }
  while (true) {
    const std::size_t start_line = line_no + 1;
    if (!read_csv_row(in, fields, line_no)) break;
    if (fields.empty() || (fields.size() == 1 && fields[0].empty())) continue;
    const std::string where = "line " + std::to_string(start_line);
    if (fields.size() != column.size()) {
      throw DataError(where + ": expected " + std::to_string(column.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    add_record(corpus, {fields[column["text"]], parse_label(fields[column["label"]], where),
                        parse_split(fields[column["split"]], where)});
  }
  return corpus;
}

}  // namespace

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "csv") return CorpusFormat::kCsv;
  if (name == "jsonl") return CorpusFormat::kJsonl;
  throw InputError("unknown corpus format '" + std::string(name) + "'");
}

std::string_view to_string(CorpusFormat format) {
  return format == CorpusFormat::kCsv ? "csv" : "jsonl";
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open corpus file " + path.string());
  return format == CorpusFormat::kCsv ? load_csv(in) : load_jsonl(in);
}

Weighting parse_weighting(std::string_view name) {
  if (name == "binary") return Weighting::kBinary;
  if (name == "count") return Weighting::kCount;
  if (name == "tfidf") return Weighting::kTfidf;
  throw InputError("unknown weighting '" + std::string(name) + "'");
}

std::string_view to_string(Weighting weighting) {
  switch (weighting) {
    case Weighting::kBinary:
      return "binary";
    case Weighting::kCount:
      return "count";
    case Weighting::kTfidf:
      return "tfidf";
  }
  return "count";
}

void BowConfig::validate() const {
  if (min_df < 1) throw InputError("bow: min_df must be >= 1");
  if (max_vocab < 1) throw InputError("bow: max_vocab must be >= 1");
  if (token_pattern != "alnum") {
    throw InputError("bow: unsupported token_pattern '" + token_pattern + "'");
  }
}

std::vector<std::string> tokenize(std::string_view text, const BowConfig& config) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      current.push_back(config.lowercase ? static_cast<char>(std::tolower(c)) : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Index Vocabulary::column(const std::string& token) const {
  const auto it = index.find(token);
  return it == index.end() ? -1 : it->second;
}

nlohmann::json Vocabulary::manifest() const {
  nlohmann::json j;
  j["tokens"] = tokens;
  j["document_frequency"] = document_frequency;
  j["idf"] = idf;
  j["n_documents"] = n_documents;
  j["bias_column"] = size();
  j["config"] = {{"lowercase", config.lowercase},
                 {"token_pattern", config.token_pattern},
                 {"min_df", config.min_df},
                 {"max_vocab", config.max_vocab},
                 {"weighting", std::string(to_string(config.weighting))}};
  return j;
}

Vocabulary Vocabulary::from_manifest(const nlohmann::json& manifest) {
  try {
    Vocabulary v;
    v.tokens = manifest.at("tokens").get<std::vector<std::string>>();
    v.document_frequency = manifest.at("document_frequency").get<std::vector<Index>>();
    v.idf = manifest.at("idf").get<std::vector<double>>();
    v.n_documents = manifest.at("n_documents").get<Index>();
    const auto& c = manifest.at("config");
    v.config.lowercase = c.at("lowercase").get<bool>();
    v.config.token_pattern = c.at("token_pattern").get<std::string>();
    v.config.min_df = c.at("min_df").get<int>();
    v.config.max_vocab = c.at("max_vocab").get<int>();
    v.config.weighting = parse_weighting(c.at("weighting").get<std::string>());
    for (std::size_t i = 0; i < v.tokens.size(); ++i) {
      v.index.emplace(v.tokens[i], static_cast<Index>(i));
    }
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("vocabulary manifest: ") + e.what());
  }
}

Vocabulary build_vocabulary(const std::vector<CorpusRecord>& train, const BowConfig& config) {
  config.validate();
  std::map<std::string, Index> df;
  for (const auto& record : train) {
    auto tokens = tokenize(record.text, config);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) ++df[t];
  }
  std::vector<std::pair<std::string, Index>> kept;
  for (const auto& [token, count] : df) {
    if (count >= config.min_df) kept.emplace_back(token, count);
  }
  // Most frequent first, alphabetical among equals; then columns in
  // alphabetical order.
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (kept.size() > static_cast<std::size_t>(config.max_vocab)) {
    kept.resize(static_cast<std::size_t>(config.max_vocab));
  }
  std::sort(kept.begin(), kept.end());
  if (kept.empty()) {
    throw DataError("bow: vocabulary is empty after pruning (min_df = " +
                    std::to_string(config.min_df) + ")");
  }
  Vocabulary v;
  v.config = config;
  v.n_documents = static_cast<Index>(train.size());
  for (const auto& [token, count] : kept) {
    v.index.emplace(token, static_cast<Index>(v.tokens.size()));
    v.tokens.push_back(token);
    v.document_frequency.push_back(count);
    v.idf.push_back(std::log((1.0 + static_cast<double>(v.n_documents)) /
                             (1.0 + static_cast<double>(count))) +
                    1.0);
  }
  return v;
}

Dataset featurize_records(const std::vector<CorpusRecord>& records, const Vocabulary& vocabulary,
                          SplitKind kind) {
  const Index d = vocabulary.size() + 1;
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<int> labels;
  std::vector<std::optional<std::string>> texts;
  labels.reserve(records.size());
  texts.reserve(records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    std::map<Index, double> counts;
    for (const auto& token : tokenize(records[r].text, vocabulary.config)) {
      const Index col = vocabulary.column(token);
      if (col >= 0) counts[col] += 1.0;
    }
    const auto row = static_cast<Index>(r);
    for (const auto& [col, count] : counts) {
      double value = count;
      switch (vocabulary.config.weighting) {
        case Weighting::kBinary:
          value = 1.0;
          break;
        case Weighting::kCount:
          break;
        case Weighting::kTfidf:
          value = count * vocabulary.idf[static_cast<std::size_t>(col)];
          break;
      }
      triplets.emplace_back(row, col, value);
    }
    triplets.emplace_back(row, d - 1, 1.0);
    labels.push_back(records[r].label);
    texts.emplace_back(records[r].text);
  }
  SparseRows<double> x(static_cast<Index>(records.size()), d);
  x.setFromTriplets(triplets.begin(), triplets.end());
  return Dataset(std::move(x), std::move(labels), std::move(texts), kind);
}

BowFeatures featurize_bow(const Corpus& corpus, const BowConfig& config) {
  BowFeatures out;
  out.vocabulary = build_vocabulary(corpus.train, config);
  out.splits.train = featurize_records(corpus.train, out.vocabulary, SplitKind::kTrain);
  out.splits.test = featurize_records(corpus.test, out.vocabulary, SplitKind::kTest);
  return out;
}

std::vector<EmbeddingRecord> read_embedding_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open embedding file " + path.string());
  std::uint64_t n = 0, d = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&d), sizeof d);
  if (!in) throw DataError("embedding file " + path.string() + ": truncated header");
  if (d == 0) throw DataError("embedding file: dimension is 0");
  const auto file_size = std::filesystem::file_size(path);
  const std::uint64_t row_bytes = 2 + 8 * d;
  if (file_size != 16 + n * row_bytes) {
    // Locate the first record that does not fit.
    const std::uint64_t whole = (file_size - 16) / row_bytes;
    throw DataError("embedding file: record " + std::to_string(whole + 1) +
                    " is inconsistent with dimension " + std::to_string(d) + " (file holds " +
                    std::to_string(file_size - 16) + " payload bytes for " +
                    std::to_string(n) + " records)");
  }
  std::vector<EmbeddingRecord> records(n);
  for (std::uint64_t r = 0; r < n; ++r) {
    std::uint8_t label = 0, split = 0;
    in.read(reinterpret_cast<char*>(&label), 1);
    in.read(reinterpret_cast<char*>(&split), 1);
    if (label > 1) {
      throw DataError("embedding file: record " + std::to_string(r + 1) + " has label " +
                      std::to_string(label));
    }
    if (split > 1) {
      throw DataError("embedding file: record " + std::to_string(r + 1) + " has split flag " +
                      std::to_string(split));
    }
    auto& rec = records[r];
    rec.label = label;
    rec.split = split == 0 ? SplitKind::kTrain : SplitKind::kTest;
    rec.values.resize(d);
    in.read(reinterpret_cast<char*>(rec.values.data()), static_cast<std::streamsize>(8 * d));
  }
  if (!in) throw DataError("embedding file: read error");
  return records;
}

void write_embedding_records(const std::filesystem::path& path,
                             const std::vector<EmbeddingRecord>& records) {
  const std::uint64_t n = records.size();
  const std::uint64_t d = records.empty() ? 0 : records.front().values.size();
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (records[r].values.size() != d) {
      throw DataError("embedding record " + std::to_string(r + 1) + " has dimension " +
                      std::to_string(records[r].values.size()) + ", expected " +
                      std::to_string(d));
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write embedding file " + path.string());
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&d), sizeof d);
  for (const auto& rec : records) {
    const auto label = static_cast<std::uint8_t>(rec.label);
    const std::uint8_t split = rec.split == SplitKind::kTrain ? 0 : 1;
    out.write(reinterpret_cast<const char*>(&label), 1);
    out.write(reinterpret_cast<const char*>(&split), 1);
    out.write(reinterpret_cast<const char*>(rec.values.data()),
              static_cast<std::streamsize>(8 * d));
  }
  if (!out) throw InputError("write failed for " + path.string());
}

SparseRows<double> with_bias(const Matrix<double>& dense) {
  Matrix<double> full(dense.rows(), dense.cols() + 1);
  full.leftCols(dense.cols()) = dense;
  full.col(dense.cols()).setOnes();
  return full.sparseView(0.0, 0.0);
}

DatasetSplits embedding_splits(const std::vector<EmbeddingRecord>& records) {
  const Index d = records.empty() ? 0 : static_cast<Index>(records.front().values.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (static_cast<Index>(records[r].values.size()) != d) {
      throw DataError("embedding record " + std::to_string(r + 1) + " has dimension " +
                      std::to_string(records[r].values.size()) + ", expected " +
                      std::to_string(d));
    }
  }
  auto build = [&](SplitKind kind) {
    Index rows = 0;
    for (const auto& r : records) rows += r.split == kind;
    Matrix<double> x(rows, d);
    std::vector<int> labels;
    Index row = 0;
    for (const auto& r : records) {
      if (r.split != kind) continue;
      x.row(row++) = Eigen::Map<const Eigen::RowVectorXd>(r.values.data(), d);
      labels.push_back(r.label);
    }
    return Dataset(with_bias(x), std::move(labels), {}, kind);
  };
  return {build(SplitKind::kTrain), build(SplitKind::kTest)};
}

DatasetSplits load_embeddings(const std::filesystem::path& path) {
  return embedding_splits(read_embedding_records(path));
}

void SyntheticSpec::validate() const {
  if (n_train < 1) throw InputError("synthetic: n_train must be >= 1");
  if (n_test < 0) throw InputError("synthetic: n_test must be >= 0");
  if (dimension < 1) throw InputError("synthetic: dimension must be >= 1");
  if (!(class_separation >= 0)) throw InputError("synthetic: class_separation must be >= 0");
  if (!(noise_rate >= 0 && noise_rate <= 1)) {
    throw InputError("synthetic: noise_rate must lie in [0, 1]");
  }
}

DatasetSplits make_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution noise(spec.noise_rate);

  Eigen::VectorXd direction(spec.dimension);
  do {
    for (Index j = 0; j < spec.dimension; ++j) direction[j] = normal(rng);
  } while (direction.norm() == 0.0);
  direction.normalize();
  const Eigen::VectorXd offset = 0.5 * spec.class_separation * direction;

  auto draw = [&](Index rows, SplitKind kind) {
    Matrix<double> x(rows, spec.dimension);
    std::vector<int> labels(static_cast<std::size_t>(rows));
    for (Index i = 0; i < rows; ++i) {
      const int y = coin(rng) ? 1 : 0;
      for (Index j = 0; j < spec.dimension; ++j) x(i, j) = normal(rng);
      x.row(i) += (y == 1 ? offset : Eigen::VectorXd(-offset)).transpose();
      labels[static_cast<std::size_t>(i)] = noise(rng) ? 1 - y : y;
    }
    return Dataset(with_bias(x), std::move(labels), {}, kind);
  };
  DatasetSplits out;
  out.train = draw(spec.n_train, SplitKind::kTrain);
  out.test = draw(spec.n_test, SplitKind::kTest);
  return out;
}

}  // namespace flipset

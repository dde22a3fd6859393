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

#ifndef FLIPSET_DATASET_HPP_
#define FLIPSET_DATASET_HPP_

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flipset/error.hpp"

namespace flipset {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using SparseRows = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

enum class SplitKind { kTrain, kTest };

template <typename Scalar>
struct BasicInstance {
  Index index = 0;
  Eigen::SparseVector<Scalar> features;
  int label = 0;
  std::optional<std::string> text;
};

// An immutable featurized split. Rows are instances with dense indices
// 0..N-1; labels are stored both as ints and as a 0/1 scalar vector so the
// risk functions can use them in Eigen expressions directly.
template <typename Scalar>
class BasicDataset {
 public:
  BasicDataset() = default;

  BasicDataset(SparseRows<Scalar> features, std::vector<int> labels,
               std::vector<std::optional<std::string>> texts, SplitKind kind)
      : features_(std::move(features)),
        labels_(std::move(labels)),
        texts_(std::move(texts)),
        kind_(kind) {
    if (static_cast<Index>(labels_.size()) != features_.rows()) {
      throw InputError("dataset: " + std::to_string(labels_.size()) +
                       " labels for " + std::to_string(features_.rows()) +
                       " feature rows");
    }
    if (texts_.empty()) texts_.resize(labels_.size());
    if (texts_.size() != labels_.size()) {
      throw InputError("dataset: text count does not match instance count");
    }
    label_vector_.resize(features_.rows());
    for (Index i = 0; i < features_.rows(); ++i) {
      const int y = labels_[static_cast<std::size_t>(i)];
      if (y != 0 && y != 1) {
        throw DataError("dataset: instance " + std::to_string(i) +
                        " has non-binary label " + std::to_string(y));
      }
      label_vector_[i] = static_cast<Scalar>(y);
    }
    features_.makeCompressed();
  }

  static BasicDataset FromDense(const Matrix<Scalar>& rows,
                                std::vector<int> labels,
                                SplitKind kind = SplitKind::kTrain) {
    return BasicDataset(rows.sparseView(Scalar(0), Scalar(0)),
                        std::move(labels), {}, kind);
  }

  Index size() const { return features_.rows(); }
  bool empty() const { return size() == 0; }
  Index dimension() const { return features_.cols(); }
  SplitKind kind() const { return kind_; }

  const SparseRows<Scalar>& features() const { return features_; }
  const Vector<Scalar>& labels() const { return label_vector_; }
  int label(Index i) const { return labels_.at(static_cast<std::size_t>(i)); }
  const std::optional<std::string>& text(Index i) const {
    return texts_.at(static_cast<std::size_t>(i));
  }
  bool has_texts() const {
    for (const auto& t : texts_) {
      if (t) return true;
    }
    return false;
  }

  auto row(Index i) const { return features_.row(i); }

  BasicInstance<Scalar> instance(Index i) const {
    check_index(i);
    return {i, Eigen::SparseVector<Scalar>(features_.row(i).transpose()),
            label(i), text(i)};
  }

  void check_index(Index i) const {
    if (i < 0 || i >= size()) {
      throw InputError("index " + std::to_string(i) + " out of range [0, " +
                       std::to_string(size()) + ")");
    }
  }

  // Number of rows with label 1.
  Index count_positive() const {
    Index n = 0;
    for (int y : labels_) n += y;
    return n;
  }

 private:
  SparseRows<Scalar> features_;
  std::vector<int> labels_;
  Vector<Scalar> label_vector_;
  std::vector<std::optional<std::string>> texts_;
  SplitKind kind_ = SplitKind::kTrain;
};

using Dataset = BasicDataset<double>;
using Instance = BasicInstance<double>;

struct DatasetSplits {
  Dataset train;
  Dataset test;
};

}  // namespace flipset

#endif  // FLIPSET_DATASET_HPP_

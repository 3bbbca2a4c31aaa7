#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kkm {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowMatrixX =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// n points in d dimensions, one point per row, with optional class labels.
template <typename Scalar = double>
struct BasicDataset {
  using scalar_type = Scalar;

  MatrixX<Scalar> points;
  std::optional<std::vector<int>> labels;
  std::string name;

  Index size() const { return points.rows(); }
  Index dim() const { return points.cols(); }
  bool has_labels() const { return labels.has_value(); }
};

using Dataset = BasicDataset<double>;

/// Throws std::invalid_argument when the dataset breaks its invariants:
/// at least one point and one dimension, finite entries, one label per point.
template <typename Scalar>
void validate(const BasicDataset<Scalar>& data) {
  if (data.size() < 1 || data.dim() < 1)
    throw std::invalid_argument("dataset must have at least one point and one dimension");
  if (!data.points.allFinite())
    throw std::invalid_argument("dataset '" + data.name + "' contains non-finite values");
  if (data.labels && static_cast<Index>(data.labels->size()) != data.size())
    throw std::invalid_argument("label count does not match point count");
}

inline std::size_t num_classes(const std::vector<int>& labels) {
  return std::set<int>(labels.begin(), labels.end()).size();
}

/// Per-column z-score. Constant columns are centred but left unscaled.
template <typename Scalar>
BasicDataset<Scalar> standardized(BasicDataset<Scalar> data) {
  const Index n = data.size();
  for (Index c = 0; c < data.dim(); ++c) {
    auto col = data.points.col(c);
    const Scalar mean = col.mean();
    col.array() -= mean;
    const Scalar sd = n > 1 ? std::sqrt(col.squaredNorm() / Scalar(n - 1)) : Scalar(0);
    if (sd > Scalar(0)) col /= sd;
  }
  return data;
}

/// Rows `indices` of `data`, labels included.
template <typename Scalar>
BasicDataset<Scalar> subset(const BasicDataset<Scalar>& data, const std::vector<Index>& indices) {
  BasicDataset<Scalar> out;
  out.name = data.name;
  out.points.resize(static_cast<Index>(indices.size()), data.dim());
  std::vector<int> labels;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.points.row(static_cast<Index>(i)) = data.points.row(indices[i]);
    if (data.labels) labels.push_back((*data.labels)[static_cast<std::size_t>(indices[i])]);
  }
  if (data.labels) out.labels = std::move(labels);
  return out;
}

}  // namespace kkm

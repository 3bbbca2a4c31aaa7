#pragma once

// Generators and brute-force oracles shared by the unit tests. Nothing here
// calls into the library's algorithms; everything is recomputed from scratch.

#include <kkm/dataset.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace test {

using kkm::Index;

inline Eigen::MatrixXd gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

inline kkm::Dataset random_data(Index n, Index d, std::uint64_t seed) {
  kkm::Dataset data;
  data.points = gaussian_matrix(n, d, seed);
  data.name = "random";
  return data;
}

/// Labelled blobs around `centers` (one row per class), point i in class i % k.
inline kkm::Dataset blobs(const Eigen::MatrixXd& centers, Index n, double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, spread);
  kkm::Dataset data;
  data.name = "blobs";
  data.points.resize(n, centers.cols());
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Index c = i % centers.rows();
    for (Index j = 0; j < centers.cols(); ++j) data.points(i, j) = centers(c, j) + g(rng);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(c);
  }
  data.labels = std::move(labels);
  return data;
}

inline kkm::Dataset three_blobs(Index n, std::uint64_t seed, double spread = 0.5) {
  Eigen::MatrixXd c(3, 2);
  c << 0, 0, 4, 0, 2, 3.5;
  return blobs(c, n, spread, seed);
}

/// Scalar Gaussian kernel written out loop by loop.
inline double gauss(double sigma, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  double d = 0;
  for (Index i = 0; i < x.size(); ++i) d += (x(i) - y(i)) * (x(i) - y(i));
  return std::exp(-sigma * d);
}

inline Eigen::MatrixXd gram(double sigma, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd K(X.rows(), X.rows());
  for (Index i = 0; i < X.rows(); ++i)
    for (Index j = 0; j < X.rows(); ++j) K(i, j) = gauss(sigma, X.row(i).transpose(), X.row(j).transpose());
  return K;
}

/// Kernel k-means objective from Gram entries alone:
/// (1/n) sum_c sum_{i in c} |phi(x_i) - mean_c|^2.
inline double kernel_objective(const Eigen::MatrixXd& K, const std::vector<int>& assign, int k) {
  const Index n = K.rows();
  double total = 0;
  for (int c = 0; c < k; ++c) {
    std::vector<Index> members;
    for (Index i = 0; i < n; ++i)
      if (assign[static_cast<std::size_t>(i)] == c) members.push_back(i);
    if (members.empty()) continue;
    const double m = static_cast<double>(members.size());
    double block = 0;
    for (Index a : members)
      for (Index b : members) block += K(a, b);
    for (Index i : members) {
      double cross = 0;
      for (Index j : members) cross += K(i, j);
      total += K(i, i) - 2.0 * cross / m + block / (m * m);
    }
  }
  return total / static_cast<double>(n);
}

/// Squared-distance k-means objective for explicit points.
inline double point_objective(const Eigen::MatrixXd& X, const std::vector<int>& assign, int k) {
  return kernel_objective(X * X.transpose(), assign, k);
}

/// Calls `visit` with every assignment of n points to k labels in which
/// every label is used (k^n candidates, so keep n small).
inline void for_each_partition(int n, int k, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  while (true) {
    std::vector<bool> used(static_cast<std::size_t>(k), false);
    for (int v : a) used[static_cast<std::size_t>(v)] = true;
    bool all = true;
    for (bool u : used) all = all && u;
    if (all) visit(a);
    int i = 0;
    while (i < n && ++a[static_cast<std::size_t>(i)] == k) a[static_cast<std::size_t>(i++)] = 0;
    if (i == n) return;
  }
}

/// Lowest kernel objective over every partition into exactly k clusters.
inline double brute_force_minimum(const Eigen::MatrixXd& K, int k) {
  double best = std::numeric_limits<double>::infinity();
  for_each_partition(static_cast<int>(K.rows()), k,
                     [&](const std::vector<int>& a) { best = std::min(best, kernel_objective(K, a, k)); });
  return best;
}

/// tr(K - K_MB K_BB^{-1} K_MB^T) for a pivot set B, straight from the formula.
inline double nystrom_residual(const Eigen::MatrixXd& K, const std::vector<Index>& pivots) {
  const Index n = K.rows(), s = static_cast<Index>(pivots.size());
  Eigen::MatrixXd KMB(n, s), KBB(s, s);
  for (Index j = 0; j < s; ++j) {
    KMB.col(j) = K.col(pivots[static_cast<std::size_t>(j)]);
    for (Index i = 0; i < s; ++i) KBB(i, j) = K(pivots[static_cast<std::size_t>(i)], pivots[static_cast<std::size_t>(j)]);
  }
  const Eigen::MatrixXd approx = KMB * KBB.fullPivLu().solve(KMB.transpose());
  return (K - approx).trace();
}

}  // namespace test

#pragma once

#include <kkm/dataset.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace kkm {

/// Result of a k-means style clustering in some embedding space.
template <typename Scalar = double>
struct ClusterModel {
  std::vector<int> assignments;
  /// k x m centers in the embedding the clustering ran in.
  MatrixX<Scalar> centers;
  /// (1/n) sum_i |v_i - center(i)|^2.
  Scalar objective = 0;
  /// Objective after each center update, in order.
  std::vector<Scalar> objective_history;
  int iterations = 0;
  bool converged = false;
  /// Dimension of the embedding the points were clustered in.
  Index embedding_dim = 0;

  Index k() const { return centers.rows(); }
};

struct LloydOptions {
  int max_iter = 1000;
  /// Relative objective change below which iteration stops.
  double tol = 1e-6;
};

namespace detail {

inline void check_k(Index n, Index k) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  if (k > n)
    throw std::invalid_argument("k = " + std::to_string(k) + " exceeds the number of points (" +
                                std::to_string(n) + ")");
}

}  // namespace detail

/// k-means++ seeding over an abstract point set. `sq_dist_to(c, out)` fills
/// `out` with the squared distance from every point to point c.
/// Returns k distinct indices; once every remaining D^2 weight is zero
/// (duplicates), further picks are uniform among unchosen indices.
template <typename Scalar, typename DistFn>
std::vector<Index> kmeans_pp_select(Index n, Index k, std::uint64_t seed, DistFn&& sq_dist_to) {
  detail::check_k(n, k);
  std::mt19937_64 rng(seed);
  std::vector<Index> chosen;
  chosen.reserve(static_cast<std::size_t>(k));
  std::vector<bool> taken(static_cast<std::size_t>(n), false);

  auto take = [&](Index c) {
    chosen.push_back(c);
    taken[static_cast<std::size_t>(c)] = true;
  };

  take(std::uniform_int_distribution<Index>(0, n - 1)(rng));
  VectorX<Scalar> d2, scratch;
  sq_dist_to(chosen.front(), d2);

  while (static_cast<Index>(chosen.size()) < k) {
    Scalar total = 0;
    for (Index i = 0; i < n; ++i)
      if (!taken[static_cast<std::size_t>(i)]) total += std::max(d2(i), Scalar(0));

    Index pick = -1;
    if (total > Scalar(0)) {
      const Scalar r = std::uniform_real_distribution<Scalar>(0, total)(rng);
      Scalar acc = 0;
      for (Index i = 0; i < n; ++i) {
        if (taken[static_cast<std::size_t>(i)] || d2(i) <= Scalar(0)) continue;
        acc += d2(i);
        pick = i;
        if (acc > r) break;
      }
    } else {
      const Index remaining = n - static_cast<Index>(chosen.size());
      Index skip = std::uniform_int_distribution<Index>(0, remaining - 1)(rng);
      for (Index i = 0; i < n; ++i) {
        if (taken[static_cast<std::size_t>(i)]) continue;
        if (skip-- == 0) {
          pick = i;
          break;
        }
      }
    }
    take(pick);
    sq_dist_to(pick, scratch);
    d2 = d2.cwiseMin(scratch);
  }
  return chosen;
}

/// Row indices picked by k-means++ seeding on the rows of `points`.
template <typename Derived>
std::vector<Index> kmeans_pp_indices(const Eigen::MatrixBase<Derived>& points, Index k,
                                     std::uint64_t seed) {
  using Scalar = typename Derived::Scalar;
  const auto& X = points.derived();
  return kmeans_pp_select<Scalar>(X.rows(), k, seed, [&](Index c, VectorX<Scalar>& out) {
    out = (X.rowwise() - X.row(c)).rowwise().squaredNorm();
  });
}

/// k x m matrix of initial centers chosen by k-means++ from the rows of `points`.
template <typename Derived>
MatrixX<typename Derived::Scalar> kmeans_pp_init(const Eigen::MatrixBase<Derived>& points, Index k,
                                                 std::uint64_t seed) {
  const auto idx = kmeans_pp_indices(points, k, seed);
  MatrixX<typename Derived::Scalar> centers(k, points.cols());
  for (Index j = 0; j < k; ++j) centers.row(j) = points.row(idx[static_cast<std::size_t>(j)]);
  return centers;
}

/// Means of the clusters given by `assignments`; clusters without members
/// get a zero row and a zero count.
template <typename Derived>
MatrixX<typename Derived::Scalar> cluster_means(const Eigen::MatrixBase<Derived>& points,
                                                const std::vector<int>& assignments, Index k,
                                                std::vector<Index>* counts = nullptr) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> sums = MatrixX<Scalar>::Zero(k, points.cols());
  std::vector<Index> count(static_cast<std::size_t>(k), 0);
  for (Index i = 0; i < points.rows(); ++i) {
    const int c = assignments[static_cast<std::size_t>(i)];
    sums.row(c) += points.row(i);
    ++count[static_cast<std::size_t>(c)];
  }
  for (Index j = 0; j < k; ++j)
    if (count[static_cast<std::size_t>(j)] > 0) sums.row(j) /= Scalar(count[static_cast<std::size_t>(j)]);
  if (counts) *counts = std::move(count);
  return sums;
}

/// (1/n) sum of squared distances from each point to the mean of its cluster,
/// evaluated directly from the assignment.
template <typename Derived>
typename Derived::Scalar clustering_objective(const Eigen::MatrixBase<Derived>& points,
                                              const std::vector<int>& assignments, Index k) {
  using Scalar = typename Derived::Scalar;
  const MatrixX<Scalar> means = cluster_means(points, assignments, k);
  Scalar total = 0;
  for (Index i = 0; i < points.rows(); ++i)
    total += (points.row(i) - means.row(assignments[static_cast<std::size_t>(i)])).squaredNorm();
  return total / Scalar(points.rows());
}

namespace detail {

/// Nearest center for every point. A point keeps its current cluster unless
/// another center is strictly closer.
template <typename Scalar>
bool assign_nearest(const MatrixX<Scalar>& X, const VectorX<Scalar>& x_sq, const MatrixX<Scalar>& centers,
                    std::vector<int>& assignments) {
  const Index n = X.rows();
  const Index k = centers.rows();
  const VectorX<Scalar> c_sq = centers.rowwise().squaredNorm();
  MatrixX<Scalar> cross(n, k);
  cross.noalias() = X * centers.transpose();
  bool changed = false;
  for (Index i = 0; i < n; ++i) {
    int best = assignments[static_cast<std::size_t>(i)];
    Scalar best_d = best >= 0 ? x_sq(i) - Scalar(2) * cross(i, best) + c_sq(best)
                              : std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < k; ++j) {
      const Scalar d = x_sq(i) - Scalar(2) * cross(i, j) + c_sq(j);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(j);
      }
    }
    if (best != assignments[static_cast<std::size_t>(i)]) {
      assignments[static_cast<std::size_t>(i)] = best;
      changed = true;
    }
  }
  return changed;
}

/// Moves points into empty clusters. Each empty cluster takes the point
/// farthest from its current center among clusters with more than one member.
template <typename Scalar>
void repair_empty(const MatrixX<Scalar>& X, std::vector<int>& assignments, MatrixX<Scalar>& centers,
                  std::vector<Index>& counts) {
  const Index k = centers.rows();
  for (Index j = 0; j < k; ++j) {
    if (counts[static_cast<std::size_t>(j)] > 0) continue;
    Index far = -1;
    Scalar far_d = -1;
    for (Index i = 0; i < X.rows(); ++i) {
      const int c = assignments[static_cast<std::size_t>(i)];
      if (counts[static_cast<std::size_t>(c)] < 2) continue;
      const Scalar d = (X.row(i) - centers.row(c)).squaredNorm();
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    const int donor = assignments[static_cast<std::size_t>(far)];
    const Scalar m = Scalar(counts[static_cast<std::size_t>(donor)]);
    centers.row(donor) = (centers.row(donor) * m - X.row(far)) / (m - Scalar(1));
    --counts[static_cast<std::size_t>(donor)];
    assignments[static_cast<std::size_t>(far)] = static_cast<int>(j);
    centers.row(j) = X.row(far);
    counts[static_cast<std::size_t>(j)] = 1;
  }
}

template <typename Scalar>
Scalar objective_for(const MatrixX<Scalar>& X, const std::vector<int>& assignments,
                     const MatrixX<Scalar>& centers) {
  Scalar total = 0;
  for (Index i = 0; i < X.rows(); ++i)
    total += (X.row(i) - centers.row(assignments[static_cast<std::size_t>(i)])).squaredNorm();
  return total / Scalar(X.rows());
}

}  // namespace detail

/// Lloyd iterations from explicit initial centers.
template <typename Derived>
ClusterModel<typename Derived::Scalar> lloyd_from(const Eigen::MatrixBase<Derived>& points,
                                                  MatrixX<typename Derived::Scalar> centers,
                                                  const LloydOptions& options = {}) {
  using Scalar = typename Derived::Scalar;
  const MatrixX<Scalar> X = points;
  const Index n = X.rows();
  const Index k = centers.rows();
  detail::check_k(n, k);
  if (centers.cols() != X.cols()) throw std::invalid_argument("lloyd: center dimension mismatch");
  if (options.max_iter < 1) throw std::invalid_argument("lloyd: max_iter must be at least 1");

  const VectorX<Scalar> x_sq = X.rowwise().squaredNorm();
  ClusterModel<Scalar> model;
  model.embedding_dim = X.cols();
  model.assignments.assign(static_cast<std::size_t>(n), -1);
  detail::assign_nearest(X, x_sq, centers, model.assignments);

  std::vector<Index> counts;
  Scalar previous = std::numeric_limits<Scalar>::infinity();
  for (int it = 1; it <= options.max_iter; ++it) {
    centers = cluster_means(X, model.assignments, k, &counts);
    detail::repair_empty(X, model.assignments, centers, counts);
    const Scalar objective = detail::objective_for(X, model.assignments, centers);
    model.objective_history.push_back(objective);
    model.iterations = it;

    const bool changed = detail::assign_nearest(X, x_sq, centers, model.assignments);
    if (!changed) {
      model.converged = true;
      break;
    }
    if (std::isfinite(previous) && previous - objective <= Scalar(options.tol) * previous) {
      model.converged = true;
      break;
    }
    previous = objective;
  }

  // Final centers and objective always reflect the returned assignment.
  centers = cluster_means(X, model.assignments, k, &counts);
  detail::repair_empty(X, model.assignments, centers, counts);
  model.objective = detail::objective_for(X, model.assignments, centers);
  if (model.objective < model.objective_history.back()) model.objective_history.push_back(model.objective);
  model.centers = std::move(centers);
  return model;
}

/// Lloyd's algorithm on the rows of `points`, seeded with k-means++.
template <typename Derived>
ClusterModel<typename Derived::Scalar> lloyd(const Eigen::MatrixBase<Derived>& points, Index k,
                                             std::uint64_t seed, const LloydOptions& options = {}) {
  detail::check_k(points.rows(), k);
  return lloyd_from(points, kmeans_pp_init(points, k, seed), options);
}

}  // namespace kkm

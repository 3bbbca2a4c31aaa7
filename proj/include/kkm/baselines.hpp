#pragma once

#include <kkm/dataset.hpp>
#include <kkm/kernel.hpp>
#include <kkm/kernel_kmeans.hpp>
#include <kkm/kmeans.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace kkm {

namespace detail {

/// Independent RNG stream derived from a user seed (splitmix64 finaliser).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t landmark_stream = 1;
inline constexpr std::uint64_t fourier_stream = 2;

/// Pseudo-inverse of an SPSD matrix (or its inverse square root when
/// `power` is -1/2), dropping eigenvalues below 1e-12 * lambda_max.
template <typename Scalar>
MatrixX<Scalar> spsd_pseudo_power(const MatrixX<Scalar>& A, Scalar power, Index* rank = nullptr) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(A);
  if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition of landmark block failed");
  const VectorX<Scalar>& lambda = eig.eigenvalues();
  const Scalar floor = Scalar(1e-12) * std::max(lambda.maxCoeff(), Scalar(0));
  VectorX<Scalar> scaled(lambda.size());
  Index r = 0;
  for (Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) > floor && lambda(i) > Scalar(0)) {
      scaled(i) = std::pow(lambda(i), power);
      ++r;
    } else {
      scaled(i) = Scalar(0);
    }
  }
  if (rank) *rank = r;
  return eig.eigenvectors() * scaled.asDiagonal() * eig.eigenvectors().transpose();
}

template <typename Scalar>
MatrixX<Scalar> landmark_columns(const KernelSpec& spec, const BasicDataset<Scalar>& data,
                                 const std::vector<Index>& landmarks) {
  MatrixX<Scalar> KMB(data.size(), static_cast<Index>(landmarks.size()));
  VectorX<Scalar> col;
  for (std::size_t j = 0; j < landmarks.size(); ++j) {
    kernel_column_into(spec, data, landmarks[j], col);
    KMB.col(static_cast<Index>(j)) = col;
  }
  return KMB;
}

template <typename Scalar>
MatrixX<Scalar> landmark_block(const MatrixX<Scalar>& KMB, const std::vector<Index>& landmarks) {
  const Index m = static_cast<Index>(landmarks.size());
  MatrixX<Scalar> KBB(m, m);
  for (Index i = 0; i < m; ++i) KBB.row(i) = KMB.row(landmarks[static_cast<std::size_t>(i)]);
  return Scalar(0.5) * (KBB + KBB.transpose());
}

}  // namespace detail

/// `count` distinct indices from [0, n), uniformly without replacement.
inline std::vector<Index> sample_without_replacement(Index n, Index count, std::uint64_t seed) {
  if (count < 0 || count > n)
    throw std::invalid_argument("cannot sample " + std::to_string(count) + " of " + std::to_string(n) +
                                " points without replacement");
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::mt19937_64 rng(seed);
  for (Index i = 0; i < count; ++i) {
    const Index j = std::uniform_int_distribution<Index>(i, n - 1)(rng);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(count));
  return idx;
}

/// Kernel k-means on the rows of L, where L L^T = K + jitter * I is a dense
/// Cholesky factorization. The jitter starts at 1e-12 * tr(K)/n and grows
/// tenfold up to 1e-6 * tr(K)/n.
template <typename Scalar>
ClusterModel<Scalar> kernel_chol_kmeans(const BasicDataset<Scalar>& data, const KernelSpec& spec,
                                        const ClusterOptions& options, Index guard = default_gram_guard,
                                        StageTimes* times = nullptr) {
  detail::check_k(data.size(), options.k);
  detail::StageClock clock;
  MatrixX<Scalar> K = full_gram(spec, data, guard);
  const Index n = K.rows();
  const Scalar scale = K.trace() / Scalar(n);
  MatrixX<Scalar> L;
  bool ok = false;
  for (Scalar jitter = Scalar(1e-12) * scale; jitter <= Scalar(1e-6) * scale * Scalar(1.0001); jitter *= 10) {
    Eigen::LLT<MatrixX<Scalar>> llt(K + jitter * MatrixX<Scalar>::Identity(n, n));
    if (llt.info() == Eigen::Success) {
      L = llt.matrixL();
      ok = true;
      break;
    }
  }
  if (!ok) throw std::runtime_error("dense Cholesky failed even with jitter 1e-6 * tr(K)/n");
  K.resize(0, 0);
  if (times) times->factorize_ms = clock.lap_ms();
  auto model = lloyd(L, options.k, options.seed, options.lloyd);
  if (times) times->cluster_ms = clock.lap_ms();
  return model;
}

/// Nystrom embedding K_MB K_BB^{-1/2} for the given landmark indices.
template <typename Scalar>
MatrixX<Scalar> nystrom_embedding(const BasicDataset<Scalar>& data, const KernelSpec& spec,
                                  const std::vector<Index>& landmarks, Index* rank = nullptr) {
  const MatrixX<Scalar> KMB = detail::landmark_columns(spec, data, landmarks);
  const MatrixX<Scalar> KBB = detail::landmark_block(KMB, landmarks);
  return KMB * detail::spsd_pseudo_power(KBB, Scalar(-0.5), rank);
}

/// Nystrom kernel k-means with `subset_size` landmarks drawn uniformly
/// without replacement.
template <typename Scalar>
ClusterModel<Scalar> nystrom_kmeans(const BasicDataset<Scalar>& data, const KernelSpec& spec,
                                    Index subset_size, const ClusterOptions& options,
                                    StageTimes* times = nullptr) {
  detail::check_k(data.size(), options.k);
  detail::StageClock clock;
  const auto landmarks = sample_without_replacement(
      data.size(), subset_size, detail::derive_seed(options.seed, detail::landmark_stream));
  const MatrixX<Scalar> embedding = nystrom_embedding(data, spec, landmarks);
  if (times) times->factorize_ms = clock.lap_ms();
  auto model = lloyd(embedding, options.k, options.seed, options.lloyd);
  if (times) times->cluster_ms = clock.lap_ms();
  return model;
}

/// Random Fourier features for the Gaussian kernel: frequencies w ~ N(0, 2 sigma I),
/// features sqrt(2/D) [cos(Xw), sin(Xw)]. Every row has unit norm.
template <typename Scalar>
MatrixX<Scalar> rff_features(const BasicDataset<Scalar>& data, const KernelSpec& spec, Index num_features,
                             std::uint64_t seed) {
  spec.validate();
  if (num_features < 2 || num_features % 2 != 0)
    throw std::invalid_argument("rff: num_features must be a positive even number, got " +
                                std::to_string(num_features));
  const Index half = num_features / 2;
  std::mt19937_64 rng(seed);
  std::normal_distribution<Scalar> normal(Scalar(0), std::sqrt(Scalar(2) * Scalar(spec.sigma)));
  MatrixX<Scalar> W(data.dim(), half);
  for (Index j = 0; j < half; ++j)
    for (Index i = 0; i < data.dim(); ++i) W(i, j) = normal(rng);
  const MatrixX<Scalar> proj = data.points * W;
  const Scalar scale = std::sqrt(Scalar(2) / Scalar(num_features));
  MatrixX<Scalar> Z(data.size(), num_features);
  Z.leftCols(half) = scale * proj.array().cos().matrix();
  Z.rightCols(half) = scale * proj.array().sin().matrix();
  return Z;
}

template <typename Scalar>
ClusterModel<Scalar> rff_kmeans(const BasicDataset<Scalar>& data, const KernelSpec& spec, Index num_features,
                                const ClusterOptions& options, StageTimes* times = nullptr) {
  detail::check_k(data.size(), options.k);
  detail::StageClock clock;
  const MatrixX<Scalar> Z =
      rff_features(data, spec, num_features, detail::derive_seed(options.seed, detail::fourier_stream));
  if (times) times->factorize_ms = clock.lap_ms();
  auto model = lloyd(Z, options.k, options.seed, options.lloyd);
  if (times) times->cluster_ms = clock.lap_ms();
  return model;
}

/// Approximate kernel k-means: cluster centers are restricted to the span of
/// phi(x_b) over `subset_size` sampled points b. Center j is sum_b alpha_bj phi(x_b)
/// with alpha = K_BB^+ K_MB^T U, U the size-normalised indicator matrix, and
/// every point is reassigned using K_MB and K_BB only.
///
/// The reported objective is (1/n) sum_i |phi(x_i) - center(i)|^2 for the
/// restricted centers; `centers` holds alpha^T (k x subset_size).
template <typename Scalar>
ClusterModel<Scalar> approx_kkmeans(const BasicDataset<Scalar>& data, const KernelSpec& spec,
                                    Index subset_size, const ClusterOptions& options,
                                    StageTimes* times = nullptr) {
  const Index n = data.size();
  const Index k = options.k;
  detail::check_k(n, k);
  if (k > subset_size)
    throw std::invalid_argument("approx_kkmeans: k exceeds the sampled subset size");
  if (options.lloyd.max_iter < 1) throw std::invalid_argument("approx_kkmeans: max_iter must be at least 1");

  detail::StageClock clock;
  const auto landmarks = sample_without_replacement(
      n, subset_size, detail::derive_seed(options.seed, detail::landmark_stream));
  const MatrixX<Scalar> KMB = detail::landmark_columns(spec, data, landmarks);
  const MatrixX<Scalar> KBB = detail::landmark_block(KMB, landmarks);
  const MatrixX<Scalar> KBB_pinv = detail::spsd_pseudo_power(KBB, Scalar(-1));
  const VectorX<Scalar> diag = kernel_diag(spec, data);
  if (times) times->factorize_ms = clock.lap_ms();

  // k-means++ seeding and the first assignment use exact kernel distances.
  std::vector<VectorX<Scalar>> seed_cols;
  const auto seeds = kmeans_pp_select<Scalar>(n, k, options.seed, [&](Index c, VectorX<Scalar>& out) {
    VectorX<Scalar> col = kernel_column(spec, data, c);
    out = (diag.array() + diag(c) - Scalar(2) * col.array()).matrix();
    seed_cols.push_back(std::move(col));
  });

  ClusterModel<Scalar> model;
  model.embedding_dim = subset_size;
  model.assignments.assign(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n; ++i) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < k; ++j) {
      const Index c = seeds[static_cast<std::size_t>(j)];
      const Scalar d = diag(i) + diag(c) - Scalar(2) * seed_cols[static_cast<std::size_t>(j)](i);
      if (d < best) {
        best = d;
        model.assignments[static_cast<std::size_t>(i)] = static_cast<int>(j);
      }
    }
  }

  MatrixX<Scalar> alpha, dist(n, k);
  std::vector<Index> counts(static_cast<std::size_t>(k));
  auto point_cost = [&](Index i) { return dist(i, model.assignments[static_cast<std::size_t>(i)]); };

  // Restricted centers and all point-center distances for the current assignment.
  auto update = [&]() {
    std::fill(counts.begin(), counts.end(), 0);
    for (int a : model.assignments) ++counts[static_cast<std::size_t>(a)];
    MatrixX<Scalar> sums = MatrixX<Scalar>::Zero(KMB.cols(), k);  // K_MB^T U
    for (Index i = 0; i < n; ++i) sums.col(model.assignments[static_cast<std::size_t>(i)]) += KMB.row(i).transpose();
    for (Index j = 0; j < k; ++j)
      if (counts[static_cast<std::size_t>(j)] > 0) sums.col(j) /= Scalar(counts[static_cast<std::size_t>(j)]);
    alpha = KBB_pinv * sums;
    const MatrixX<Scalar> cross = KMB * alpha;
    const VectorX<Scalar> center_sq = (alpha.transpose() * KBB * alpha).diagonal();
    dist = (-Scalar(2) * cross).colwise() + diag;
    dist.rowwise() += center_sq.transpose();
  };

  auto objective = [&]() {
    Scalar total = 0;
    for (Index i = 0; i < n; ++i) total += point_cost(i);
    return total / Scalar(n);
  };

  // Empty clusters take the worst-served point from clusters with more than one member.
  auto repair = [&]() {
    bool moved = false;
    for (Index j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) continue;
      Index far = -1;
      Scalar far_d = -std::numeric_limits<Scalar>::infinity();
      for (Index i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(model.assignments[static_cast<std::size_t>(i)])] < 2) continue;
        if (point_cost(i) > far_d) {
          far_d = point_cost(i);
          far = i;
        }
      }
      --counts[static_cast<std::size_t>(model.assignments[static_cast<std::size_t>(far)])];
      model.assignments[static_cast<std::size_t>(far)] = static_cast<int>(j);
      counts[static_cast<std::size_t>(j)] = 1;
      moved = true;
    }
    return moved;
  };

  auto reassign = [&]() {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      int best = model.assignments[static_cast<std::size_t>(i)];
      Scalar best_d = dist(i, best);
      for (Index j = 0; j < k; ++j) {
        if (dist(i, j) < best_d) {
          best_d = dist(i, j);
          best = static_cast<int>(j);
        }
      }
      if (best != model.assignments[static_cast<std::size_t>(i)]) {
        model.assignments[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    return changed;
  };

  Scalar previous = std::numeric_limits<Scalar>::infinity();
  for (int it = 1; it <= options.lloyd.max_iter; ++it) {
    update();
    if (repair()) update();
    const Scalar obj = objective();
    model.objective_history.push_back(obj);
    model.iterations = it;
    if (!reassign()) {
      model.converged = true;
      break;
    }
    if (std::isfinite(previous) && previous - obj <= Scalar(options.lloyd.tol) * previous) {
      model.converged = true;
      break;
    }
    previous = obj;
  }
  update();
  if (repair()) update();
  model.objective = objective();
  if (model.objective < model.objective_history.back()) model.objective_history.push_back(model.objective);
  model.centers = alpha.transpose();
  if (times) times->cluster_ms = clock.lap_ms();
  return model;
}

}  // namespace kkm

#pragma once

#include <kkm/dataset.hpp>
#include <kkm/icf.hpp>
#include <kkm/kernel.hpp>
#include <kkm/kmeans.hpp>

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cstdint>

namespace kkm {

/// Wall-clock split between building the embedding and clustering it.
struct StageTimes {
  double factorize_ms = 0;
  double cluster_ms = 0;
};

struct ClusterOptions {
  Index k = 2;
  std::uint64_t seed = 0;
  LloydOptions lloyd{};
};

namespace detail {

class StageClock {
 public:
  double lap_ms() {
    const auto now = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    return ms;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace detail

/// Kernel k-means through an incomplete Cholesky factor: factorize K ~ P P^T
/// to at most `subset_size` columns, then run Lloyd on the rows of P.
/// The clustering dimension is the achieved rank, which is smaller than
/// `subset_size` when the residual trace drops below `epsilon` first.
template <typename Scalar>
ClusterModel<Scalar> icf_kkmeans(const BasicDataset<Scalar>& data, const KernelSpec& spec,
                                 Index subset_size, const ClusterOptions& options,
                                 double epsilon = 1e-3, StageTimes* times = nullptr) {
  detail::check_k(data.size(), options.k);
  detail::StageClock clock;
  const auto factor = icf_factorize(data, spec, IcfOptions{subset_size, epsilon});
  if (times) times->factorize_ms = clock.lap_ms();
  ClusterModel<Scalar> model;
  if (factor.rank() == 0) {
    // The residual trace was already below epsilon: every point embeds at the origin.
    const MatrixX<Scalar> origin = MatrixX<Scalar>::Zero(data.size(), 1);
    model = lloyd(origin, options.k, options.seed, options.lloyd);
    model.embedding_dim = 0;
  } else {
    model = lloyd(factor.factor(), options.k, options.seed, options.lloyd);
  }
  if (times) times->cluster_ms = clock.lap_ms();
  return model;
}

/// Rows of U D^{1/2} for the eigendecomposition K = U D U^T, with
/// eigenvalues below 1e-12 * lambda_max clamped to zero.
template <typename Scalar>
MatrixX<Scalar> spectral_embedding(const MatrixX<Scalar>& K) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(K);
  if (eig.info() != Eigen::Success) throw std::runtime_error("eigendecomposition of the Gram matrix failed");
  VectorX<Scalar> lambda = eig.eigenvalues();
  const Scalar floor = Scalar(1e-12) * std::max(lambda.maxCoeff(), Scalar(0));
  lambda = lambda.unaryExpr([floor](Scalar v) { return v < floor ? Scalar(0) : std::sqrt(v); });
  return eig.eigenvectors() * lambda.asDiagonal();
}

/// Exact kernel k-means: Lloyd on the full spectral embedding of K.
template <typename Scalar>
ClusterModel<Scalar> kernel_kmeans_oracle(const BasicDataset<Scalar>& data, const KernelSpec& spec,
                                          const ClusterOptions& options, Index guard = default_gram_guard,
                                          StageTimes* times = nullptr) {
  detail::check_k(data.size(), options.k);
  detail::StageClock clock;
  const MatrixX<Scalar> embedding = spectral_embedding(full_gram(spec, data, guard));
  if (times) times->factorize_ms = clock.lap_ms();
  auto model = lloyd(embedding, options.k, options.seed, options.lloyd);
  if (times) times->cluster_ms = clock.lap_ms();
  return model;
}

}  // namespace kkm

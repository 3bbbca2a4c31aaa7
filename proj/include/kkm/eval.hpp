#pragma once

#include <kkm/dataset.hpp>
#include <kkm/icf.hpp>
#include <kkm/kernel.hpp>
#include <kkm/kernel_kmeans.hpp>
#include <kkm/kmeans.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace kkm {

/// Maximum-weight perfect matching on a square weight matrix (Hungarian
/// method, O(n^3)). Returns match[row] = column.
inline std::vector<Index> max_weight_matching(const Eigen::MatrixXd& weight) {
  const Index n = weight.rows();
  if (weight.cols() != n) throw std::invalid_argument("max_weight_matching: matrix must be square");
  if (n == 0) return {};
  const double inf = std::numeric_limits<double>::infinity();
  // Minimise cost = -weight with 1-based potentials.
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<bool> used(static_cast<std::size_t>(n + 1), false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const Index i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = -weight(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> match(static_cast<std::size_t>(n), -1);
  for (Index j = 1; j <= n; ++j) match[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return match;
}

/// Contingency table between two labelings, padded to a square matrix.
/// Rows follow the sorted distinct values of `a`, columns those of `b`.
inline Eigen::MatrixXd contingency(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("labelings differ in length (" + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  std::map<int, Index> ra, rb;
  for (int x : a) ra.emplace(x, 0);
  for (int x : b) rb.emplace(x, 0);
  Index i = 0;
  for (auto& [key, id] : ra) id = i++;
  i = 0;
  for (auto& [key, id] : rb) id = i++;
  const Index dim = std::max<Index>(static_cast<Index>(std::max(ra.size(), rb.size())), 1);
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t t = 0; t < a.size(); ++t) table(ra[a[t]], rb[b[t]]) += 1.0;
  return table;
}

/// Clustering accuracy: the largest fraction of points on which `pred` and
/// `truth` agree under a one-to-one matching of cluster ids to labels.
inline double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  const Eigen::MatrixXd table = contingency(pred, truth);
  if (pred.empty()) return 1.0;
  const auto match = max_weight_matching(table);
  double agree = 0;
  for (Index r = 0; r < table.rows(); ++r) agree += table(r, match[static_cast<std::size_t>(r)]);
  return agree / static_cast<double>(pred.size());
}

/// Relabels `pred` so that its ids line up with `reference` under the
/// maximum-overlap matching. Both must use ids in [0, k).
inline std::vector<int> align_labels(const std::vector<int>& pred, const std::vector<int>& reference, Index k) {
  if (pred.size() != reference.size()) throw std::invalid_argument("align_labels: length mismatch");
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t i = 0; i < pred.size(); ++i) table(pred[i], reference[i]) += 1.0;
  const auto match = max_weight_matching(table);
  std::vector<int> out(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i)
    out[i] = static_cast<int>(match[static_cast<std::size_t>(pred[i])]);
  return out;
}

namespace detail {

inline std::vector<Index> cluster_sizes(const std::vector<int>& assignments, Index k) {
  std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
  for (int a : assignments) {
    if (a < 0 || a >= k) throw std::invalid_argument("assignment id " + std::to_string(a) + " outside [0, k)");
    ++sizes[static_cast<std::size_t>(a)];
  }
  for (Index j = 0; j < k; ++j)
    if (sizes[static_cast<std::size_t>(j)] == 0)
      throw std::invalid_argument("cluster " + std::to_string(j) + " is empty");
  return sizes;
}

}  // namespace detail

/// Normalised indicator matrix V (n x k) with V_ij = 1/sqrt(|C_j|) for i in C_j.
template <typename Scalar = double>
MatrixX<Scalar> indicator_matrix(const std::vector<int>& assignments, Index k) {
  const auto sizes = detail::cluster_sizes(assignments, k);
  MatrixX<Scalar> V = MatrixX<Scalar>::Zero(static_cast<Index>(assignments.size()), k);
  for (std::size_t i = 0; i < assignments.size(); ++i)
    V(static_cast<Index>(i), assignments[i]) =
        Scalar(1) / std::sqrt(Scalar(sizes[static_cast<std::size_t>(assignments[i])]));
  return V;
}

/// (1/n) tr(V^T K V) for a dense Gram matrix.
template <typename Derived>
typename Derived::Scalar trace_objective(const Eigen::MatrixBase<Derived>& K, const std::vector<int>& assignments,
                                         Index k) {
  using Scalar = typename Derived::Scalar;
  const Index n = K.rows();
  if (K.cols() != n || static_cast<Index>(assignments.size()) != n)
    throw std::invalid_argument("trace_objective: shape mismatch");
  const MatrixX<Scalar> V = indicator_matrix<Scalar>(assignments, k);
  return (V.transpose() * K * V).trace() / Scalar(n);
}

/// (1/n) tr(V^T P P^T V) from a factor, via the k x s product V^T P.
template <typename Scalar>
Scalar trace_objective(const IcfFactor<Scalar>& factor, const std::vector<int>& assignments, Index k) {
  const Index n = factor.size();
  if (static_cast<Index>(assignments.size()) != n) throw std::invalid_argument("trace_objective: shape mismatch");
  const auto sizes = detail::cluster_sizes(assignments, k);
  const auto P = factor.factor();
  MatrixX<Scalar> VtP = MatrixX<Scalar>::Zero(k, P.cols());
  for (Index i = 0; i < n; ++i) VtP.row(assignments[static_cast<std::size_t>(i)]) += P.row(i);
  for (Index j = 0; j < k; ++j) VtP.row(j) /= std::sqrt(Scalar(sizes[static_cast<std::size_t>(j)]));
  return VtP.squaredNorm() / Scalar(n);
}

struct BoundGap {
  /// (1/n) tr([V - V_hat]^T K [V - V_hat]).
  double gap = 0;
  /// 2 sqrt(k) tr(K - K_hat) / n.
  double bound = 0;
};

/// Compares the exact kernel k-means clustering (V) with the factor-based one
/// (V_hat) on the same seed. Cluster ids of V_hat are first matched to V by
/// maximum overlap, since the gap is only meaningful between aligned columns.
template <typename Scalar>
BoundGap bound_gap(const BasicDataset<Scalar>& data, const KernelSpec& spec, Index k, Index subset_size,
                   std::uint64_t seed, double epsilon = 1e-3, Index guard = default_gram_guard,
                   const LloydOptions& lloyd_options = {}) {
  const Index n = data.size();
  check_guard(n, guard);
  const MatrixX<Scalar> K = full_gram(spec, data, guard);

  const auto exact = lloyd(spectral_embedding(K), k, seed, lloyd_options);
  const auto factor = icf_factorize(data, spec, IcfOptions{subset_size, epsilon});
  const auto approx = factor.rank() > 0 ? lloyd(factor.factor(), k, seed, lloyd_options)
                                        : lloyd(MatrixX<Scalar>::Zero(n, 1), k, seed, lloyd_options);

  const MatrixX<Scalar> V = indicator_matrix<Scalar>(exact.assignments, k);
  const MatrixX<Scalar> V_hat = indicator_matrix<Scalar>(align_labels(approx.assignments, exact.assignments, k), k);
  const MatrixX<Scalar> D = V - V_hat;
  BoundGap out;
  out.gap = static_cast<double>((D.transpose() * K * D).trace() / Scalar(n));
  out.bound = static_cast<double>(Scalar(2) * std::sqrt(Scalar(k)) * residual_trace(factor) / Scalar(n));
  return out;
}

struct DecayFit {
  double c_hat = 0;
  double b_hat = 0;
  double r_squared = 0;
};

/// Least-squares fit of log(eps_s) = log(C) - b s over a trace history.
/// Trailing entries below 1e-12 * eps_0 and non-positive entries are dropped.
template <typename Range>
DecayFit fit_decay(const Range& history) {
  std::vector<double> h(std::begin(history), std::end(history));
  const double cutoff = h.empty() ? 0.0 : 1e-12 * static_cast<double>(h.front());
  while (!h.empty() && h.back() < cutoff) h.pop_back();
  std::vector<double> xs, ys;
  for (std::size_t s = 0; s < h.size(); ++s) {
    if (h[s] > 0.0) {
      xs.push_back(static_cast<double>(s));
      ys.push_back(std::log(h[s]));
    }
  }
  if (xs.size() < 3) throw std::invalid_argument("fit_decay: need at least 3 positive entries");

  const double m = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  DecayFit fit;
  fit.b_hat = -slope;
  fit.c_hat = std::exp(my - slope * mx);
  if (syy <= 0.0) {
    fit.r_squared = 1.0;
  } else {
    double ss_res = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double r = ys[i] - (my + slope * (xs[i] - mx));
      ss_res += r * r;
    }
    fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  }
  return fit;
}

}  // namespace kkm

#pragma once

#include <kkm/dataset.hpp>
#include <kkm/kernel.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace kkm {

/// Raised when the residual diagonal goes negative beyond rounding, or a
/// pivot with a non-positive residual is forced.
class IcfBreakdown : public std::runtime_error {
 public:
  IcfBreakdown(Index iteration, double value, const std::string& what)
      : std::runtime_error("incomplete Cholesky breakdown at iteration " + std::to_string(iteration) +
                           ": " + what + " (value " + std::to_string(value) + ")"),
        iteration_(iteration),
        value_(value) {}
  Index iteration() const { return iteration_; }
  double value() const { return value_; }

 private:
  Index iteration_;
  double value_;
};

/// Low-rank factor P (n x s) with P P^T ~ K, built one pivot column at a time.
///
/// Column j of P belongs to pivots()[j]. residual_diag() holds the diagonal
/// of K - P P^T on the unselected indices and 0 on the pivots.
/// trace_history() holds the residual trace before the first step and after
/// every step, so it always has rank() + 1 entries.
template <typename Scalar = double>
class IcfFactor {
 public:
  IcfFactor() = default;

  /// Starts a factorization from the diagonal of K. `capacity` reserves
  /// storage for that many columns.
  IcfFactor(VectorX<Scalar> diagonal, Index capacity)
      : storage_(diagonal.size(), std::max<Index>(capacity, 0)),
        residual_(std::move(diagonal)),
        selected_(static_cast<std::size_t>(residual_.size()), false) {
    if (residual_.size() > 0) scale_ = std::max(Scalar(1), residual_.maxCoeff());
    trace_history_.push_back(residual_.sum());
  }

  Index size() const { return residual_.size(); }
  Index rank() const { return rank_; }

  auto factor() const { return storage_.leftCols(rank_); }
  const std::vector<Index>& pivots() const { return pivots_; }
  const VectorX<Scalar>& residual_diag() const { return residual_; }
  const std::vector<Scalar>& trace_history() const { return trace_history_; }
  bool is_pivot(Index i) const { return selected_[static_cast<std::size_t>(i)]; }

  /// Absolute tolerance for treating a residual entry as zero.
  Scalar tolerance() const { return Scalar(1e-10) * scale_; }

  std::size_t kernel_evaluations() const { return kernel_evals_; }
  void set_kernel_evaluations(std::size_t count) { kernel_evals_ = count; }

  /// Index of the largest positive residual among unselected indices (the
  /// smallest such index on ties), or -1 if none is positive.
  Index next_pivot() const {
    Index best = -1;
    Scalar best_value = Scalar(0);
    for (Index j = 0; j < size(); ++j) {
      if (selected_[static_cast<std::size_t>(j)]) continue;
      if (residual_(j) > best_value) {
        best_value = residual_(j);
        best = j;
      }
    }
    return best;
  }

  Scalar max_residual() const {
    const Index t = next_pivot();
    return t < 0 ? Scalar(0) : residual_(t);
  }

  /// Appends the column for pivot t, computing it from column t of K.
  /// `kernel_col` holds K_{:,t} on entry and is used as scratch.
  void append(Index t, VectorX<Scalar>& kernel_col) {
    const Index n = size();
    if (t < 0 || t >= n || selected_[static_cast<std::size_t>(t)])
      throw std::invalid_argument("icf: pivot " + std::to_string(t) + " is invalid or already selected");

    // nu^2 = K_tt - u^T u with u the t-th row of the current factor.
    const auto P = storage_.leftCols(rank_);
    const VectorX<Scalar> u = P.row(t).transpose();
    const Scalar nu_sq = kernel_col(t) - u.squaredNorm();
    if (!(nu_sq > tolerance() * std::numeric_limits<Scalar>::epsilon()))
      throw IcfBreakdown(rank_, static_cast<double>(nu_sq), "pivot residual is not positive");
    const Scalar nu = std::sqrt(nu_sq);

    if (rank_ == storage_.cols()) storage_.conservativeResize(n, std::max<Index>(2 * rank_, 8));
    if (rank_ > 0) kernel_col.noalias() -= storage_.leftCols(rank_) * u;
    storage_.col(rank_) = kernel_col / nu;
    auto p = storage_.col(rank_);
    ++rank_;

    selected_[static_cast<std::size_t>(t)] = true;
    pivots_.push_back(t);

    const Scalar tol = tolerance();
    Scalar trace = 0;
    for (Index j = 0; j < n; ++j) {
      if (selected_[static_cast<std::size_t>(j)]) {
        residual_(j) = Scalar(0);
        continue;
      }
      Scalar e = residual_(j) - p(j) * p(j);
      if (e < Scalar(0)) {
        if (e < -tol) throw IcfBreakdown(rank_, static_cast<double>(e), "negative residual diagonal");
        e = Scalar(0);
      }
      residual_(j) = e;
      trace += e;
    }
    trace_history_.push_back(trace);
  }

  /// Drops spare capacity so factor() is backed by exactly rank() columns.
  void shrink_to_fit() {
    if (storage_.cols() != rank_) storage_.conservativeResize(size(), rank_);
  }

 private:
  MatrixX<Scalar> storage_;
  Index rank_ = 0;
  std::vector<Index> pivots_;
  VectorX<Scalar> residual_;
  std::vector<bool> selected_;
  std::vector<Scalar> trace_history_;
  Scalar scale_ = Scalar(1);
  std::size_t kernel_evals_ = 0;
};

/// Empty factor for `gram`, ready for icf_step.
template <GramSource G>
IcfFactor<typename G::scalar_type> icf_start(const G& gram, Index capacity = 0) {
  using Scalar = typename G::scalar_type;
  IcfFactor<Scalar> factor(gram.diagonal(), capacity);
  const Scalar tol = factor.tolerance();
  if ((factor.residual_diag().array() < -tol).any())
    throw IcfBreakdown(0, static_cast<double>(factor.residual_diag().minCoeff()),
                       "negative diagonal in Gram matrix");
  factor.set_kernel_evaluations(gram.evaluations());
  return factor;
}

/// One greedy step: pivot on the largest residual diagonal entry and append
/// the corresponding column of the factor.
template <GramSource G>
void icf_step(IcfFactor<typename G::scalar_type>& factor, const G& gram) {
  const Index t = factor.next_pivot();
  if (t < 0)
    throw IcfBreakdown(factor.rank(), 0.0, "no unselected index has a positive residual");
  VectorX<typename G::scalar_type> col;
  gram.column_into(t, col);
  factor.append(t, col);
  factor.set_kernel_evaluations(gram.evaluations());
}

struct IcfOptions {
  Index max_rank = 0;
  double epsilon = 1e-3;
};

/// Greedy pivoted incomplete Cholesky factorization of an SPSD matrix.
///
/// Runs while the residual trace exceeds `epsilon` and fewer than
/// `max_rank` columns exist. A step is also refused once every unselected
/// residual is within rounding of zero, i.e. the rank of K is exhausted.
/// Only the diagonal and the pivot columns of K are ever requested.
template <GramSource G>
IcfFactor<typename G::scalar_type> icf_factorize(const G& gram, const IcfOptions& options) {
  using Scalar = typename G::scalar_type;
  const Index n = gram.size();
  if (n < 1) throw std::invalid_argument("icf_factorize: empty input");
  if (options.max_rank < 1 || options.max_rank > n)
    throw std::invalid_argument("icf_factorize: max_rank must lie in [1, n], got " +
                                std::to_string(options.max_rank));
  if (!(options.epsilon > 0.0))
    throw std::invalid_argument("icf_factorize: epsilon must be positive");

  IcfFactor<Scalar> factor = icf_start(gram, options.max_rank);
  while (factor.trace_history().back() > Scalar(options.epsilon) &&
         factor.rank() < options.max_rank) {
    if (factor.max_residual() <= factor.tolerance() * Scalar(1e-4)) break;
    icf_step(factor, gram);
  }
  factor.shrink_to_fit();
  return factor;
}

template <typename Scalar>
IcfFactor<Scalar> icf_factorize(const BasicDataset<Scalar>& data, const KernelSpec& spec,
                                 const IcfOptions& options) {
  KernelGram<Scalar> gram(data, spec);
  return icf_factorize(gram, options);
}

/// P P^T, exactly symmetric, for checking against the dense Gram matrix.
template <typename Scalar>
MatrixX<Scalar> reconstruct(const IcfFactor<Scalar>& factor, Index guard = default_gram_guard) {
  check_guard(factor.size(), guard);
  if (factor.rank() == 0) return MatrixX<Scalar>::Zero(factor.size(), factor.size());
  MatrixX<Scalar> lower = MatrixX<Scalar>::Zero(factor.size(), factor.size());
  lower.template selfadjointView<Eigen::Lower>().rankUpdate(MatrixX<Scalar>(factor.factor()));
  return lower.template selfadjointView<Eigen::Lower>();
}

/// tr(K - P P^T) as tracked by the factorization.
template <typename Scalar>
Scalar residual_trace(const IcfFactor<Scalar>& factor) {
  return factor.trace_history().back();
}

}  // namespace kkm

#pragma once

#include <kkm/dataset.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace kkm {

enum class KernelFamily { gaussian };

/// Kernel family plus its parameters. Only the Gaussian family
/// k(x, y) = exp(-sigma * |x - y|^2) is implemented; sigma scales the
/// squared distance, so larger sigma means a narrower kernel.
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double sigma = 1.0;

  static KernelSpec gaussian(double sigma) {
    KernelSpec spec{KernelFamily::gaussian, sigma};
    spec.validate();
    return spec;
  }

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw std::invalid_argument("kernel sigma must be positive and finite, got " +
                                  std::to_string(sigma));
  }
};

/// Default n above which dense n x n paths refuse to run.
inline constexpr Index default_gram_guard = 5000;

class GuardExceeded : public std::runtime_error {
 public:
  GuardExceeded(Index n, Index guard)
      : std::runtime_error("n = " + std::to_string(n) + " exceeds the dense-matrix guard of " +
                           std::to_string(guard) + " (pass an explicit override to proceed)"),
        n_(n),
        guard_(guard) {}
  Index n() const { return n_; }
  Index guard() const { return guard_; }

 private:
  Index n_, guard_;
};

inline void check_guard(Index n, Index guard) {
  if (n > guard) throw GuardExceeded(n, guard);
}

/// Kernel value for the scaled squared distance `sq_dist`.
template <typename Scalar>
Scalar kernel_from_sq_dist(const KernelSpec& spec, Scalar sq_dist) {
  switch (spec.family) {
    case KernelFamily::gaussian:
      return std::exp(-Scalar(spec.sigma) * sq_dist);
  }
  return Scalar(0);
}

template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar kernel_eval(const KernelSpec& spec, const Eigen::MatrixBase<DerivedX>& x,
                                      const Eigen::MatrixBase<DerivedY>& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("kernel_eval: dimension mismatch (" + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()) + ")");
  using Scalar = typename DerivedX::Scalar;
  Scalar sq = 0;
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar diff = x.derived().coeff(i) - y.derived().coeff(i);
    sq += diff * diff;
  }
  return kernel_from_sq_dist(spec, sq);
}

/// Writes column t of the Gram matrix into `out` (resized to n).
/// Squared distances are accumulated coordinate by coordinate, so entry t is
/// exactly k(x_t, x_t).
template <typename Scalar>
void kernel_column_into(const KernelSpec& spec, const BasicDataset<Scalar>& data, Index t,
                        VectorX<Scalar>& out) {
  if (t < 0 || t >= data.size())
    throw std::out_of_range("kernel_column: index " + std::to_string(t) + " outside [0, " +
                            std::to_string(data.size()) + ")");
  const auto& X = data.points;
  out.setZero(X.rows());
  for (Index c = 0; c < X.cols(); ++c)
    out.array() += (X.col(c).array() - X(t, c)).square();
  switch (spec.family) {
    case KernelFamily::gaussian:
      out = (out.array() * Scalar(-spec.sigma)).exp().matrix();
      break;
  }
}

template <typename Scalar>
VectorX<Scalar> kernel_column(const KernelSpec& spec, const BasicDataset<Scalar>& data, Index t) {
  VectorX<Scalar> out;
  kernel_column_into(spec, data, t, out);
  return out;
}

template <typename Scalar>
VectorX<Scalar> kernel_diag(const KernelSpec& spec, const BasicDataset<Scalar>& data) {
  switch (spec.family) {
    case KernelFamily::gaussian:
      return VectorX<Scalar>::Ones(data.size());
  }
  return VectorX<Scalar>::Zero(data.size());
}

/// Dense Gram matrix; each pair is evaluated once and mirrored, so the
/// result is exactly symmetric.
template <typename Scalar>
MatrixX<Scalar> full_gram(const KernelSpec& spec, const BasicDataset<Scalar>& data,
                          Index guard = default_gram_guard) {
  const Index n = data.size();
  check_guard(n, guard);
  MatrixX<Scalar> K(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = j; i < n; ++i) {
      const Scalar v = kernel_eval(spec, data.points.row(i), data.points.row(j));
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

/// Square kernel distance |phi(x_i) - phi(x_j)|^2 from Gram entries.
template <typename Scalar>
Scalar kernel_distance(Scalar kii, Scalar kij, Scalar kjj) {
  return kii - Scalar(2) * kij + kjj;
}

/// Anything that can hand out the diagonal and individual columns of an
/// n x n SPSD matrix without materialising it.
template <typename G>
concept GramSource = requires(const G& g, Index t, VectorX<typename G::scalar_type>& out) {
  typename G::scalar_type;
  { g.size() } -> std::convertible_to<Index>;
  { g.diagonal() } -> std::convertible_to<VectorX<typename G::scalar_type>>;
  g.column_into(t, out);
  { g.evaluations() } -> std::convertible_to<std::size_t>;
};

/// Gram matrix of a dataset under a kernel, evaluated on demand.
/// Counts every kernel evaluation it performs.
template <typename Scalar = double>
class KernelGram {
 public:
  using scalar_type = Scalar;

  KernelGram(const BasicDataset<Scalar>& data, KernelSpec spec) : data_(&data), spec_(spec) {
    spec_.validate();
  }

  Index size() const { return data_->size(); }
  VectorX<Scalar> diagonal() const {
    evaluations_ += static_cast<std::size_t>(size());
    return kernel_diag(spec_, *data_);
  }
  void column_into(Index t, VectorX<Scalar>& out) const {
    kernel_column_into(spec_, *data_, t, out);
    evaluations_ += static_cast<std::size_t>(size());
  }
  std::size_t evaluations() const { return evaluations_; }

 private:
  const BasicDataset<Scalar>* data_;
  KernelSpec spec_;
  mutable std::size_t evaluations_ = 0;
};

/// An explicit SPSD matrix exposed through the GramSource interface.
template <typename Scalar = double>
class DenseGram {
 public:
  using scalar_type = Scalar;

  explicit DenseGram(MatrixX<Scalar> K) : K_(std::move(K)) {
    if (K_.rows() != K_.cols()) throw std::invalid_argument("DenseGram: matrix must be square");
  }

  Index size() const { return K_.rows(); }
  VectorX<Scalar> diagonal() const {
    evaluations_ += static_cast<std::size_t>(size());
    return K_.diagonal();
  }
  void column_into(Index t, VectorX<Scalar>& out) const {
    if (t < 0 || t >= size()) throw std::out_of_range("DenseGram: column index out of range");
    out = K_.col(t);
    evaluations_ += static_cast<std::size_t>(size());
  }
  std::size_t evaluations() const { return evaluations_; }
  const MatrixX<Scalar>& matrix() const { return K_; }

 private:
  MatrixX<Scalar> K_;
  mutable std::size_t evaluations_ = 0;
};

}  // namespace kkm

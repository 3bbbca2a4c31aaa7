#include <kkm/synthetic.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace kkm {

namespace {

constexpr double ring_radii[2] = {0.2, 1.0};
constexpr double zigzag_amplitude = 0.25;
constexpr double zigzag_period = 0.4;
constexpr double zigzag_length = 1.2;
constexpr double zigzag_offset = 1.0;

double triangle_wave(double x) {
  const double phase = x / zigzag_period - std::floor(x / zigzag_period);
  return zigzag_amplitude * (4.0 * std::abs(phase - 0.5) - 1.0);
}

}  // namespace

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "ring") return SyntheticKind::ring;
  if (name == "parabolic") return SyntheticKind::parabolic;
  if (name == "zigzag") return SyntheticKind::zigzag;
  throw std::invalid_argument("unknown synthetic dataset kind '" + std::string(name) +
                              "' (expected ring, parabolic or zigzag)");
}

std::string to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::ring: return "ring";
    case SyntheticKind::parabolic: return "parabolic";
    case SyntheticKind::zigzag: return "zigzag";
  }
  return "unknown";
}

double synthetic_ring_radius(int label) { return ring_radii[label == 0 ? 0 : 1]; }

double synthetic_curve_y(SyntheticKind kind, int label, double x) {
  switch (kind) {
    case SyntheticKind::parabolic:
      return label == 0 ? x * x : 2.5 - (x - 0.5) * (x - 0.5);
    case SyntheticKind::zigzag:
      return triangle_wave(x) + (label == 0 ? 0.0 : zigzag_offset);
    case SyntheticKind::ring:
      break;
  }
  throw std::invalid_argument("synthetic_curve_y: ring has no y = f(x) form");
}

Dataset gen_synthetic(SyntheticKind kind, Index per_cluster, double noise, std::uint64_t seed) {
  if (per_cluster < 1) throw std::invalid_argument("per_cluster must be at least 1");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw std::invalid_argument("noise must be finite and non-negative");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset data;
  data.name = to_string(kind);
  data.points.resize(2 * per_cluster, 2);
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(2 * per_cluster));

  for (int label = 0; label < 2; ++label) {
    for (Index i = 0; i < per_cluster; ++i) {
      double x = 0, y = 0;
      switch (kind) {
        case SyntheticKind::ring: {
          const double theta = 2.0 * std::numbers::pi * unit(rng);
          x = ring_radii[label] * std::cos(theta);
          y = ring_radii[label] * std::sin(theta);
          break;
        }
        case SyntheticKind::parabolic:
          x = label == 0 ? -1.0 + 2.0 * unit(rng) : -0.5 + 2.0 * unit(rng);
          y = synthetic_curve_y(kind, label, x);
          break;
        case SyntheticKind::zigzag:
          x = zigzag_length * unit(rng);
          y = synthetic_curve_y(kind, label, x);
          break;
      }
      if (noise > 0.0) {
        x += noise * gauss(rng);
        y += noise * gauss(rng);
      }
      const Index row = label * per_cluster + i;
      data.points(row, 0) = x;
      data.points(row, 1) = y;
      labels.push_back(label);
    }
  }
  data.labels = std::move(labels);
  return data;
}

Dataset gen_synthetic(std::string_view kind, Index per_cluster, double noise, std::uint64_t seed) {
  return gen_synthetic(parse_synthetic_kind(kind), per_cluster, noise, seed);
}

Dataset gaussian_mixture(Index n, Index dim, Index classes, double scale, double spread, std::uint64_t seed) {
  if (n < 1 || dim < 1 || classes < 1) throw std::invalid_argument("gaussian_mixture: sizes must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, scale);
  std::normal_distribution<double> gauss(0.0, spread);
  Eigen::MatrixXd centers(classes, dim);
  for (Index c = 0; c < classes; ++c)
    for (Index j = 0; j < dim; ++j) centers(c, j) = uniform(rng);

  Dataset data;
  data.name = "mixture";
  data.points.resize(n, dim);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Index c = i % classes;
    labels[static_cast<std::size_t>(i)] = static_cast<int>(c);
    for (Index j = 0; j < dim; ++j) data.points(i, j) = centers(c, j) + gauss(rng);
  }
  data.labels = std::move(labels);
  return data;
}

}  // namespace kkm

#pragma once

#include <kkm/dataset.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace kkm {

enum class SyntheticKind { ring, parabolic, zigzag };

/// Parses "ring", "parabolic" or "zigzag"; throws std::invalid_argument otherwise.
SyntheticKind parse_synthetic_kind(std::string_view name);
std::string to_string(SyntheticKind kind);

/// Two-cluster 2-D test sets, `per_cluster` points per label, with isotropic
/// Gaussian noise of standard deviation `noise` added to each coordinate.
///
///   ring       label 0 on the circle of radius 0.2, label 1 on radius 1;
///              angles uniform.
///   parabolic  label 0 on y = x^2 for x in [-1, 1], label 1 on
///              y = 2.5 - (x - 0.5)^2 for x in [-0.5, 1.5].
///   zigzag     label 0 on a triangle wave of amplitude 0.25 and period 0.4
///              over x in [0, 1.2]; label 1 is the same wave shifted up by 1.
///
/// Labels 0 come first. The output depends only on the arguments.
Dataset gen_synthetic(SyntheticKind kind, Index per_cluster, double noise, std::uint64_t seed);
Dataset gen_synthetic(std::string_view kind, Index per_cluster, double noise, std::uint64_t seed);

/// Base curves used by gen_synthetic: for ring the radius of `label`, for the
/// others the noiseless y value at x.
double synthetic_ring_radius(int label);
double synthetic_curve_y(SyntheticKind kind, int label, double x);

/// `classes` isotropic Gaussian blobs in `dim` dimensions. Centers are uniform
/// in [0, scale]^dim, points scatter around them with standard deviation
/// `spread`, and point i gets class i % classes.
Dataset gaussian_mixture(Index n, Index dim, Index classes, double scale, double spread, std::uint64_t seed);

}  // namespace kkm

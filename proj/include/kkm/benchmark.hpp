#pragma once

#include <kkm/dataset.hpp>
#include <kkm/kernel.hpp>
#include <kkm/kernel_kmeans.hpp>
#include <kkm/kmeans.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kkm {

enum class Algorithm { icf, kernel, chol, approx, rff, nystrom };

std::string to_string(Algorithm algorithm);
/// Accepts the report ids: icf, kernel, chol, approx, rff, nystrom.
Algorithm parse_algorithm(std::string_view name);
std::vector<Algorithm> parse_algorithm_list(std::string_view comma_separated);

/// True for the algorithms that build the dense n x n Gram matrix.
bool needs_full_gram(Algorithm algorithm);

/// Runs one clustering algorithm. `subset_size` is the ICF rank bound, the
/// landmark count for nystrom and approx, and the number of sampled
/// frequencies for rff (each yields a cosine and a sine feature). The dense
/// algorithms ignore it.
ClusterModel<double> run_algorithm(Algorithm algorithm, const Dataset& data, const KernelSpec& spec,
                                   Index subset_size, const ClusterOptions& options, double epsilon = 1e-3,
                                   Index guard = default_gram_guard, StageTimes* times = nullptr);

struct BenchmarkDataset {
  Dataset data;
  double sigma = 1.0;
  /// Number of clusters; 0 means the number of distinct labels.
  Index k = 0;
};

struct BenchmarkConfig {
  std::vector<BenchmarkDataset> datasets;
  std::vector<Algorithm> algorithms;
  std::vector<Index> subset_sizes;
  int seeds = 10;
  std::uint64_t first_seed = 0;
  double epsilon = 1e-3;
  LloydOptions lloyd{};
  Index guard = default_gram_guard;
  /// Run the first cell once, untimed, before measuring.
  bool warmup = true;
};

struct BenchmarkRow {
  std::string dataset;
  Algorithm algorithm = Algorithm::icf;
  Index subset_size = 0;
  std::uint64_t seed = 0;
  std::optional<double> accuracy;
  double objective = 0;
  Index achieved_rank = 0;
  double factorize_ms = 0;
  double cluster_ms = 0;
  double total_ms = 0;
  bool skipped = false;
  std::string note;
  std::vector<int> assignments;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
};

/// One row per (dataset, algorithm, subset size, seed), in that nesting
/// order. Dense algorithms on datasets above the guard yield skipped rows.
BenchmarkReport run_benchmark(const BenchmarkConfig& config);

/// Comma-separated report with header
/// dataset,algorithm,subset_size,seed,accuracy,objective,achieved_rank,factorize_ms,cluster_ms,total_ms
/// Skipped rows are not written.
void write_report_csv(std::ostream& out, const BenchmarkReport& report);

struct BenchmarkSummary {
  std::string dataset;
  Algorithm algorithm = Algorithm::icf;
  Index subset_size = 0;
  int runs = 0;
  int skipped = 0;
  std::optional<double> median_accuracy;
  std::optional<double> accuracy_variance;
  double median_objective = 0;
  double median_total_ms = 0;
};

/// Medians and variances per (dataset, algorithm, subset size).
std::vector<BenchmarkSummary> summarize(const BenchmarkReport& report);

double median(std::vector<double> values);
/// Population variance.
double variance(const std::vector<double>& values);

}  // namespace kkm

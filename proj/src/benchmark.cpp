#include <kkm/benchmark.hpp>

#include <kkm/baselines.hpp>
#include <kkm/eval.hpp>
#include <kkm/io.hpp>

#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace kkm {

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::icf: return "icf";
    case Algorithm::kernel: return "kernel";
    case Algorithm::chol: return "chol";
    case Algorithm::approx: return "approx";
    case Algorithm::rff: return "rff";
    case Algorithm::nystrom: return "nystrom";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::icf, Algorithm::kernel, Algorithm::chol, Algorithm::approx, Algorithm::rff,
                      Algorithm::nystrom})
    if (name == to_string(a)) return a;
  throw std::invalid_argument("unknown algorithm '" + std::string(name) +
                              "' (expected icf, kernel, chol, approx, rff or nystrom)");
}

std::vector<Algorithm> parse_algorithm_list(std::string_view text) {
  std::vector<Algorithm> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (!item.empty()) out.push_back(parse_algorithm(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("empty algorithm list");
  return out;
}

bool needs_full_gram(Algorithm algorithm) {
  return algorithm == Algorithm::kernel || algorithm == Algorithm::chol;
}

ClusterModel<double> run_algorithm(Algorithm algorithm, const Dataset& data, const KernelSpec& spec,
                                   Index subset_size, const ClusterOptions& options, double epsilon, Index guard,
                                   StageTimes* times) {
  switch (algorithm) {
    case Algorithm::icf: return icf_kkmeans(data, spec, subset_size, options, epsilon, times);
    case Algorithm::kernel: return kernel_kmeans_oracle(data, spec, options, guard, times);
    case Algorithm::chol: return kernel_chol_kmeans(data, spec, options, guard, times);
    case Algorithm::approx: return approx_kkmeans(data, spec, subset_size, options, times);
    case Algorithm::rff: return rff_kmeans(data, spec, 2 * subset_size, options, times);
    case Algorithm::nystrom: return nystrom_kmeans(data, spec, subset_size, options, times);
  }
  throw std::logic_error("unhandled algorithm");
}

namespace {

BenchmarkRow run_cell(const BenchmarkDataset& entry, Algorithm algorithm, Index subset_size, std::uint64_t seed,
                      const BenchmarkConfig& config) {
  BenchmarkRow row;
  row.dataset = entry.data.name;
  row.algorithm = algorithm;
  row.subset_size = subset_size;
  row.seed = seed;
  if (needs_full_gram(algorithm) && entry.data.size() > config.guard) {
    row.skipped = true;
    row.note = "n = " + std::to_string(entry.data.size()) + " exceeds the dense guard " +
               std::to_string(config.guard);
    return row;
  }
  const Index k = entry.k > 0 ? entry.k
                              : (entry.data.labels ? static_cast<Index>(num_classes(*entry.data.labels)) : 0);
  if (k < 1) throw std::invalid_argument("dataset '" + entry.data.name + "' has no labels; set k explicitly");

  const ClusterOptions options{k, seed, config.lloyd};
  StageTimes times;
  const auto start = std::chrono::steady_clock::now();
  const auto model = run_algorithm(algorithm, entry.data, KernelSpec::gaussian(entry.sigma), subset_size, options,
                                   config.epsilon, config.guard, &times);
  row.total_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  row.factorize_ms = times.factorize_ms;
  row.cluster_ms = times.cluster_ms;
  row.objective = model.objective;
  row.achieved_rank = model.embedding_dim;
  if (entry.data.labels) row.accuracy = accuracy(model.assignments, *entry.data.labels);
  row.assignments = model.assignments;
  return row;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
  if (config.seeds < 1) throw std::invalid_argument("benchmark needs at least one seed");
  if (config.subset_sizes.empty()) throw std::invalid_argument("benchmark needs at least one subset size");
  for (const auto& entry : config.datasets) validate(entry.data);

  if (config.warmup && !config.datasets.empty() && !config.algorithms.empty())
    (void)run_cell(config.datasets.front(), config.algorithms.front(), config.subset_sizes.front(), config.first_seed,
                   config);

  BenchmarkReport report;
  for (const auto& entry : config.datasets)
    for (Algorithm algorithm : config.algorithms)
      for (Index s : config.subset_sizes)
        for (int r = 0; r < config.seeds; ++r)
          report.rows.push_back(run_cell(entry, algorithm, s, config.first_seed + static_cast<std::uint64_t>(r), config));
  return report;
}

void write_report_csv(std::ostream& out, const BenchmarkReport& report) {
  out << "dataset,algorithm,subset_size,seed,accuracy,objective,achieved_rank,factorize_ms,cluster_ms,total_ms\n";
  for (const auto& row : report.rows) {
    if (row.skipped) continue;
    out << row.dataset << ',' << to_string(row.algorithm) << ',' << row.subset_size << ',' << row.seed << ','
        << (row.accuracy ? format_double(*row.accuracy) : std::string()) << ',' << format_double(row.objective) << ','
        << row.achieved_rank << ',' << format_double(row.factorize_ms) << ',' << format_double(row.cluster_ms) << ','
        << format_double(row.total_ms) << '\n';
  }
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

double variance(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("variance of an empty set");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double acc = 0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(values.size());
}

std::vector<BenchmarkSummary> summarize(const BenchmarkReport& report) {
  using Key = std::tuple<std::string, int, Index>;
  std::vector<Key> order;
  std::map<Key, std::vector<const BenchmarkRow*>> groups;
  for (const auto& row : report.rows) {
    Key key{row.dataset, static_cast<int>(row.algorithm), row.subset_size};
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&row);
  }
  std::vector<BenchmarkSummary> out;
  for (const auto& key : order) {
    BenchmarkSummary summary;
    summary.dataset = std::get<0>(key);
    summary.algorithm = static_cast<Algorithm>(std::get<1>(key));
    summary.subset_size = std::get<2>(key);
    std::vector<double> acc, obj, ms;
    for (const auto* row : groups[key]) {
      if (row->skipped) {
        ++summary.skipped;
        continue;
      }
      ++summary.runs;
      if (row->accuracy) acc.push_back(*row->accuracy);
      obj.push_back(row->objective);
      ms.push_back(row->total_ms);
    }
    if (!acc.empty()) {
      summary.median_accuracy = median(acc);
      summary.accuracy_variance = variance(acc);
    }
    if (!obj.empty()) {
      summary.median_objective = median(obj);
      summary.median_total_ms = median(ms);
    }
    out.push_back(summary);
  }
  return out;
}

}  // namespace kkm

// kkm: kernel k-means through incomplete Cholesky factorization.
//
//   kkm synth ring 500 0.1 42 ring.libsvm
//   kkm factorize ring.libsvm --sigma 16 --subset-size 50 --out ring.icf
//   kkm cluster ring.libsvm --sigma 16 --subset-size 50 --clusters 2 --out ring.assign
//   kkm bench pendigits.libsvm --sigma 1.52587890625e-05 --subset-size 25,50,100 --out report.csv

#include <kkm/benchmark.hpp>
#include <kkm/eval.hpp>
#include <kkm/icf.hpp>
#include <kkm/io.hpp>
#include <kkm/synthetic.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace {

using kkm::Index;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

/// A dataset argument is a LIBSVM path, `synth:<kind>:<per_cluster>:<noise>:<seed>`
/// or `mixture:<n>:<dim>:<classes>:<scale>:<spread>:<seed>`.
kkm::Dataset load_dataset(const std::string& source, bool standardize) {
  kkm::Dataset data;
  if (source.rfind("synth:", 0) == 0) {
    const auto parts = split(source, ':');
    if (parts.size() != 5) throw std::invalid_argument("expected synth:<kind>:<per_cluster>:<noise>:<seed>");
    data = kkm::gen_synthetic(parts[1], std::stoll(parts[2]), std::stod(parts[3]), std::stoull(parts[4]));
  } else if (source.rfind("mixture:", 0) == 0) {
    const auto parts = split(source, ':');
    if (parts.size() != 7)
      throw std::invalid_argument("expected mixture:<n>:<dim>:<classes>:<scale>:<spread>:<seed>");
    data = kkm::gaussian_mixture(std::stoll(parts[1]), std::stoll(parts[2]), std::stoll(parts[3]),
                                 std::stod(parts[4]), std::stod(parts[5]), std::stoull(parts[6]));
  } else {
    data = kkm::read_libsvm(source);
  }
  kkm::validate(data);
  return standardize ? kkm::standardized(std::move(data)) : data;
}

Index resolve_k(Index requested, const kkm::Dataset& data) {
  if (requested > 0) return requested;
  if (data.labels) return static_cast<Index>(kkm::num_classes(*data.labels));
  throw std::invalid_argument("--clusters is required for unlabelled data");
}

struct Common {
  double sigma = 0;
  Index subset_size = 50;
  Index clusters = 0;
  double epsilon = 1e-3;
  int max_iter = 1000;
  std::uint64_t seed = 0;
  bool allow_full_gram = false;
  bool standardize = false;
  std::string out;

  Index guard() const { return allow_full_gram ? std::numeric_limits<Index>::max() : kkm::default_gram_guard; }
};

int cmd_synth(const std::string& kind, Index per_cluster, double noise, std::uint64_t seed, const std::string& out) {
  const auto data = kkm::gen_synthetic(kind, per_cluster, noise, seed);
  kkm::write_file_atomically(out, [&](std::ostream& os) { kkm::write_libsvm(os, data); });
  std::cout << "wrote " << data.size() << " points (" << kind << ") to " << out << '\n';
  return 0;
}

int cmd_factorize(const std::string& source, const Common& c) {
  const auto data = load_dataset(source, c.standardize);
  if (c.subset_size > data.size())
    throw std::invalid_argument("--subset-size exceeds the number of points (" + std::to_string(data.size()) + ")");
  kkm::KernelGram<double> gram(data, kkm::KernelSpec::gaussian(c.sigma));
  const auto factor = kkm::icf_factorize(gram, kkm::IcfOptions{c.subset_size, c.epsilon});
  const auto n = static_cast<std::size_t>(factor.size());
  const auto s = static_cast<std::size_t>(factor.rank());
  const std::size_t evals = gram.evaluations();
  if (evals > n * (s + 1))
    throw std::logic_error("kernel evaluation count " + std::to_string(evals) + " exceeds n(s+1)");
  if (!c.out.empty()) kkm::write_file_atomically(c.out, [&](std::ostream& os) { kkm::write_factor(os, factor); });
  if (s == 0) std::cerr << "residual trace is already below epsilon; no pivots selected\n";
  std::cout << n << ' ' << s << ' ' << kkm::format_double(kkm::residual_trace(factor)) << ' ' << evals << '\n';
  return 0;
}

int cmd_cluster(const std::string& source, const Common& c, const std::string& algorithm_name) {
  const auto data = load_dataset(source, c.standardize);
  const auto algorithm = kkm::parse_algorithm(algorithm_name);
  const kkm::ClusterOptions options{resolve_k(c.clusters, data), c.seed, kkm::LloydOptions{c.max_iter, 1e-6}};
  kkm::StageTimes times;
  const auto start = std::chrono::steady_clock::now();
  const auto model = kkm::run_algorithm(algorithm, data, kkm::KernelSpec::gaussian(c.sigma), c.subset_size, options,
                                        c.epsilon, c.guard(), &times);
  const double total = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (!c.out.empty())
    kkm::write_file_atomically(c.out, [&](std::ostream& os) {
      for (int a : model.assignments) os << a << '\n';
    });
  std::cout << "algorithm " << kkm::to_string(algorithm) << '\n'
            << "objective " << kkm::format_double(model.objective) << '\n'
            << "iterations " << model.iterations << (model.converged ? " (converged)" : " (max_iter reached)") << '\n'
            << "rank " << model.embedding_dim << '\n';
  if (data.labels)
    std::cout << "accuracy " << std::fixed << std::setprecision(4) << kkm::accuracy(model.assignments, *data.labels)
              << std::defaultfloat << '\n';
  std::cout << std::fixed << std::setprecision(2) << "factorize_ms " << times.factorize_ms << '\n'
            << "cluster_ms " << times.cluster_ms << '\n'
            << "total_ms " << total << '\n';
  return 0;
}

int cmd_bench(const std::vector<std::string>& sources, const Common& c, const std::vector<double>& sigmas,
              const std::vector<Index>& sizes, int seeds, const std::string& algorithms) {
  if (sigmas.size() != 1 && sigmas.size() != sources.size())
    throw std::invalid_argument("--sigma takes one value or one per dataset");
  kkm::BenchmarkConfig config;
  config.algorithms = kkm::parse_algorithm_list(algorithms);
  config.subset_sizes = sizes;
  config.seeds = seeds;
  config.first_seed = c.seed;
  config.epsilon = c.epsilon;
  config.lloyd.max_iter = c.max_iter;
  config.guard = c.guard();
  for (std::size_t i = 0; i < sources.size(); ++i) {
    kkm::BenchmarkDataset entry{load_dataset(sources[i], c.standardize), sigmas.size() == 1 ? sigmas[0] : sigmas[i],
                                c.clusters};
    entry.k = resolve_k(c.clusters, entry.data);
    config.datasets.push_back(std::move(entry));
  }

  const auto report = kkm::run_benchmark(config);
  if (!c.out.empty()) kkm::write_file_atomically(c.out, [&](std::ostream& os) { kkm::write_report_csv(os, report); });

  for (const auto& s : kkm::summarize(report)) {
    std::cout << s.dataset << ' ' << std::left << std::setw(8) << kkm::to_string(s.algorithm) << std::right
              << " s=" << std::setw(5) << s.subset_size;
    if (s.runs == 0) {
      std::cout << "  skipped (n exceeds the dense guard; pass --allow-full-gram to force)\n";
      continue;
    }
    std::cout << std::fixed << std::setprecision(4);
    if (s.median_accuracy)
      std::cout << "  median_acc " << *s.median_accuracy << "  acc_var " << std::scientific << std::setprecision(2)
                << *s.accuracy_variance << std::fixed;
    std::cout << std::setprecision(2) << "  median_ms " << s.median_total_ms << "  runs " << s.runs << '\n'
              << std::defaultfloat;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel k-means clustering through incomplete Cholesky factorization"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub, bool needs_sigma) {
    auto* sigma = sub->add_option("--sigma", common.sigma, "Gaussian kernel parameter in exp(-sigma |x-y|^2)")
                      ->check(CLI::PositiveNumber);
    if (needs_sigma) sigma->required();
    sub->add_option("--subset-size", common.subset_size, "ICF rank bound / landmark count")
        ->check(CLI::PositiveNumber);
    sub->add_option("--epsilon", common.epsilon, "ICF residual trace tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--out", common.out, "Output path");
    sub->add_flag("--standardize", common.standardize, "Z-score every feature before clustering");
  };
  auto add_clustering = [&](CLI::App* sub) {
    sub->add_option("--clusters", common.clusters, "Number of clusters (default: number of labels)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", common.max_iter, "Lloyd iteration cap")->check(CLI::PositiveNumber);
    sub->add_option("--seed", common.seed, "Random seed");
    sub->add_flag("--allow-full-gram", common.allow_full_gram,
                  "Allow dense n x n paths above n = 5000 (memory grows as n^2)");
  };

  std::string kind, synth_out;
  Index per_cluster = 500;
  double noise = 0.1;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Write a synthetic two-cluster dataset in LIBSVM format");
  synth->add_option("kind", kind, "ring, parabolic or zigzag")->required();
  synth->add_option("per_cluster", per_cluster, "Points per cluster")->required()->check(CLI::PositiveNumber);
  synth->add_option("noise", noise, "Gaussian noise standard deviation")->required()->check(CLI::NonNegativeNumber);
  synth->add_option("seed", synth_seed, "Random seed")->required();
  synth->add_option("out,--out", synth_out, "Output path")->required();

  std::string source;
  auto* factorize = app.add_subcommand("factorize", "Incomplete Cholesky factorization of the Gram matrix");
  factorize->add_option("data", source, "LIBSVM file or synth:/mixture: spec")->required();
  add_common(factorize, true);

  std::string algorithm = "icf";
  auto* cluster = app.add_subcommand("cluster", "Cluster a dataset and write one cluster id per line");
  cluster->add_option("data", source, "LIBSVM file or synth:/mixture: spec")->required();
  add_common(cluster, true);
  add_clustering(cluster);
  cluster->add_option("--algorithms", algorithm, "icf (default), kernel, chol, approx, rff or nystrom");

  std::vector<std::string> sources;
  std::vector<double> sigmas;
  std::vector<Index> sizes{25, 50, 100};
  int seeds = 10;
  std::string algorithms = "icf,kernel,chol,approx,rff,nystrom";
  auto* bench = app.add_subcommand("bench", "Benchmark algorithms over subset sizes and seeds");
  bench->add_option("data", sources, "LIBSVM files or synth:/mixture: specs")->required();
  bench->add_option("--sigma", sigmas, "Kernel parameter, one value or one per dataset")
      ->required()
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  bench->add_option("--subset-size", sizes, "Comma-separated subset sizes")->delimiter(',')->check(CLI::PositiveNumber);
  bench->add_option("--epsilon", common.epsilon, "ICF residual trace tolerance")->check(CLI::PositiveNumber);
  bench->add_option("--out", common.out, "Report path (CSV)");
  bench->add_flag("--standardize", common.standardize, "Z-score every feature before clustering");
  bench->add_option("--seeds", seeds, "Runs per configuration")->check(CLI::PositiveNumber);
  bench->add_option("--algorithms", algorithms, "Comma-separated algorithm ids");
  add_clustering(bench);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      return cmd_synth(kind, per_cluster, noise, synth_seed, synth_out);
    }
    if (*factorize) return cmd_factorize(source, common);
    if (*cluster) return cmd_cluster(source, common, algorithm);
    if (*bench) return cmd_bench(sources, common, sigmas, sizes, seeds, algorithms);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

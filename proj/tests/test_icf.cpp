#include "support.hpp"

#include <kkm/icf.hpp>

#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace {

kkm::IcfFactor<double> run(const Eigen::MatrixXd& K, kkm::Index max_rank, double eps = 1e-12) {
  kkm::DenseGram<double> g(K);
  return kkm::icf_factorize(g, kkm::IcfOptions{max_rank, eps});
}

// Random SPSD matrix of rank r: G^T G with G r x n.
Eigen::MatrixXd low_rank(kkm::Index r, kkm::Index n, std::uint64_t seed) {
  const Eigen::MatrixXd G = test::gaussian_matrix(r, n, seed);
  return G.transpose() * G;
}

}  // namespace

TEST_CASE("identical points collapse to one all-ones column") {
  kkm::Dataset data;
  data.points = Eigen::MatrixXd::Constant(3, 2, 0.3);
  const auto f = kkm::icf_factorize(data, kkm::KernelSpec::gaussian(1.0), kkm::IcfOptions{3, 1e-3});
  CHECK(f.rank() == 1);
  CHECK(f.trace_history() == std::vector<double>{3.0, 0.0});
  CHECK(f.factor() == Eigen::MatrixXd::Ones(3, 1));
}

TEST_CASE("identity kernel loses one unit of trace per step") {
  kkm::Dataset data;
  data.points = Eigen::VectorXd::LinSpaced(8, 0.0, 700.0);
  const auto f = kkm::icf_factorize(data, kkm::KernelSpec::gaussian(10.0), kkm::IcfOptions{5, 1e-3});
  REQUIRE(f.rank() == 5);
  for (int s = 0; s <= 5; ++s) CHECK(f.trace_history()[static_cast<std::size_t>(s)] == 8.0 - s);
  // All residuals tie at 1, so pivots come in index order.
  CHECK(f.pivots() == std::vector<kkm::Index>{0, 1, 2, 3, 4});
}

TEST_CASE("residual trace equals the Nystrom formula on the chosen pivots") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto data = test::random_data(10, 3, 20 + seed);
    const auto spec = kkm::KernelSpec::gaussian(0.4);
    const auto f = kkm::icf_factorize(data, spec, kkm::IcfOptions{4, 1e-12});
    REQUIRE(f.rank() == 4);
    const double oracle = test::nystrom_residual(test::gram(0.4, data.points), f.pivots());
    CHECK(kkm::residual_trace(f) == doctest::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("greedy pivots maximise the residual diagonal") {
  const auto data = test::random_data(25, 2, 31);
  const Eigen::MatrixXd K = test::gram(1.3, data.points);
  const auto f = kkm::icf_factorize(data, kkm::KernelSpec::gaussian(1.3), kkm::IcfOptions{8, 1e-12});
  // Brute force: at each step the chosen pivot has the largest diagonal of K - K_MB K_BB^-1 K_MB^T.
  std::vector<kkm::Index> chosen;
  for (kkm::Index step = 0; step < f.rank(); ++step) {
    Eigen::VectorXd residual = K.diagonal();
    if (!chosen.empty()) {
      const kkm::Index s = static_cast<kkm::Index>(chosen.size());
      Eigen::MatrixXd KMB(25, s), KBB(s, s);
      for (kkm::Index j = 0; j < s; ++j) {
        KMB.col(j) = K.col(chosen[static_cast<std::size_t>(j)]);
        for (kkm::Index i = 0; i < s; ++i) KBB(i, j) = K(chosen[static_cast<std::size_t>(i)], chosen[static_cast<std::size_t>(j)]);
      }
      residual -= (KMB * KBB.ldlt().solve(KMB.transpose())).diagonal();
    }
    const kkm::Index t = f.pivots()[static_cast<std::size_t>(step)];
    for (kkm::Index i = 0; i < 25; ++i)
      if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) CHECK(residual(t) >= residual(i) - 1e-12);
    // The residual at the pivot is the square of the new diagonal entry.
    CHECK(f.factor()(t, step) * f.factor()(t, step) == doctest::Approx(residual(t)).epsilon(1e-10));
    chosen.push_back(t);
  }
}

TEST_CASE("2x2 Cholesky by hand") {
  const double c = 0.6;
  Eigen::Matrix2d K;
  K << 1, c, c, 1;
  kkm::DenseGram<double> g(K);
  auto f = kkm::icf_start(g, 2);
  kkm::icf_step(f, g);
  CHECK(f.pivots() == std::vector<kkm::Index>{0});
  CHECK(f.factor() == Eigen::Vector2d(1.0, c));
  kkm::icf_step(f, g);
  CHECK(f.factor()(0, 1) == 0.0);
  CHECK(f.factor()(1, 1) == doctest::Approx(std::sqrt(1 - c * c)).epsilon(1e-15));
  const Eigen::Matrix2d L = K.llt().matrixL();
  CHECK((f.factor() - L).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("first step is the pivot column scaled by 1/sqrt(K_tt)") {
  const auto data = test::random_data(12, 2, 8);
  const auto spec = kkm::KernelSpec::gaussian(0.5);
  kkm::KernelGram<double> g(data, spec);
  auto f = kkm::icf_start(g);
  kkm::icf_step(f, g);
  CHECK(f.pivots()[0] == 0);  // Gaussian diagonal ties everywhere
  CHECK(f.factor().col(0) == kkm::kernel_column(spec, data, 0));

  Eigen::Vector3d d(1.0, 9.0, 4.0);
  Eigen::Matrix3d K = d.asDiagonal();
  K(0, 2) = K(2, 0) = 1.0;
  kkm::DenseGram<double> dg(K);
  auto h = kkm::icf_start(dg);
  kkm::icf_step(h, dg);
  CHECK(h.pivots().back() == 1);
  CHECK(h.factor().col(0) == Eigen::Vector3d(0.0, 3.0, 0.0));
}

TEST_CASE("new column vanishes at earlier pivots and equals nu at its own") {
  const auto data = test::random_data(30, 4, 9);
  const auto f = kkm::icf_factorize(data, kkm::KernelSpec::gaussian(0.2), kkm::IcfOptions{12, 1e-12});
  const auto P = f.factor();
  for (kkm::Index j = 0; j < f.rank(); ++j) {
    for (kkm::Index i = 0; i < j; ++i) CHECK(std::abs(P(f.pivots()[static_cast<std::size_t>(i)], j)) <= 1e-10);
    CHECK(P(f.pivots()[static_cast<std::size_t>(j)], j) > 0.0);
  }
}

TEST_CASE("reconstruct: pivot rows, full rank, empty factor") {
  const auto data = test::random_data(50, 3, 12);
  const auto spec = kkm::KernelSpec::gaussian(0.25);
  const Eigen::MatrixXd K = test::gram(0.25, data.points);

  const auto partial = kkm::icf_factorize(data, spec, kkm::IcfOptions{10, 1e-12});
  const Eigen::MatrixXd R = kkm::reconstruct(partial);
  for (kkm::Index t : partial.pivots()) {
    CHECK((R.row(t) - K.row(t)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((R.col(t) - K.col(t)).cwiseAbs().maxCoeff() <= 1e-10);
  }
  CHECK(R == R.transpose());

  const auto full = kkm::icf_factorize(data, spec, kkm::IcfOptions{50, 1e-13});
  CHECK((kkm::reconstruct(full) - K).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(kkm::residual_trace(full) <= 1e-8 * 50);

  kkm::KernelGram<double> g(data, spec);
  const auto empty = kkm::icf_start(g);
  CHECK(kkm::reconstruct(empty) == Eigen::MatrixXd::Zero(50, 50));
  CHECK(kkm::residual_trace(empty) == 50.0);
  CHECK_THROWS_AS(kkm::reconstruct(partial, 20), kkm::GuardExceeded);
}

TEST_CASE("residual trace agrees with the dense residual and the residual diagonal") {
  const auto data = test::random_data(30, 2, 13);
  const auto f = kkm::icf_factorize(data, kkm::KernelSpec::gaussian(2.0), kkm::IcfOptions{10, 1e-12});
  const Eigen::MatrixXd K = test::gram(2.0, data.points);
  CHECK(kkm::residual_trace(f) == doctest::Approx((K - kkm::reconstruct(f)).trace()).epsilon(1e-8));
  CHECK(kkm::residual_trace(f) == doctest::Approx(f.residual_diag().sum()).epsilon(1e-9));
  for (kkm::Index t : f.pivots()) CHECK(f.residual_diag()(t) == 0.0);
}

TEST_CASE("exact rank: r steps, no breakdown, refused step r+1") {
  for (kkm::Index r : {1, 5, 17, 30}) {
    const Eigen::MatrixXd K = low_rank(r, 60, 40 + static_cast<std::uint64_t>(r));
    const auto f = run(K, 60, 1e-10 * K.trace());
    CHECK(f.rank() == r);
    CHECK(kkm::residual_trace(f) <= 1e-8 * K.trace());
    // Even with a tolerance no finite run can reach, the rank stays at r.
    CHECK(run(K, 60, 1e-300).rank() == r);
  }
}

TEST_CASE("property: factor columns stay linearly independent") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const kkm::Index n = std::uniform_int_distribution<kkm::Index>(5, 100)(rng);
    const kkm::Index r = std::uniform_int_distribution<kkm::Index>(1, n)(rng);
    const Eigen::MatrixXd K = low_rank(r, n, rng());
    const auto f = run(K, n, 1e-10 * K.trace());
    REQUIRE(f.rank() <= r);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(f.factor());
    CHECK(svd.singularValues().minCoeff() > 1e-10);
    std::set<kkm::Index> distinct(f.pivots().begin(), f.pivots().end());
    CHECK(distinct.size() == f.pivots().size());
  }
}

TEST_CASE("property: trace history is non-increasing and residuals stay non-negative") {
  std::mt19937_64 rng(78);
  std::uniform_real_distribution<double> log_sigma(-6.0, 4.0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto data = test::random_data(std::uniform_int_distribution<kkm::Index>(2, 80)(rng),
                                        std::uniform_int_distribution<kkm::Index>(1, 6)(rng), rng());
    const auto f =
        kkm::icf_factorize(data, kkm::KernelSpec::gaussian(std::exp2(log_sigma(rng))), kkm::IcfOptions{data.size(), 1e-9});
    const auto& h = f.trace_history();
    CHECK(h.size() == static_cast<std::size_t>(f.rank()) + 1);
    for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1] + 1e-12);
    CHECK(f.residual_diag().minCoeff() >= -1e-10);
  }
}

TEST_CASE("kernel evaluations stay within n(s+1)") {
  const auto data = test::random_data(200, 3, 14);
  kkm::KernelGram<double> g(data, kkm::KernelSpec::gaussian(1.0));
  const auto f = kkm::icf_factorize(g, kkm::IcfOptions{25, 1e-3});
  CHECK(g.evaluations() <= 200u * static_cast<std::size_t>(f.rank() + 1));
  CHECK(f.kernel_evaluations() == g.evaluations());
}

TEST_CASE("stopping rule") {
  const auto data = test::random_data(40, 2, 15);
  const auto spec = kkm::KernelSpec::gaussian(1.0);
  // The starting trace is 40, so a looser epsilon stops before any step.
  CHECK(kkm::icf_factorize(data, spec, kkm::IcfOptions{10, 1e9}).rank() == 0);
  const auto f = kkm::icf_factorize(data, spec, kkm::IcfOptions{40, 1.0});
  CHECK(kkm::residual_trace(f) <= 1.0);
  CHECK(f.trace_history()[f.trace_history().size() - 2] > 1.0);
  CHECK(kkm::icf_factorize(data, spec, kkm::IcfOptions{3, 1e-12}).rank() == 3);
}

TEST_CASE("argument and breakdown errors") {
  const auto data = test::random_data(5, 2, 16);
  const auto spec = kkm::KernelSpec::gaussian(1.0);
  CHECK_THROWS_AS(kkm::icf_factorize(data, spec, kkm::IcfOptions{6, 1e-3}), std::invalid_argument);
  CHECK_THROWS_AS(kkm::icf_factorize(data, spec, kkm::IcfOptions{0, 1e-3}), std::invalid_argument);
  CHECK_THROWS_AS(kkm::icf_factorize(data, spec, kkm::IcfOptions{2, 0.0}), std::invalid_argument);

  // Not semidefinite: the residual at index 1 goes to 1 - 4 = -3 after pivoting on 0.
  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1;
  kkm::DenseGram<double> g(bad);
  auto f = kkm::icf_start(g);
  CHECK_THROWS_AS(kkm::icf_step(f, g), kkm::IcfBreakdown);

  Eigen::Matrix2d neg;
  neg << -1, 0, 0, 1;
  CHECK_THROWS_AS(kkm::icf_start(kkm::DenseGram<double>(neg)), kkm::IcfBreakdown);
}

TEST_CASE("tiny negative residuals are clamped") {
  // Rank-one matrix with rounding noise: after the first pivot every
  // residual is numerically zero and may come out slightly negative.
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(10, 0.1, 1.0);
  Eigen::MatrixXd K = v * v.transpose();
  K.diagonal().array() -= 1e-13;
  K(9, 9) = v(9) * v(9);
  const auto f = run(K, 10);
  CHECK(f.rank() == 1);
  CHECK(f.residual_diag().minCoeff() == 0.0);
}

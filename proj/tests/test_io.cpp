#include "support.hpp"

#include <kkm/io.hpp>

#include <doctest.h>

#include <bit>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;

namespace {

std::size_t error_line(std::string_view text) {
  try {
    kkm::parse_libsvm(text);
  } catch (const kkm::ParseError& e) {
    return e.line();
  }
  return 0;
}

std::string serialize(const kkm::Dataset& data) {
  std::ostringstream out;
  kkm::write_libsvm(out, data);
  return out.str();
}

}  // namespace

TEST_CASE("parse_libsvm examples") {
  const auto a = kkm::parse_libsvm("1 1:0.5 3:2.0\n2 2:1.0");
  Eigen::MatrixXd expect(2, 3);
  expect << 0.5, 0, 2.0, 0, 1.0, 0;
  CHECK(a.points == expect);
  CHECK(*a.labels == std::vector<int>{1, 2});

  const auto b = kkm::parse_libsvm("3 1:7");
  CHECK(b.points == Eigen::MatrixXd::Constant(1, 1, 7.0));
  CHECK(*b.labels == std::vector<int>{3});
}

TEST_CASE("parse_libsvm tolerates blank lines, CRLF, signs and a fixed width") {
  const auto d = kkm::parse_libsvm("\n-1 2:+1e-3\r\n\n   \n+1.0 1:-4\t2:5\r\n", 4);
  CHECK(d.size() == 2);
  CHECK(d.dim() == 4);
  CHECK(*d.labels == std::vector<int>{-1, 1});
  CHECK(d.points(0, 1) == 1e-3);
  CHECK(d.points(1, 0) == -4.0);
  // A row with no features is an all-zero point.
  CHECK(kkm::parse_libsvm("0\n1 2:1").points.row(0).isZero());
}

TEST_CASE("parse_libsvm errors carry the line number") {
  CHECK(error_line("1 1:0.5\n2 1:abc") == 2);
  CHECK(error_line("1 1:1 3:2\n1 3:1 2:5") == 2);
  CHECK(error_line("1 2:1 2:3") == 1);
  CHECK(error_line("1 0:1") == 1);
  CHECK(error_line("x 1:1") == 1);
  CHECK(error_line("1.5 1:1") == 1);
  CHECK(error_line("1 1") == 1);
  CHECK(error_line("1 1:nan") == 1);
  CHECK_THROWS_AS(kkm::parse_libsvm(""), kkm::ParseError);
  CHECK_THROWS_AS(kkm::parse_libsvm("\n\n  \n"), kkm::ParseError);
  CHECK_THROWS_AS(kkm::parse_libsvm("1 5:1", 3), kkm::ParseError);
  CHECK_THROWS_AS(kkm::read_libsvm("/nonexistent/file.libsvm"), std::runtime_error);
}

TEST_CASE("format_double round-trips exactly") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::bit_cast<double>(rng());
    if (!std::isfinite(v)) continue;
    // strtod, since stod rejects subnormals.
    CHECK(std::strtod(kkm::format_double(v).c_str(), nullptr) == v);
  }
  CHECK(kkm::format_double(0.5) == "0.5");
  CHECK(kkm::format_double(-0.0) == "-0");
}

TEST_CASE("property: parse, serialize, parse is the identity") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 100.0);
  for (int trial = 0; trial < 30; ++trial) {
    const kkm::Index n = std::uniform_int_distribution<kkm::Index>(1, 20)(rng);
    const kkm::Index d = std::uniform_int_distribution<kkm::Index>(1, 8)(rng);
    kkm::Dataset data;
    data.points.resize(n, d);
    std::vector<int> labels;
    for (kkm::Index i = 0; i < n; ++i) {
      labels.push_back(std::uniform_int_distribution<int>(0, 9)(rng));
      for (kkm::Index j = 0; j < d; ++j) data.points(i, j) = rng() % 3 == 0 ? 0.0 : g(rng);
    }
    data.points(0, d - 1) = 1.0;  // keep the width observable
    data.labels = labels;

    const auto once = kkm::parse_libsvm(serialize(data));
    CHECK(once.points == data.points);
    CHECK(*once.labels == labels);
    const auto twice = kkm::parse_libsvm(serialize(once));
    CHECK(twice.points == once.points);
    CHECK(*twice.labels == *once.labels);
    CHECK(serialize(twice) == serialize(once));
  }
}

TEST_CASE("unlabelled data is written with label 0") {
  kkm::Dataset data;
  data.points = Eigen::MatrixXd::Constant(2, 1, 0.25);
  CHECK(serialize(data) == "0 1:0.25\n0 1:0.25\n");
}

TEST_CASE("factor dump round-trip") {
  const auto data = test::random_data(15, 2, 3);
  const auto f = kkm::icf_factorize(data, kkm::KernelSpec::gaussian(1.0), kkm::IcfOptions{5, 1e-9});
  std::stringstream ss;
  kkm::write_factor(ss, f);
  const auto dump = kkm::read_factor(ss);
  CHECK(dump.n == 15);
  CHECK(dump.s == 5);
  CHECK(dump.pivots == f.pivots());
  CHECK(dump.P == Eigen::MatrixXd(f.factor()));
  CHECK(dump.trace_history == f.trace_history());

  std::istringstream bad("ICF 3 1\n0\n1\n2\n");
  CHECK_THROWS_AS(kkm::read_factor(bad), kkm::ParseError);
  std::istringstream wrong("ICX 1 0\n\n\n1\n");
  CHECK_THROWS_AS(kkm::read_factor(wrong), kkm::ParseError);
}

TEST_CASE("atomic writes leave only the target file") {
  const fs::path dir = fs::temp_directory_path() / "kkm_io_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path target = dir / "out.txt";
  kkm::write_file_atomically(target, [](std::ostream& os) { os << "first\n"; });
  kkm::write_file_atomically(target, [](std::ostream& os) { os << "second\n"; });
  std::ifstream in(target);
  std::string line;
  std::getline(in, line);
  CHECK(line == "second");
  CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}) == 1);

  CHECK_THROWS(kkm::write_file_atomically(dir / "missing" / "x.txt", [](std::ostream& os) { os << 1; }));
  // A throwing writer must not clobber the existing file.
  CHECK_THROWS(kkm::write_file_atomically(target, [](std::ostream&) { throw std::runtime_error("boom"); }));
  std::ifstream again(target);
  std::getline(again, line);
  CHECK(line == "second");
  fs::remove_all(dir);
}

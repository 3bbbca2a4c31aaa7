#pragma once

#include <kkm/dataset.hpp>
#include <kkm/icf.hpp>

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kkm {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Parses LIBSVM text (`<label> <idx>:<val> ...`, 1-based strictly
/// increasing indices) into a dense dataset. The width is the largest index
/// seen unless `dim` is given. Blank lines are skipped; `\r\n` is accepted.
Dataset parse_libsvm(std::istream& in, std::optional<Index> dim = std::nullopt, std::string name = {});
Dataset parse_libsvm(std::string_view text, std::optional<Index> dim = std::nullopt, std::string name = {});
Dataset read_libsvm(const std::filesystem::path& path, std::optional<Index> dim = std::nullopt);

/// Writes every entry of every row (zeros included) with round-trip
/// precision. Unlabelled datasets are written with label 0.
void write_libsvm(std::ostream& out, const Dataset& data);

/// Shortest decimal text that reads back to exactly `value`.
std::string format_double(double value);

/// Text dump of a factor:
///   ICF <n> <s>
///   <s pivot indices>
///   <n rows of s values>
///   <s + 1 trace history values>
struct FactorDump {
  Index n = 0;
  Index s = 0;
  std::vector<Index> pivots;
  Eigen::MatrixXd P;
  std::vector<double> trace_history;
};

void write_factor(std::ostream& out, const IcfFactor<double>& factor);
FactorDump read_factor(std::istream& in);

/// Writes through a sibling temporary file renamed into place, so readers
/// never observe a partial file.
void write_file_atomically(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer);

}  // namespace kkm

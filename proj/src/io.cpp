#include <kkm/io.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <system_error>

namespace kkm {

namespace {

struct Row {
  int label;
  std::vector<std::pair<Index, double>> entries;
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; }

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

double parse_real(std::string_view tok, std::size_t line_no, const char* what) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double value = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
    throw ParseError(line_no, std::string("invalid ") + what + " '" + std::string(tok) + "'");
  if (!std::isfinite(value)) throw ParseError(line_no, std::string("non-finite ") + what);
  return value;
}

int parse_label(std::string_view tok, std::size_t line_no) {
  const double value = parse_real(tok, line_no, "label");
  if (value != std::floor(value) || std::abs(value) > 2e9)
    throw ParseError(line_no, "label '" + std::string(tok) + "' is not an integer");
  return static_cast<int>(value);
}

Row parse_row(std::string_view line, std::size_t line_no) {
  const auto tokens = split_tokens(line);
  Row row{parse_label(tokens.front(), line_no), {}};
  Index previous = 0;
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    const auto tok = tokens[t];
    const auto colon = tok.find(':');
    if (colon == std::string_view::npos)
      throw ParseError(line_no, "expected <index>:<value>, got '" + std::string(tok) + "'");
    Index idx = 0;
    const auto idx_text = tok.substr(0, colon);
    const auto [ptr, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), idx);
    if (ec != std::errc() || ptr != idx_text.data() + idx_text.size() || idx_text.empty())
      throw ParseError(line_no, "invalid index '" + std::string(idx_text) + "'");
    if (idx < 1) throw ParseError(line_no, "indices are 1-based, got " + std::to_string(idx));
    if (idx <= previous)
      throw ParseError(line_no, "index " + std::to_string(idx) + " does not increase (previous " +
                                    std::to_string(previous) + ")");
    previous = idx;
    row.entries.emplace_back(idx, parse_real(tok.substr(colon + 1), line_no, "value"));
  }
  return row;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, std::optional<Index> dim, std::string name) {
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  Index width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (split_tokens(line).empty()) continue;
    rows.push_back(parse_row(line, line_no));
    if (!rows.back().entries.empty()) width = std::max(width, rows.back().entries.back().first);
  }
  if (rows.empty()) throw ParseError(line_no, "no data rows in input");
  if (dim) {
    if (width > *dim)
      throw ParseError(line_no, "feature index " + std::to_string(width) + " exceeds requested dimension " +
                                    std::to_string(*dim));
    width = *dim;
  }
  if (width < 1) throw ParseError(line_no, "no features in input");

  Dataset data;
  data.name = std::move(name);
  data.points = Eigen::MatrixXd::Zero(static_cast<Index>(rows.size()), width);
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    labels.push_back(rows[i].label);
    for (const auto& [idx, value] : rows[i].entries) data.points(static_cast<Index>(i), idx - 1) = value;
  }
  data.labels = std::move(labels);
  return data;
}

Dataset parse_libsvm(std::string_view text, std::optional<Index> dim, std::string name) {
  std::istringstream in{std::string(text)};
  return parse_libsvm(in, dim, std::move(name));
}

Dataset read_libsvm(const std::filesystem::path& path, std::optional<Index> dim) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return parse_libsvm(in, dim, path.stem().string());
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  for (Index i = 0; i < data.size(); ++i) {
    out << (data.labels ? (*data.labels)[static_cast<std::size_t>(i)] : 0);
    for (Index j = 0; j < data.dim(); ++j) out << ' ' << (j + 1) << ':' << format_double(data.points(i, j));
    out << '\n';
  }
}

void write_factor(std::ostream& out, const IcfFactor<double>& factor) {
  const Index n = factor.size();
  const Index s = factor.rank();
  out << "ICF " << n << ' ' << s << '\n';
  for (Index j = 0; j < s; ++j) out << (j ? " " : "") << factor.pivots()[static_cast<std::size_t>(j)];
  out << '\n';
  const auto P = factor.factor();
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < s; ++j) out << (j ? " " : "") << format_double(P(i, j));
    out << '\n';
  }
  const auto& history = factor.trace_history();
  for (std::size_t j = 0; j < history.size(); ++j) out << (j ? " " : "") << format_double(history[j]);
  out << '\n';
}

FactorDump read_factor(std::istream& in) {
  FactorDump dump;
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) throw ParseError(line_no + 1, "unexpected end of factor dump");
    ++line_no;
    return split_tokens(line);
  };

  auto header = next_line();
  if (header.size() != 3 || header[0] != "ICF") throw ParseError(line_no, "expected header 'ICF <n> <s>'");
  dump.n = static_cast<Index>(parse_real(header[1], line_no, "n"));
  dump.s = static_cast<Index>(parse_real(header[2], line_no, "s"));
  if (dump.n < 0 || dump.s < 0 || dump.s > dump.n) throw ParseError(line_no, "invalid factor shape");

  auto pivots = next_line();
  if (static_cast<Index>(pivots.size()) != dump.s) throw ParseError(line_no, "expected s pivot indices");
  for (auto tok : pivots) dump.pivots.push_back(static_cast<Index>(parse_real(tok, line_no, "pivot")));

  dump.P.resize(dump.n, dump.s);
  for (Index i = 0; i < dump.n; ++i) {
    auto row = next_line();
    if (static_cast<Index>(row.size()) != dump.s) throw ParseError(line_no, "expected s factor values");
    for (Index j = 0; j < dump.s; ++j) dump.P(i, j) = parse_real(row[static_cast<std::size_t>(j)], line_no, "factor value");
  }

  auto history = next_line();
  if (static_cast<Index>(history.size()) != dump.s + 1) throw ParseError(line_no, "expected s + 1 trace values");
  for (auto tok : history) dump.trace_history.push_back(parse_real(tok, line_no, "trace value"));
  return dump;
}

void write_file_atomically(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer) {
  namespace fs = std::filesystem;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::random_device rd;
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(rd()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    try {
      writer(out);
    } catch (...) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw;
    }
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("failed writing '" + path.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot move output into place at '" + path.string() + "'");
  }
}

}  // namespace kkm

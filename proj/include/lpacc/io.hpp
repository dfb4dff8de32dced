#pragma once

#include "lpacc/core.hpp"
#include "lpacc/regression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace lpacc::io {

/// Input that does not parse. The message starts with "<source>:<line>:".
class ParseError : public DomainError {
 public:
  using DomainError::DomainError;
};

namespace detail {

[[noreturn]] inline void fail(const std::string& source, int line, const std::string& msg) {
  throw ParseError(source + ":" + std::to_string(line) + ": " + msg);
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline double to_double(std::string_view tok, const std::string& source, int line) {
  tok = trim(tok);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
    fail(source, line, "expected a number, got '" + std::string(tok) + "'");
  if (!std::isfinite(v)) fail(source, line, "non-finite value");
  return v;
}

inline long to_long(std::string_view tok, const std::string& source, int line) {
  tok = trim(tok);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
    fail(source, line, "expected an integer, got '" + std::string(tok) + "'");
  return v;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t j = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > j) out.push_back(s.substr(j, i - j));
  }
  return out;
}

inline std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace detail

/// Dense real matrices in Matrix Market array or coordinate format
/// (general or symmetric).
inline Matrix read_matrix_market(std::istream& is, const std::string& source = "<input>") {
  using detail::fail;
  std::string line;
  int lineno = 0;
  if (!std::getline(is, line)) fail(source, 1, "empty file");
  ++lineno;
  const auto banner = detail::split_ws(line);
  if (banner.size() != 5 || detail::lower(std::string(banner[0])) != "%%matrixmarket" ||
      detail::lower(std::string(banner[1])) != "matrix")
    fail(source, lineno, "missing '%%MatrixMarket matrix' banner");
  const std::string format = detail::lower(std::string(banner[2]));
  const std::string field = detail::lower(std::string(banner[3]));
  const std::string symmetry = detail::lower(std::string(banner[4]));
  if (format != "array" && format != "coordinate") fail(source, lineno, "unknown format '" + format + "'");
  if (field != "real" && field != "integer" && field != "double")
    fail(source, lineno, "unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    fail(source, lineno, "unsupported symmetry '" + symmetry + "'");
  const bool sym = symmetry == "symmetric";

  auto next_data_line = [&]() -> std::optional<std::string> {
    while (std::getline(is, line)) {
      ++lineno;
      const auto t = detail::trim(line);
      if (t.empty() || t.front() == '%') continue;
      return std::string(t);
    }
    return std::nullopt;
  };

  const auto size_line = next_data_line();
  if (!size_line) fail(source, lineno + 1, "missing size line");
  const auto sz = detail::split_ws(*size_line);
  const std::size_t want = format == "array" ? 2 : 3;
  if (sz.size() != want) fail(source, lineno, "size line needs " + std::to_string(want) + " integers");
  const long rows = detail::to_long(sz[0], source, lineno);
  const long cols = detail::to_long(sz[1], source, lineno);
  if (rows <= 0 || cols <= 0) fail(source, lineno, "dimensions must be positive");
  if (sym && rows != cols) fail(source, lineno, "symmetric matrix must be square");
  Matrix M = Matrix::Zero(rows, cols);

  if (format == "array") {
    // Column-major; symmetric files list the lower triangle only.
    for (long j = 0; j < cols; ++j) {
      for (long i = sym ? j : 0; i < rows; ++i) {
        const auto d = next_data_line();
        if (!d) fail(source, lineno + 1, "expected " + std::to_string(rows * cols) + " entries, file ended early");
        const auto tok = detail::split_ws(*d);
        if (tok.size() != 1) fail(source, lineno, "array entries take one value per line");
        M(i, j) = detail::to_double(tok[0], source, lineno);
        if (sym) M(j, i) = M(i, j);
      }
    }
  } else {
    const long nnz = detail::to_long(sz[2], source, lineno);
    if (nnz < 0) fail(source, lineno, "entry count must be nonnegative");
    for (long k = 0; k < nnz; ++k) {
      const auto d = next_data_line();
      if (!d) fail(source, lineno + 1, "expected " + std::to_string(nnz) + " entries, file ended early");
      const auto tok = detail::split_ws(*d);
      if (tok.size() != 3) fail(source, lineno, "coordinate entries need 'row col value'");
      const long i = detail::to_long(tok[0], source, lineno);
      const long j = detail::to_long(tok[1], source, lineno);
      if (i < 1 || i > rows || j < 1 || j > cols) fail(source, lineno, "index out of range");
      const double v = detail::to_double(tok[2], source, lineno);
      M(i - 1, j - 1) += v;
      if (sym && i != j) M(j - 1, i - 1) += v;
    }
  }
  if (next_data_line()) fail(source, lineno, "trailing data after the last entry");
  return M;
}

inline void write_matrix_market(std::ostream& os, const Matrix& M) {
  os << "%%MatrixMarket matrix array real general\n" << M.rows() << ' ' << M.cols() << '\n';
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Index j = 0; j < M.cols(); ++j)
    for (Index i = 0; i < M.rows(); ++i) os << M(i, j) << '\n';
}

inline Matrix read_matrix_market_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ":0: cannot open file");
  return read_matrix_market(in, path.string());
}

/// Headered CSV: a line "n,d,s", a line with their values, then n rows
/// "a_1,...,a_d,b".
inline RegressionInstance read_csv_instance(std::istream& is, double epsilon, const std::string& source = "<input>") {
  using detail::fail;
  std::string line;
  int lineno = 0;
  auto next = [&]() -> std::optional<std::string> {
    while (std::getline(is, line)) {
      ++lineno;
      if (!detail::trim(line).empty()) return std::string(detail::trim(line));
    }
    return std::nullopt;
  };
  const auto header = next();
  if (!header) fail(source, 1, "empty file");
  const auto h = detail::split_commas(*header);
  if (h.size() != 3 || detail::trim(h[0]) != "n" || detail::trim(h[1]) != "d" || detail::trim(h[2]) != "s")
    fail(source, lineno, "header must be 'n,d,s'");
  const auto vals = next();
  if (!vals) fail(source, lineno + 1, "missing 'n,d,s' values");
  const auto v = detail::split_commas(*vals);
  if (v.size() != 3) fail(source, lineno, "expected three values for n,d,s");
  const long n = detail::to_long(v[0], source, lineno);
  const long d = detail::to_long(v[1], source, lineno);
  const double s = detail::to_double(v[2], source, lineno);
  if (n <= 0 || d <= 0) fail(source, lineno, "n and d must be positive");
  Matrix A(n, d);
  Vector b(n);
  for (long i = 0; i < n; ++i) {
    const auto row = next();
    if (!row) fail(source, lineno + 1, "expected " + std::to_string(n) + " data rows, file ended early");
    const auto cells = detail::split_commas(*row);
    if (static_cast<long>(cells.size()) != d + 1)
      fail(source, lineno, "expected " + std::to_string(d + 1) + " columns, got " + std::to_string(cells.size()));
    for (long j = 0; j < d; ++j) A(i, j) = detail::to_double(cells[j], source, lineno);
    b[i] = detail::to_double(cells[d], source, lineno);
  }
  if (next()) fail(source, lineno, "trailing data after the last row");
  try {
    return make_regression(std::move(A), std::move(b), s, epsilon);
  } catch (const DomainError& e) {
    fail(source, lineno, e.what());
  }
}

inline void write_csv_instance(std::ostream& os, const RegressionInstance& inst) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "n,d,s\n" << inst.n() << ',' << inst.d() << ',' << inst.s << '\n';
  for (Index i = 0; i < inst.n(); ++i) {
    for (Index j = 0; j < inst.d(); ++j) os << (*inst.A)(i, j) << ',';
    os << inst.b[i] << '\n';
  }
}

/// The default companion of "A.mtx" is "A.b.mtx".
inline std::filesystem::path companion_path(const std::filesystem::path& matrix) {
  std::filesystem::path p = matrix;
  p.replace_extension(".b.mtx");
  return p;
}

/// Loads a regression instance from a Matrix Market file (with b as a
/// one-column companion) or from a headered CSV file. `s` is ignored for
/// CSV input, which carries its own.
inline RegressionInstance load_instance(const std::filesystem::path& path, double s, double epsilon,
                                        const std::optional<std::filesystem::path>& b_path = std::nullopt) {
  const std::string ext = detail::lower(path.extension().string());
  if (ext == ".csv") {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ":0: cannot open file");
    return read_csv_instance(in, epsilon, path.string());
  }
  if (ext != ".mtx") throw ParseError(path.string() + ":0: unknown instance format (expected .mtx or .csv)");
  Matrix A = read_matrix_market_file(path);
  const std::filesystem::path bp = b_path ? *b_path : companion_path(path);
  const Matrix B = read_matrix_market_file(bp);
  if (B.cols() != 1) throw ParseError(bp.string() + ":0: b must have exactly one column");
  if (B.rows() != A.rows())
    throw ParseError(bp.string() + ":0: b has " + std::to_string(B.rows()) + " rows but A has " +
                     std::to_string(A.rows()));
  try {
    return make_regression(std::move(A), B.col(0), s, epsilon);
  } catch (const ParseError&) {
    throw;
  } catch (const DomainError& e) {
    throw ParseError(path.string() + ":0: " + e.what());
  }
}

}  // namespace lpacc::io

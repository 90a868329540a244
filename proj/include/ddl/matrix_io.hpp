#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include "ddl/errors.hpp"

namespace ddl {

using Matrix = Eigen::MatrixXd;

// Text matrix format: first line "rows cols", then `rows` lines each holding
// `cols` whitespace-separated decimal floats written with 17 significant
// digits. Zero-column matrices are legal (their data rows are empty lines);
// any other blank line, non-finite value, or count mismatch is rejected.

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
      ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r')
      ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline double parse_double(const std::string& tok, long line_no) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw ParseError("matrix value '" + tok + "' is not a decimal float", line_no);
  if (!std::isfinite(v))
    throw ParseError("matrix value '" + tok + "' is not finite", line_no);
  return v;
}

inline long parse_int(const std::string& tok, long line_no, const char* what) {
  long v = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw ParseError(std::string(what) + " '" + tok + "' is not an integer",
                     line_no);
  return v;
}

}  // namespace detail

inline Matrix read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open matrix file: " + path);
  std::string line;
  long line_no = 0;

  if (!std::getline(in, line))
    throw ParseError("matrix file is empty: " + path, 1);
  ++line_no;
  auto header = detail::split_ws(line);
  if (header.size() != 2)
    throw ParseError("matrix header must be 'rows cols'", line_no);
  const long rows = detail::parse_int(header[0], line_no, "row count");
  const long cols = detail::parse_int(header[1], line_no, "column count");
  if (rows < 0 || cols < 0)
    throw ParseError("matrix dimensions must be nonnegative", line_no);

  Matrix A(rows, cols);
  for (long r = 0; r < rows; ++r) {
    if (!std::getline(in, line))
      throw ParseError("matrix ends after " + std::to_string(r) + " of " +
                           std::to_string(rows) + " rows",
                       line_no + 1);
    ++line_no;
    auto toks = detail::split_ws(line);
    if (static_cast<long>(toks.size()) != cols)
      throw ParseError("row has " + std::to_string(toks.size()) +
                           " values, expected " + std::to_string(cols),
                       line_no);
    for (long c = 0; c < cols; ++c)
      A(r, c) = detail::parse_double(toks[c], line_no);
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::split_ws(line).empty())
      throw ParseError("unexpected content after matrix data", line_no);
    throw ParseError("blank line after matrix data", line_no);
  }
  return A;
}

inline void write_matrix(const std::string& path, const Matrix& A) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write matrix file: " + path);
  if (!A.allFinite())
    throw ArgumentError("write_matrix: matrix has non-finite values");
  out << A.rows() << ' ' << A.cols() << '\n';
  char buf[64];
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", A(r, c));
      if (c > 0) out << ' ';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing matrix file: " + path);
}

// Label files hold one 1-based class index per line.
inline std::vector<int> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label file: " + path);
  std::vector<int> labels;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = detail::split_ws(line);
    if (toks.empty())
      throw ParseError("blank line in label file", line_no);
    if (toks.size() != 1)
      throw ParseError("expected one label per line", line_no);
    const long v = detail::parse_int(toks[0], line_no, "label");
    if (v < 1)
      throw ValidationError("label " + std::to_string(v) + " on line " +
                            std::to_string(line_no) + " is not a positive class index");
    labels.push_back(static_cast<int>(v));
  }
  return labels;
}

inline void write_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write label file: " + path);
  for (int v : labels) out << v << '\n';
  if (!out) throw IoError("failed writing label file: " + path);
}

}  // namespace ddl

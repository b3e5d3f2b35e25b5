#include "sparsecov/matrix_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace sparsecov {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::vector<double>> parse_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::string_view rest = line;
    std::size_t col = 0;
    while (true) {
      ++col;
      const auto comma = rest.find(',');
      const std::string_view field = trim(rest.substr(0, comma));
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc{} || ptr != field.data() + field.size())
        throw io_error(path.string() + ": row " + std::to_string(lineno) + " column " +
                       std::to_string(col) + ": not a number");
      if (!std::isfinite(v))
        throw io_error(path.string() + ": row " + std::to_string(lineno) + " column " +
                       std::to_string(col) + ": non-finite value");
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw io_error(path.string() + ": row " + std::to_string(lineno) + " has " +
                     std::to_string(row.size()) + " fields, expected " +
                     std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw io_error(path.string() + ": empty file");
  return rows;
}

}  // namespace

NodeMatrix load_matrix(const std::filesystem::path& path) {
  const auto rows = parse_csv(path);
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return NodeMatrix(std::move(m));
}

Vector load_vector(const std::filesystem::path& path) {
  const auto rows = parse_csv(path);
  if (rows.size() == 1) {
    Vector v(rows.front().size());
    for (std::size_t j = 0; j < rows.front().size(); ++j)
      v[static_cast<Eigen::Index>(j)] = rows.front()[j];
    return v;
  }
  if (rows.front().size() != 1)
    throw io_error(path.string() + ": expected a single row or column of values");
  Vector v(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) v[static_cast<Eigen::Index>(i)] = rows[i][0];
  return v;
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_value(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw io_error("write failed: " + path.string());
}

void save_vector(const std::filesystem::path& path, const Vector& v) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path.string());
  for (Eigen::Index i = 0; i < v.size(); ++i) out << format_value(v[i]) << '\n';
  if (!out) throw io_error("write failed: " + path.string());
}

}  // namespace sparsecov

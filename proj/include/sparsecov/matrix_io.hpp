#pragma once

#include <filesystem>

#include "sparsecov/core_grid.hpp"

namespace sparsecov {

/// Parse a headerless CSV of n x d numeric values. Ragged rows and
/// non-finite entries raise io_error naming the offending row/column.
NodeMatrix load_matrix(const std::filesystem::path& path);

Vector load_vector(const std::filesystem::path& path);

/// CSV with 17 significant digits, enough for exact double round-trips.
void save_matrix(const std::filesystem::path& path, const Matrix& m);
void save_vector(const std::filesystem::path& path, const Vector& v);

/// One value formatted with 17 significant digits ("%.17g").
std::string format_value(double v);

}  // namespace sparsecov

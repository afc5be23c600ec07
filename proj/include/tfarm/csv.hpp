#pragma once
// Plain comma-separated files: header row, no quoting, LF line endings.
// Numbers are written with 17 significant digits so they read back exactly.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tfarm/transfer.hpp"

namespace tfarm::io {

/// "%.17g"
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header name; throws InvalidArgument if absent.
  std::size_t column(std::string_view name) const;
};

/// Reads any CSV written by this library. Ragged rows and an empty file are errors.
CsvTable read_table(const std::filesystem::path& path);

/// y from the response column, x from the remaining columns in header order.
/// Errors name the 1-based data row and the header of the offending cell.
Dataset ingest_dataset(const std::filesystem::path& path, std::string_view response = "y",
                       std::size_t role = 0);

/// Header `response,x1,...,xp`.
void write_dataset(const std::filesystem::path& path, const Dataset& data,
                   std::string_view response = "y");

/// Writes the header and rows; every row must match the header width.
void write_table(const std::filesystem::path& path, const CsvTable& table);

}  // namespace tfarm::io

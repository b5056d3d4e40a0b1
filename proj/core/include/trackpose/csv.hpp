#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace trackpose::csv {

/// A numeric table: one named column per row of `values` (columns x rows).
struct Table {
  std::vector<std::string> columns;
  Eigen::MatrixXd values;

  std::size_t rows() const { return static_cast<std::size_t>(values.cols()); }
  /// Index of a column; throws MissingColumn naming `context`.
  std::size_t column(const std::string& name, const std::string& context = {}) const;
  bool has_column(const std::string& name) const;
};

/// Writes a header line then one line per row, 17 significant digits.
void write(const std::filesystem::path& path, const Table& table);

/// Parses a header plus numeric rows. Throws Io on unreadable files and
/// InvalidArgument on malformed cells (with file and line).
Table read(const std::filesystem::path& path);

/// Shortest round-tripping text for a double.
std::string format_number(double value);

}  // namespace trackpose::csv

#include "trackpose/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "trackpose/error.hpp"

namespace trackpose::csv {

std::size_t Table::column(const std::string& name, const std::string& context) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) {
    fail(ErrorCode::MissingColumn, (context.empty() ? std::string() : context + ": ") + "missing column '" + name + "'");
  }
  return static_cast<std::size_t>(it - columns.begin());
}

bool Table::has_column(const std::string& name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write(const std::filesystem::path& path, const Table& table) {
  if (static_cast<std::size_t>(table.values.rows()) != table.columns.size()) {
    fail(ErrorCode::ShapeMismatch, path.string() + ": column count does not match the data");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  std::string line;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) line += ',';
    line += table.columns[c];
  }
  line += '\n';
  out << line;
  for (Eigen::Index r = 0; r < table.values.cols(); ++r) {
    line.clear();
    for (Eigen::Index c = 0; c < table.values.rows(); ++c) {
      if (c) line += ',';
      line += format_number(table.values(c, r));
    }
    line += '\n';
    out << line;
  }
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

}  // namespace

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  Table table;
  std::vector<double> data;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line = trim(std::string_view(text).substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    auto cells = split(line);
    if (header) {
      for (auto c : cells) table.columns.emplace_back(trim(c));
      header = false;
      continue;
    }
    if (cells.size() != table.columns.size()) {
      fail(ErrorCode::InvalidArgument, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                           std::to_string(table.columns.size()) + " cells, found " +
                                           std::to_string(cells.size()));
    }
    for (auto cell : cells) {
      cell = trim(cell);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        fail(ErrorCode::InvalidArgument,
             path.string() + ":" + std::to_string(line_no) + ": not a number: '" + std::string(cell) + "'");
      }
      data.push_back(v);
    }
  }
  if (header) fail(ErrorCode::InvalidArgument, path.string() + ": empty file");
  const auto cols = static_cast<Eigen::Index>(table.columns.size());
  const auto rows = cols == 0 ? 0 : static_cast<Eigen::Index>(data.size()) / cols;
  table.values = Eigen::Map<Eigen::MatrixXd>(data.data(), cols, rows);
  return table;
}

}  // namespace trackpose::csv

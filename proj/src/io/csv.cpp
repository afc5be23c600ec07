#include "tfarm/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tfarm/errors.hpp"

namespace tfarm::io {
namespace {

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    std::string_view cell = line.substr(start, pos == std::string_view::npos ? line.npos : pos - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
      cell = cell.substr(1, cell.size() - 2);
    }
    out.emplace_back(cell);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InvalidArgument("cannot write " + path.string());
  return f;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return j;
  throw InvalidArgument("no column named " + std::string(name));
}

CsvTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  CsvTable table;
  std::string line;
  bool have_header = false;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    ++row;
    if (cells.size() != table.header.size()) {
      throw InvalidArgument(path.string() + ": row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " fields, header has " +
                            std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (!have_header) throw InvalidArgument(path.string() + ": empty file");
  return table;
}

Dataset ingest_dataset(const std::filesystem::path& path, std::string_view response,
                       std::size_t role) {
  if (!std::filesystem::exists(path)) throw InvalidArgument("no such file: " + path.string());
  const CsvTable t = read_table(path);
  std::size_t ycol = t.header.size();
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (t.header[j] != response) continue;
    if (ycol != t.header.size()) {
      throw InvalidArgument(path.string() + ": response column " + std::string(response) +
                            " appears more than once");
    }
    ycol = j;
  }
  if (ycol == t.header.size()) {
    throw InvalidArgument(path.string() + ": no response column " + std::string(response));
  }
  const std::size_t n = t.rows.size();
  const std::size_t p = t.header.size() - 1;
  if (n < 2) throw InvalidArgument(path.string() + ": need at least 2 data rows");
  if (p < 1) throw InvalidArgument(path.string() + ": no covariate columns");

  Dataset d;
  d.role = role;
  d.y.resize(n);
  std::vector<double> xs(n * p);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t col = 0;
    for (std::size_t j = 0; j < t.header.size(); ++j) {
      double v = 0.0;
      if (!parse_double(t.rows[i][j], v)) {
        throw InvalidArgument(path.string() + ": non-numeric value '" + t.rows[i][j] + "' at row " +
                              std::to_string(i + 1) + ", column " + t.header[j]);
      }
      if (j == ycol) {
        d.y[i] = v;
      } else {
        xs[i * p + col++] = v;
      }
    }
  }
  d.x = Matrix::from_row_major(n, p, std::move(xs));
  return d;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data,
                   std::string_view response) {
  if (data.y.size() != data.x.rows()) throw InvalidArgument("write_dataset: shape mismatch");
  std::ofstream f = open_out(path);
  f << response;
  for (std::size_t j = 0; j < data.x.cols(); ++j) f << ",x" << (j + 1);
  f << '\n';
  for (std::size_t i = 0; i < data.x.rows(); ++i) {
    f << format_double(data.y[i]);
    for (double v : data.x.row(i)) f << ',' << format_double(v);
    f << '\n';
  }
  if (!f) throw InvalidArgument("error writing " + path.string());
}

void write_table(const std::filesystem::path& path, const CsvTable& table) {
  std::ostringstream s;
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t j = 0; j < cells.size(); ++j) s << (j ? "," : "") << cells[j];
    s << '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw InvalidArgument("write_table: ragged row");
    emit(row);
  }
  std::ofstream f = open_out(path);
  f << s.str();
  if (!f) throw InvalidArgument("error writing " + path.string());
}

}  // namespace tfarm::io

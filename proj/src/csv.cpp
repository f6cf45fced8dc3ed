#include "cpf/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cpf/errors.hpp"

namespace cpf {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (auto& cell : out) {
    const auto first = cell.find_first_not_of(" \t");
    const auto last = cell.find_last_not_of(" \t");
    cell = first == std::string::npos ? std::string{} : cell.substr(first, last - first + 1);
  }
  return out;
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

CsvTable CsvTable::parse(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      // UTF-8 byte order mark
      if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
      table.header_ = split_line(line);
      have_header = true;
      continue;
    }
    if (line.empty()) continue;
    ++data_row;
    auto cells = split_line(line);
    if (cells.size() != table.header_.size()) {
      throw ParseError(data_row, "expected " + std::to_string(table.header_.size()) +
                                     " fields, found " + std::to_string(cells.size()));
    }
    table.cells_.push_back(std::move(cells));
  }
  if (!have_header) {
    throw DataError("empty CSV input (no header row)");
  }
  return table;
}

CsvTable CsvTable::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool CsvTable::has_column(const std::string& name) const { return contains(header_, name); }

std::size_t CsvTable::column_index(const std::string& name) const {
  auto it = std::find(header_.begin(), header_.end(), name);
  if (it == header_.end()) throw SchemaError(name);
  return static_cast<std::size_t>(it - header_.begin());
}

std::vector<double> CsvTable::numeric_column(const std::string& name) const {
  const std::size_t col = column_index(name);
  std::vector<double> out(cells_.size());
  for (std::size_t r = 0; r < cells_.size(); ++r) {
    const std::string& s = cells_[r][col];
    if (!parse_double(s, out[r])) {
      throw ParseError(r + 1, "column '" + name + "': not a number: '" + s + "'");
    }
    if (!std::isfinite(out[r])) {
      throw ParseError(r + 1, "column '" + name + "': non-finite value '" + s + "'");
    }
  }
  return out;
}

std::vector<std::uint8_t> CsvTable::binary_column(const std::string& name) const {
  const std::size_t col = column_index(name);
  std::vector<std::uint8_t> out(cells_.size());
  for (std::size_t r = 0; r < cells_.size(); ++r) {
    const std::string& s = cells_[r][col];
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || (v != 0 && v != 1)) {
      throw ParseError(r + 1, "column '" + name + "': treatment must be 0 or 1, got '" + s + "'");
    }
    out[r] = static_cast<std::uint8_t>(v);
  }
  return out;
}

std::vector<std::string> resolve_covariates(const std::vector<std::string>& header,
                                            const CsvSchema& schema) {
  if (!schema.covariates.empty()) return schema.covariates;
  std::vector<std::string> names;
  for (const auto& h : header) {
    if (h == schema.outcome || h == schema.treatment || contains(schema.ignore, h)) continue;
    names.push_back(h);
  }
  return names;
}

Dataset dataset_from_table(const CsvTable& table, const CsvSchema& schema) {
  table.column_index(schema.outcome);
  table.column_index(schema.treatment);
  const auto names = resolve_covariates(table.header(), schema);
  if (names.empty()) {
    throw SchemaError("<covariate>");
  }
  std::vector<std::size_t> cols;
  for (const auto& name : names) cols.push_back(table.column_index(name));

  const std::size_t n = table.num_rows();
  const std::size_t p = cols.size();
  std::vector<double> x(n * p);
  for (std::size_t j = 0; j < p; ++j) {
    const auto column = table.numeric_column(names[j]);
    for (std::size_t i = 0; i < n; ++i) x[i * p + j] = column[i];
  }
  Dataset ds(std::move(x), p, table.binary_column(schema.treatment),
             table.numeric_column(schema.outcome));
  validate(ds);
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  return dataset_from_table(CsvTable::read(path), schema);
}

CovariateMatrix load_covariates(const std::filesystem::path& path,
                                const std::vector<std::string>& names,
                                const std::vector<std::string>& exclude) {
  const CsvTable table = CsvTable::read(path);
  std::vector<std::string> use = names;
  if (use.empty()) {
    for (const auto& h : table.header()) {
      if (!contains(exclude, h)) use.push_back(h);
    }
  }
  CovariateMatrix m;
  m.num_rows = table.num_rows();
  m.num_features = use.size();
  m.values.resize(m.num_rows * m.num_features);
  for (std::size_t j = 0; j < use.size(); ++j) {
    const auto column = table.numeric_column(use[j]);
    for (std::size_t i = 0; i < m.num_rows; ++i) m.values[i * m.num_features + j] = column[i];
  }
  return m;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write '" + path.string() + "'");
  }
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (j) out << ',';
      out << cells[j];
    }
    out << '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  if (!out) {
    throw DataError("write failed for '" + path.string() + "'");
  }
}

std::vector<std::string> default_covariate_names(std::size_t p) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& ds,
                       const std::vector<std::string>& covariate_names) {
  auto header = covariate_names.empty() ? default_covariate_names(ds.num_features())
                                        : covariate_names;
  header.push_back("d");
  header.push_back("y");
  std::vector<std::vector<std::string>> rows;
  rows.reserve(ds.num_rows());
  for (std::size_t i = 0; i < ds.num_rows(); ++i) {
    std::vector<std::string> r;
    for (double v : ds.row(i)) r.push_back(format_double(v));
    r.push_back(ds.treated(i) ? "1" : "0");
    r.push_back(format_double(ds.outcome(i)));
    rows.push_back(std::move(r));
  }
  write_csv(path, header, rows);
}

}  // namespace cpf

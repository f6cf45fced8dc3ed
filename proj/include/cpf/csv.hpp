#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cpf/dataset.hpp"

namespace cpf {

/// Column roles for load_csv. When `covariates` is empty, every header column
/// that is not the outcome, the treatment, or listed in `ignore` becomes a
/// covariate, in header order.
struct CsvSchema {
  std::string outcome = "y";
  std::string treatment = "d";
  std::vector<std::string> covariates;
  std::vector<std::string> ignore = {"tau0", "e", "y0", "y1"};
};

/// Raw comma-separated table: one header row, no quoting.
class CsvTable {
 public:
  static CsvTable read(const std::filesystem::path& path);
  static CsvTable parse(const std::string& text);

  const std::vector<std::string>& header() const noexcept { return header_; }
  std::size_t num_rows() const noexcept { return cells_.size(); }
  bool has_column(const std::string& name) const;
  /// Throws SchemaError if absent.
  std::size_t column_index(const std::string& name) const;
  /// Parses a column as finite decimal doubles; ParseError cites the row.
  std::vector<double> numeric_column(const std::string& name) const;
  /// Parses a column as integer 0/1.
  std::vector<std::uint8_t> binary_column(const std::string& name) const;
  const std::string& cell(std::size_t row, std::size_t col) const { return cells_[row][col]; }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> cells_;
};

/// Reads and validates a Dataset. Row order is preserved.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
Dataset dataset_from_table(const CsvTable& table, const CsvSchema& schema = {});

/// Covariate names load_csv would pick for this header.
std::vector<std::string> resolve_covariates(const std::vector<std::string>& header,
                                            const CsvSchema& schema);

/// Row-major covariate matrix read from `names` columns (or, when empty,
/// every column except those in `exclude`).
struct CovariateMatrix {
  std::vector<double> values;
  std::size_t num_rows = 0;
  std::size_t num_features = 0;
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * num_features, num_features};
  }
};
CovariateMatrix load_covariates(const std::filesystem::path& path,
                                const std::vector<std::string>& names,
                                const std::vector<std::string>& exclude);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

/// Writes header + rows; each row is pre-formatted cells.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Writes x0..x{p-1}, d, y (or the provided covariate names).
void write_dataset_csv(const std::filesystem::path& path, const Dataset& ds,
                       const std::vector<std::string>& covariate_names = {});

std::vector<std::string> default_covariate_names(std::size_t p);

}  // namespace cpf

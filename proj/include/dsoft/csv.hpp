#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsoft/dataset.hpp"

namespace dsoft {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numeric table: comma-separated, mandatory header row, '.' decimals.
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return header.size(); }
  /// Column index by name; throws CsvError naming the missing column.
  std::size_t col(const std::string& name) const;
  std::vector<double> column(const std::string& name) const;
};

Csv read_csv(const std::string& path);
Csv parse_csv(const std::string& text);
std::string csv_to_string(const Csv& csv);
void write_csv(const std::string& path, const Csv& csv);  // atomic

/// Shortest round-trip decimal encoding of a double.
std::string format_double(double v);

/// Split a table into features + response: the named column becomes y,
/// every other column a feature (order preserved).
Dataset csv_to_dataset(const Csv& csv, const std::string& response);
Csv dataset_to_csv(const Dataset& d, const std::string& response = "y");

/// Monthly series in the sunspot-service dialect: semicolon-separated
/// `year;month;decimal_date;mean;sd;n_obs;provisional`.  Rows with a
/// negative mean (the missing-value marker) are skipped.
struct MonthlySeries {
  std::vector<int> year;
  std::vector<int> month;
  std::vector<double> dec_date;
  std::vector<double> value;

  std::size_t size() const { return value.size(); }
};

MonthlySeries parse_silso(const std::string& text);
MonthlySeries read_silso(const std::string& path);

/// True when the content looks like the semicolon dialect rather than a
/// comma-separated table.
bool looks_like_silso(const std::string& text);

}  // namespace dsoft

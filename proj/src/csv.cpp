#include "dsoft/csv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "dsoft/fsio.hpp"

namespace dsoft {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& field, std::size_t line_no) {
  const std::string t = trim(field);
  if (t.empty())
    throw CsvError("csv: empty numeric field at line " +
                   std::to_string(line_no));
  double v = 0.0;
  const auto* begin = t.data();
  const auto* end = t.data() + t.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw CsvError("csv: cannot parse number '" + t + "' at line " +
                   std::to_string(line_no));
  return v;
}

std::vector<std::string> non_empty_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::size_t Csv::col(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return j;
  throw CsvError("csv: missing column '" + name + "'");
}

std::vector<double> Csv::column(const std::string& name) const {
  const std::size_t j = col(name);
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = rows[i][j];
  return out;
}

Csv parse_csv(const std::string& text) {
  const auto lines = non_empty_lines(text);
  if (lines.empty()) throw CsvError("csv: empty input");
  Csv csv;
  for (auto& h : split(lines[0], ',')) csv.header.push_back(trim(h));
  if (csv.header.empty() || csv.header[0].empty())
    throw CsvError("csv: missing header row");
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto fields = split(lines[li], ',');
    if (fields.size() != csv.header.size())
      throw CsvError("csv: line " + std::to_string(li + 1) + " has " +
                     std::to_string(fields.size()) + " fields, expected " +
                     std::to_string(csv.header.size()));
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j)
      row[j] = parse_number(fields[j], li + 1);
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

Csv read_csv(const std::string& path) {
  try {
    return parse_csv(read_text_file(path));
  } catch (const CsvError& e) {
    throw CsvError(std::string(e.what()) + " [" + path + "]");
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_to_string(const Csv& csv) {
  std::string out;
  for (std::size_t j = 0; j < csv.header.size(); ++j) {
    if (j) out += ',';
    out += csv.header[j];
  }
  out += '\n';
  for (const auto& row : csv.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += format_double(row[j]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::string& path, const Csv& csv) {
  write_text_atomic(path, csv_to_string(csv));
}

Dataset csv_to_dataset(const Csv& csv, const std::string& response) {
  const std::size_t yj = csv.col(response);
  Dataset d;
  for (std::size_t j = 0; j < csv.header.size(); ++j)
    if (j != yj) d.feature_names.push_back(csv.header[j]);
  d.X = Matrix(csv.n_rows(), csv.n_cols() - 1);
  d.y.resize(csv.n_rows());
  for (std::size_t i = 0; i < csv.n_rows(); ++i) {
    std::size_t f = 0;
    for (std::size_t j = 0; j < csv.n_cols(); ++j) {
      if (j == yj)
        d.y[i] = csv.rows[i][j];
      else
        d.X(i, f++) = csv.rows[i][j];
    }
  }
  return d;
}

Csv dataset_to_csv(const Dataset& d, const std::string& response) {
  Csv csv;
  csv.header = d.feature_names;
  csv.header.push_back(response);
  const bool truths = !d.eta_mu_true.empty();
  if (truths) {
    csv.header.push_back("eta_mu_true");
    csv.header.push_back("eta_sigma_true");
  }
  for (std::size_t i = 0; i < d.n(); ++i) {
    std::vector<double> row;
    row.reserve(csv.header.size());
    for (std::size_t j = 0; j < d.q(); ++j) row.push_back(d.X(i, j));
    row.push_back(d.y[i]);
    if (truths) {
      row.push_back(d.eta_mu_true[i]);
      row.push_back(d.eta_sigma_true[i]);
    }
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

bool looks_like_silso(const std::string& text) {
  // first non-comment, non-blank line decides the dialect
  for (const std::string& line : non_empty_lines(text)) {
    if (line[0] == '#') continue;
    return line.find(';') != std::string::npos;
  }
  return false;
}

MonthlySeries parse_silso(const std::string& text) {
  MonthlySeries s;
  const auto lines = non_empty_lines(text);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::string& line = lines[li];
    if (line[0] == '#') continue;
    const auto fields = split(line, ';');
    if (fields.size() < 4)
      throw CsvError("silso: line " + std::to_string(li + 1) +
                     " has fewer than 4 fields");
    const int year = static_cast<int>(parse_number(fields[0], li + 1));
    const int month = static_cast<int>(parse_number(fields[1], li + 1));
    const double dec = parse_number(fields[2], li + 1);
    const double mean = parse_number(fields[3], li + 1);
    if (month < 1 || month > 12)
      throw CsvError("silso: bad month at line " + std::to_string(li + 1));
    if (mean < 0.0) continue;  // missing-value marker
    s.year.push_back(year);
    s.month.push_back(month);
    s.dec_date.push_back(dec);
    s.value.push_back(mean);
  }
  if (s.value.empty()) throw CsvError("silso: no usable rows");
  return s;
}

MonthlySeries read_silso(const std::string& path) {
  try {
    return parse_silso(read_text_file(path));
  } catch (const CsvError& e) {
    throw CsvError(std::string(e.what()) + " [" + path + "]");
  }
}

}  // namespace dsoft

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace gplfm {

// Parse or serialization failure; the message carries the file path and,
// where applicable, the 1-based line number of the offending record.
struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rectangular numeric table with one named header per column. Headers carry
// units in brackets by convention, e.g. "time [s]".
struct CsvTable {
  std::vector<std::string> headers;
  std::vector<Eigen::VectorXd> columns;

  long rows() const { return columns.empty() ? 0 : columns.front().size(); }
  long cols() const { return static_cast<long>(columns.size()); }

  bool has_column(const std::string& header) const;
  // Column lookup by exact header; throws CsvError naming the header when
  // absent.
  const Eigen::VectorXd& column(const std::string& header) const;

  void add_column(std::string header, Eigen::VectorXd values);
};

// Serializes the table with RFC-4180 quoting: fields containing commas,
// quotes, or line breaks are quoted and embedded quotes doubled. Lines end
// with '\n'. Numbers are written in the shortest form that parses back to
// the identical double, so write/read round trips are bitwise exact.
std::string to_csv_string(const CsvTable& table);
void write_csv(const std::string& path, const CsvTable& table);

// Parses an RFC-4180 file (both LF and CRLF line endings accepted) whose
// first record is the header row and whose remaining cells are all numeric.
// Ragged rows and non-numeric cells raise CsvError with the line number.
CsvTable parse_csv_string(const std::string& text, const std::string& origin = "<string>");
CsvTable read_csv(const std::string& path);

}  // namespace gplfm

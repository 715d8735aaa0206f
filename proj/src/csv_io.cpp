#include "gplfm/csv_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace gplfm {

namespace {

bool needs_quoting(const std::string& field) {
  return field.find_first_of(",\"\n\r") != std::string::npos;
}

void append_field(std::string& out, const std::string& field) {
  if (!needs_quoting(field)) {
    out += field;
    return;
  }
  out += '"';
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
}

std::string format_double(double value) {
  char buffer[40];
  const auto res = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, res.ptr);
}

// Splits the full text into records of raw fields, honoring quoted fields
// that may contain separators and line breaks. line_of[i] is the 1-based
// line on which record i starts.
std::vector<std::vector<std::string>> split_records(const std::string& text,
                                                    const std::string& origin,
                                                    std::vector<long>& line_of) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  long line = 1;
  long record_line = 1;

  auto end_field = [&] {
    record.push_back(field);
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    // A lone empty field on its own line is a blank line, not a record.
    if (record.size() != 1 || !record.front().empty()) {
      records.push_back(record);
      line_of.push_back(record_line);
    }
    record.clear();
  };

  for (size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field += ch;
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          throw CsvError(origin + ":" + std::to_string(line) +
                         ": quote inside an unquoted field");
        }
        in_quotes = true;
        field_was_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;  // CRLF: the '\n' that follows ends the record
      case '\n':
        end_record();
        ++line;
        record_line = line;
        break;
      default:
        field += ch;
    }
  }
  if (in_quotes) {
    throw CsvError(origin + ":" + std::to_string(record_line) + ": unterminated quoted field");
  }
  if (!field.empty() || field_was_quoted || !record.empty()) end_record();
  return records;
}

double parse_cell(const std::string& cell, const std::string& origin, long line, long col) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw CsvError(origin + ":" + std::to_string(line) + ": column " + std::to_string(col + 1) +
                   ": cell '" + cell + "' is not numeric");
  }
  return value;
}

}  // namespace

bool CsvTable::has_column(const std::string& header) const {
  for (const auto& h : headers) {
    if (h == header) return true;
  }
  return false;
}

const Eigen::VectorXd& CsvTable::column(const std::string& header) const {
  for (size_t i = 0; i < headers.size(); ++i) {
    if (headers[i] == header) return columns[i];
  }
  throw CsvError("missing CSV column '" + header + "'");
}

void CsvTable::add_column(std::string header, Eigen::VectorXd values) {
  if (!columns.empty() && values.size() != rows()) {
    throw CsvError("column '" + header + "' has " + std::to_string(values.size()) +
                   " rows, table has " + std::to_string(rows()));
  }
  headers.push_back(std::move(header));
  columns.push_back(std::move(values));
}

std::string to_csv_string(const CsvTable& table) {
  if (table.headers.size() != table.columns.size()) {
    throw CsvError("header count differs from column count");
  }
  std::string out;
  for (size_t j = 0; j < table.headers.size(); ++j) {
    if (j > 0) out += ',';
    append_field(out, table.headers[j]);
  }
  out += '\n';
  const long n = table.rows();
  for (long i = 0; i < n; ++i) {
    for (size_t j = 0; j < table.columns.size(); ++j) {
      if (j > 0) out += ',';
      out += format_double(table.columns[j](i));
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw CsvError("cannot open '" + path + "' for writing");
  const std::string text = to_csv_string(table);
  file.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!file) throw CsvError("write to '" + path + "' failed");
}

CsvTable parse_csv_string(const std::string& text, const std::string& origin) {
  std::vector<long> line_of;
  const auto records = split_records(text, origin, line_of);
  if (records.empty()) throw CsvError(origin + ": no header row");

  CsvTable table;
  table.headers = records.front();
  const size_t width = table.headers.size();
  const long n = static_cast<long>(records.size()) - 1;
  table.columns.assign(width, Eigen::VectorXd(n));

  for (long i = 0; i < n; ++i) {
    const auto& record = records[static_cast<size_t>(i) + 1];
    const long line = line_of[static_cast<size_t>(i) + 1];
    if (record.size() != width) {
      throw CsvError(origin + ":" + std::to_string(line) + ": expected " +
                     std::to_string(width) + " fields, found " + std::to_string(record.size()));
    }
    for (size_t j = 0; j < width; ++j) {
      table.columns[j](i) = parse_cell(record[j], origin, line, static_cast<long>(j));
    }
  }
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw CsvError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_csv_string(buffer.str(), path);
}

}  // namespace gplfm

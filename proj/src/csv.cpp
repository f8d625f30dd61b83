#include "elgof/csv.hpp"

#include "elgof/error.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace elgof {
namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  s = s.substr(first, last - first + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, delim)) fields.push_back(trim(field));
  if (!line.empty() && line.back() == delim) fields.emplace_back();
  return fields;
}

}  // namespace

Index Table::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return static_cast<Index>(j);
  }
  throw Error(ErrorCode::bad_input, "no column named '" + name + "'");
}

Table parse_delimited(const std::string& text, const std::string& source) {
  std::istringstream is(text);
  std::string line;
  Table table;
  while (std::getline(is, line)) {
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw Error(ErrorCode::bad_input, source + ": no header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.delimiter = line.find('\t') != std::string::npos ? '\t' : ',';
  table.header = split(line, table.delimiter);

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split(line, table.delimiter);
    if (fields.size() != table.header.size()) {
      throw Error(ErrorCode::bad_input, source + ":" + std::to_string(line_no) + ": expected " +
                                            std::to_string(table.header.size()) +
                                            " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> row;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const std::string& f = fields[j];
      if (f.empty() || f == "NA" || f == "NaN" || f == "nan") {
        throw Error(ErrorCode::bad_input, source + ":" + std::to_string(line_no) +
                                              ": missing value in column '" +
                                              table.header[j] + "'");
      }
      double v = 0.0;
      const char* begin = f.data();
      const char* end = f.data() + f.size();
      if (*begin == '+') ++begin;
      const auto [ptr, ec] = std::from_chars(begin, end, v);
      if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw Error(ErrorCode::bad_input, source + ":" + std::to_string(line_no) +
                                              ": non-numeric value '" + f + "' in column '" +
                                              table.header[j] + "'");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }

  table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      table.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return table;
}

Table read_delimited(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in || std::filesystem::is_directory(path)) {
    throw Error(ErrorCode::file_not_found, "cannot open input file '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_delimited(buffer.str(), path);
}

}  // namespace elgof

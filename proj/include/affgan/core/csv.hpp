#pragma once

#include <string>
#include <vector>

namespace affgan::csv {

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;
};

/// Parses UTF-8 CSV with a header row. Supports double-quoted fields with
/// "" escapes; both \n and \r\n line endings.
Table read_file(const std::string& path);
Table parse(const std::string& text);

/// Serializes with minimal quoting (fields containing , " or newline).
std::string to_string(const Table& t);
void write_file(const std::string& path, const Table& t);

std::string escape(const std::string& field);

}  // namespace affgan::csv

#include "affgan/core/csv.hpp"

#include <fstream>
#include <sstream>

#include "affgan/core/error.hpp"

namespace affgan::csv {

namespace {

std::vector<Row> parse_rows(const std::string& text) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool quoted = false;
  bool any = false;
  size_t i = 0;
  const size_t n = text.size();
  auto end_field = [&] {
    row.push_back(field);
    field.clear();
    any = true;
  };
  auto end_row = [&] {
    if (any || !field.empty()) {
      end_field();
      rows.push_back(row);
    }
    row.clear();
    any = false;
  };
  while (i < n) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c != '\r') {
      field += c;
    }
    ++i;
  }
  end_row();
  return rows;
}

}  // namespace

Table parse(const std::string& text) {
  auto rows = parse_rows(text);
  if (rows.empty()) throw ValidationError("csv: empty input, header row required");
  Table t;
  t.header = rows.front();
  t.rows.assign(rows.begin() + 1, rows.end());
  for (size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != t.header.size()) {
      throw ValidationError(msg("csv: row ", r + 2, " has ", t.rows[r].size(),
                                " fields, header has ", t.header.size()));
    }
  }
  return t;
}

Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(msg("csv: cannot open ", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const ValidationError& e) {
    throw ValidationError(msg(path, ": ", e.what()));
  }
}

std::string escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::string to_string(const Table& t) {
  std::ostringstream os;
  auto emit = [&os](const Row& row) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      os << escape(row[i]);
    }
    os << '\n';
  };
  emit(t.header);
  for (const auto& row : t.rows) emit(row);
  return os.str();
}

void write_file(const std::string& path, const Table& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(msg("csv: cannot write ", path));
  out << to_string(t);
}

}  // namespace affgan::csv

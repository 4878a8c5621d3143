#include "affgan/core/iniconfig.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "affgan/core/error.hpp"

namespace affgan {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

IniConfig IniConfig::parse(const std::string& text) {
  IniConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip comments (# or ;) outside of values that need them: keep simple,
    // a comment starts at the first unescaped # or ; preceded by whitespace
    // or at line start.
    size_t cut = std::string::npos;
    for (size_t i = 0; i < line.size(); ++i) {
      if ((line[i] == '#' || line[i] == ';') &&
          (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
        cut = i;
        break;
      }
    }
    if (cut != std::string::npos) line.resize(cut);
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ValidationError(msg("config line ", lineno, ": unterminated section header"));
      section = trim(t.substr(1, t.size() - 2));
      if (!cfg.data_.count(section)) {
        cfg.order_.push_back(section);
        cfg.data_[section];
      }
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(msg("config line ", lineno, ": expected key = value, got '", t, "'"));
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ValidationError(msg("config line ", lineno, ": empty key"));
    cfg.set(section, key, value);
  }
  return cfg;
}

IniConfig IniConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(msg("config: cannot open ", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const ValidationError& e) {
    throw ValidationError(msg(path, ": ", e.what()));
  }
}

void IniConfig::set(const std::string& section, const std::string& key, const std::string& value) {
  if (!data_.count(section)) order_.push_back(section);
  auto& entries = data_[section];
  for (auto& kv : entries) {
    if (kv.first == key) {
      kv.second = value;
      return;
    }
  }
  entries.emplace_back(key, value);
}

bool IniConfig::has(const std::string& section, const std::string& key) const {
  return find(section, key).has_value();
}

std::optional<std::string> IniConfig::find(const std::string& section, const std::string& key) const {
  auto it = data_.find(section);
  if (it == data_.end()) return std::nullopt;
  for (const auto& kv : it->second) {
    if (kv.first == key) return kv.second;
  }
  return std::nullopt;
}

std::string IniConfig::get_str(const std::string& section, const std::string& key) const {
  auto v = find(section, key);
  if (!v) throw ValidationError(msg("config: missing key [", section, "] ", key));
  return *v;
}

std::string IniConfig::get_str(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  return find(section, key).value_or(fallback);
}

long IniConfig::get_int(const std::string& section, const std::string& key) const {
  const std::string v = get_str(section, key);
  char* end = nullptr;
  long out = std::strtol(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') {
    throw ValidationError(msg("config: [", section, "] ", key, " = '", v, "' is not an integer"));
  }
  return out;
}

long IniConfig::get_int(const std::string& section, const std::string& key, long fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

double IniConfig::get_real(const std::string& section, const std::string& key) const {
  const std::string v = get_str(section, key);
  char* end = nullptr;
  double out = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') {
    throw ValidationError(msg("config: [", section, "] ", key, " = '", v, "' is not a number"));
  }
  return out;
}

double IniConfig::get_real(const std::string& section, const std::string& key, double fallback) const {
  return has(section, key) ? get_real(section, key) : fallback;
}

bool IniConfig::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  std::string v = get_str(section, key);
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError(msg("config: [", section, "] ", key, " = '", v, "' is not a boolean"));
}

std::vector<std::string> IniConfig::get_list(const std::string& section, const std::string& key) const {
  std::vector<std::string> out;
  std::istringstream in(get_str(section, key));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> IniConfig::sections() const { return order_; }

const std::vector<std::pair<std::string, std::string>>& IniConfig::entries(
    const std::string& section) const {
  static const std::vector<std::pair<std::string, std::string>> kEmpty;
  auto it = data_.find(section);
  return it == data_.end() ? kEmpty : it->second;
}

std::string IniConfig::to_string() const {
  std::ostringstream os;
  for (const auto& section : order_) {
    if (!section.empty()) os << '[' << section << "]\n";
    for (const auto& kv : data_.at(section)) os << kv.first << " = " << kv.second << '\n';
    os << '\n';
  }
  return os.str();
}

void IniConfig::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(msg("config: cannot write ", path));
  out << to_string();
}

}  // namespace affgan

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace affgan {

/// Sectioned key-value config. Format:
///
///   format_version = 1
///   [section]
///   key = value        # comment
///
/// Keys before the first section header live in section "".
/// Values keep internal whitespace; surrounding whitespace is trimmed.
class IniConfig {
 public:
  IniConfig() = default;

  static IniConfig parse(const std::string& text);
  static IniConfig load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::optional<std::string> find(const std::string& section, const std::string& key) const;

  std::string get_str(const std::string& section, const std::string& key) const;
  std::string get_str(const std::string& section, const std::string& key,
                      const std::string& fallback) const;
  long get_int(const std::string& section, const std::string& key) const;
  long get_int(const std::string& section, const std::string& key, long fallback) const;
  double get_real(const std::string& section, const std::string& key) const;
  double get_real(const std::string& section, const std::string& key, double fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  /// Comma-separated list value.
  std::vector<std::string> get_list(const std::string& section, const std::string& key) const;

  void set(const std::string& section, const std::string& key, const std::string& value);

  std::vector<std::string> sections() const;
  const std::vector<std::pair<std::string, std::string>>& entries(const std::string& section) const;

  /// Round-trip serialization of the resolved state (stable order).
  std::string to_string() const;
  void save(const std::string& path) const;

 private:
  // Section -> ordered (key, value) list, first-write order preserved.
  std::vector<std::string> order_;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> data_;
};

}  // namespace affgan

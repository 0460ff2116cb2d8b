#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dtgan {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what_happened) : std::runtime_error(what_happened) {}
};

/// One value in a config file: a bool, a number, a quoted string, or a
/// bracketed list of numbers.
struct ConfigValue {
  enum class Kind { Bool, Number, String, NumberList };
  Kind kind = Kind::Number;
  bool bool_value = false;
  double number_value = 0.0;
  std::string string_value;
  std::vector<double> list_value;

  static ConfigValue of(bool b);
  static ConfigValue of(double v);
  static ConfigValue of(std::string s);
  static ConfigValue of(std::vector<double> v);

  friend bool operator==(const ConfigValue&, const ConfigValue&) = default;
};

/// A parsed key-value file with [section] headers. Keys are unique within a
/// section; sections and keys serialize in sorted order so documents have a
/// canonical text form.
struct ConfigDoc {
  std::map<std::string, std::map<std::string, ConfigValue>> sections;

  bool has(const std::string& section, const std::string& key) const;
  const ConfigValue& at(const std::string& section, const std::string& key) const;

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  double get_number(const std::string& section, const std::string& key, double fallback) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  std::vector<double> get_list(const std::string& section, const std::string& key,
                               const std::vector<double>& fallback) const;

  void set(const std::string& section, const std::string& key, ConfigValue value);

  friend bool operator==(const ConfigDoc&, const ConfigDoc&) = default;
};

/// Parses the TOML-style subset: [section] headers, key = value lines,
/// comments starting with '#', blank lines ignored. Throws ConfigError with
/// a line number on malformed input.
ConfigDoc parse_config(const std::string& text);

/// Canonical text form; parse_config(serialize_config(doc)) == doc.
std::string serialize_config(const ConfigDoc& doc);

}  // namespace dtgan

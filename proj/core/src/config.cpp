#include "dtgan/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace dtgan {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

double parse_number(const std::string& text, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) fail(line, "trailing characters after number '" + text + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(line, "expected a number, got '" + text + "'");
  }
}

// Shortest decimal text that round-trips the double exactly.
std::string format_number(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::stod(buf) == v) break;
  }
  return buf;
}

ConfigValue parse_value(const std::string& raw, int line) {
  if (raw.empty()) fail(line, "missing value");
  if (raw == "true") return ConfigValue::of(true);
  if (raw == "false") return ConfigValue::of(false);
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') fail(line, "unterminated string");
    return ConfigValue::of(raw.substr(1, raw.size() - 2));
  }
  if (raw.front() == '[') {
    if (raw.back() != ']') fail(line, "unterminated list");
    std::vector<double> items;
    std::string body = raw.substr(1, raw.size() - 2);
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string t = trim(item);
      if (t.empty()) fail(line, "empty list element");
      items.push_back(parse_number(t, line));
    }
    return ConfigValue::of(std::move(items));
  }
  return ConfigValue::of(parse_number(raw, line));
}

}  // namespace

ConfigValue ConfigValue::of(bool b) {
  ConfigValue v;
  v.kind = Kind::Bool;
  v.bool_value = b;
  return v;
}

ConfigValue ConfigValue::of(double d) {
  ConfigValue v;
  v.kind = Kind::Number;
  v.number_value = d;
  return v;
}

ConfigValue ConfigValue::of(std::string s) {
  ConfigValue v;
  v.kind = Kind::String;
  v.string_value = std::move(s);
  return v;
}

ConfigValue ConfigValue::of(std::vector<double> list) {
  ConfigValue v;
  v.kind = Kind::NumberList;
  v.list_value = std::move(list);
  return v;
}

bool ConfigDoc::has(const std::string& section, const std::string& key) const {
  const auto s = sections.find(section);
  return s != sections.end() && s->second.count(key) > 0;
}

const ConfigValue& ConfigDoc::at(const std::string& section, const std::string& key) const {
  const auto s = sections.find(section);
  if (s == sections.end()) throw ConfigError("missing config section [" + section + "]");
  const auto k = s->second.find(key);
  if (k == s->second.end()) {
    throw ConfigError("missing config key '" + key + "' in section [" + section + "]");
  }
  return k->second;
}

bool ConfigDoc::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const ConfigValue& v = at(section, key);
  if (v.kind != ConfigValue::Kind::Bool) {
    throw ConfigError("config key '" + key + "' is not a bool");
  }
  return v.bool_value;
}

double ConfigDoc::get_number(const std::string& section, const std::string& key,
                             double fallback) const {
  if (!has(section, key)) return fallback;
  const ConfigValue& v = at(section, key);
  if (v.kind != ConfigValue::Kind::Number) {
    throw ConfigError("config key '" + key + "' is not a number");
  }
  return v.number_value;
}

std::string ConfigDoc::get_string(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
  if (!has(section, key)) return fallback;
  const ConfigValue& v = at(section, key);
  if (v.kind != ConfigValue::Kind::String) {
    throw ConfigError("config key '" + key + "' is not a string");
  }
  return v.string_value;
}

std::vector<double> ConfigDoc::get_list(const std::string& section, const std::string& key,
                                        const std::vector<double>& fallback) const {
  if (!has(section, key)) return fallback;
  const ConfigValue& v = at(section, key);
  if (v.kind != ConfigValue::Kind::NumberList) {
    throw ConfigError("config key '" + key + "' is not a list");
  }
  return v.list_value;
}

void ConfigDoc::set(const std::string& section, const std::string& key, ConfigValue value) {
  sections[section][key] = std::move(value);
}

ConfigDoc parse_config(const std::string& text) {
  ConfigDoc doc;
  std::stringstream ss(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::size_t comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail(line_no, "empty section name");
      doc.sections[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    if (section.empty()) fail(line_no, "key outside of any [section]");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail(line_no, "empty key");
    if (doc.sections[section].count(key)) fail(line_no, "duplicate key '" + key + "'");
    doc.sections[section][key] = parse_value(trim(line.substr(eq + 1)), line_no);
  }
  return doc;
}

std::string serialize_config(const ConfigDoc& doc) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [section, entries] : doc.sections) {
    if (!first) out << '\n';
    first = false;
    out << '[' << section << "]\n";
    for (const auto& [key, value] : entries) {
      out << key << " = ";
      switch (value.kind) {
        case ConfigValue::Kind::Bool:
          out << (value.bool_value ? "true" : "false");
          break;
        case ConfigValue::Kind::Number:
          out << format_number(value.number_value);
          break;
        case ConfigValue::Kind::String:
          out << '"' << value.string_value << '"';
          break;
        case ConfigValue::Kind::NumberList: {
          out << '[';
          for (std::size_t i = 0; i < value.list_value.size(); ++i) {
            if (i) out << ", ";
            out << format_number(value.list_value[i]);
          }
          out << ']';
          break;
        }
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace dtgan

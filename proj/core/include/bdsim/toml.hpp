#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bdsim {

// Minimal TOML subset sufficient for experiment configs: [sections], bare or
// quoted keys, strings, integers, floats (inf/nan included), booleans, and
// flat arrays (multi-line allowed). No dotted keys, no inline tables, no
// dates. Unknown syntax raises ConfigError with the line number.
class TomlValue {
 public:
  using Array = std::vector<TomlValue>;
  using Storage = std::variant<std::string, int64_t, double, bool, Array>;

  TomlValue() : v_(false) {}
  explicit TomlValue(Storage v) : v_(std::move(v)) {}

  bool is_string() const { return std::holds_alternative<std::string>(v_); }
  bool is_int() const { return std::holds_alternative<int64_t>(v_); }
  bool is_float() const { return std::holds_alternative<double>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_array() const { return std::holds_alternative<Array>(v_); }

  const std::string& as_string() const;
  int64_t as_int() const;
  double as_float() const;  // accepts integer values too
  bool as_bool() const;
  const Array& as_array() const;
  std::vector<double> as_float_array() const;

 private:
  Storage v_;
};

using TomlTable = std::map<std::string, TomlValue>;

struct TomlDoc {
  TomlTable root;                            // keys before any [section]
  std::map<std::string, TomlTable> sections;

  bool has_section(const std::string& name) const {
    return sections.count(name) != 0;
  }
  // Empty table when the section is absent.
  const TomlTable& section(const std::string& name) const;
};

TomlDoc toml_parse(std::string_view text);
TomlDoc toml_parse_file(const std::string& path);

}  // namespace bdsim

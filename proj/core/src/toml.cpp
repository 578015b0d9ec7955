#include "bdsim/toml.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "bdsim/common.hpp"

namespace bdsim {
namespace {

[[noreturn]] void fail(size_t line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

struct Cursor {
  std::string_view s;
  size_t pos = 0;
  size_t line = 1;

  bool done() const { return pos >= s.size(); }
  char peek() const { return s[pos]; }
  void advance() {
    if (s[pos] == '\n') ++line;
    ++pos;
  }
  // Skips spaces, tabs, and comments; newlines only if `newlines`.
  void skip_ws(bool newlines) {
    while (!done()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r') {
        advance();
      } else if (c == '#') {
        while (!done() && peek() != '\n') advance();
      } else if (newlines && c == '\n') {
        advance();
      } else {
        break;
      }
    }
  }
};

bool bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string parse_basic_string(Cursor& c) {
  const size_t line = c.line;
  c.advance();  // opening quote
  std::string out;
  while (true) {
    if (c.done()) fail(line, "unterminated string");
    const char ch = c.peek();
    if (ch == '"') {
      c.advance();
      return out;
    }
    if (ch == '\n') fail(line, "newline inside string");
    if (ch == '\\') {
      c.advance();
      if (c.done()) fail(line, "dangling escape");
      const char e = c.peek();
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        default: fail(c.line, std::string("unsupported escape \\") + e);
      }
      c.advance();
    } else {
      out += ch;
      c.advance();
    }
  }
}

TomlValue parse_scalar_token(const std::string& tok, size_t line) {
  if (tok == "true") return TomlValue(TomlValue::Storage(true));
  if (tok == "false") return TomlValue(TomlValue::Storage(false));
  if (tok == "inf" || tok == "+inf")
    return TomlValue(TomlValue::Storage(std::numeric_limits<double>::infinity()));
  if (tok == "-inf")
    return TomlValue(TomlValue::Storage(-std::numeric_limits<double>::infinity()));
  if (tok == "nan" || tok == "+nan" || tok == "-nan")
    return TomlValue(TomlValue::Storage(std::nan("")));

  const bool floaty = tok.find_first_of(".eE") != std::string::npos;
  if (!floaty) {
    int64_t iv = 0;
    const auto [p, ec] =
        std::from_chars(tok.data(), tok.data() + tok.size(), iv);
    if (ec == std::errc() && p == tok.data() + tok.size())
      return TomlValue(TomlValue::Storage(iv));
  }
  char* end = nullptr;
  const double dv = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() + tok.size() && !tok.empty())
    return TomlValue(TomlValue::Storage(dv));
  fail(line, "cannot parse value '" + tok + "'");
}

TomlValue parse_value(Cursor& c);

TomlValue parse_array(Cursor& c) {
  c.advance();  // '['
  TomlValue::Array arr;
  while (true) {
    c.skip_ws(true);
    if (c.done()) fail(c.line, "unterminated array");
    if (c.peek() == ']') {
      c.advance();
      return TomlValue(TomlValue::Storage(std::move(arr)));
    }
    arr.push_back(parse_value(c));
    c.skip_ws(true);
    if (c.done()) fail(c.line, "unterminated array");
    if (c.peek() == ',') {
      c.advance();
    } else if (c.peek() != ']') {
      fail(c.line, "expected ',' or ']' in array");
    }
  }
}

TomlValue parse_value(Cursor& c) {
  c.skip_ws(false);
  if (c.done()) fail(c.line, "missing value");
  const char ch = c.peek();
  if (ch == '"') return TomlValue(TomlValue::Storage(parse_basic_string(c)));
  if (ch == '[') return parse_array(c);
  const size_t line = c.line;
  std::string tok;
  while (!c.done()) {
    const char t = c.peek();
    if (t == '\n' || t == ',' || t == ']' || t == '#' || t == ' ' || t == '\t' ||
        t == '\r')
      break;
    tok += t;
    c.advance();
  }
  if (tok.empty()) fail(line, "missing value");
  return parse_scalar_token(tok, line);
}

}  // namespace

const std::string& TomlValue::as_string() const {
  if (!is_string()) throw ConfigError("config value is not a string");
  return std::get<std::string>(v_);
}

int64_t TomlValue::as_int() const {
  if (!is_int()) throw ConfigError("config value is not an integer");
  return std::get<int64_t>(v_);
}

double TomlValue::as_float() const {
  if (is_int()) return static_cast<double>(std::get<int64_t>(v_));
  if (!is_float()) throw ConfigError("config value is not a number");
  return std::get<double>(v_);
}

bool TomlValue::as_bool() const {
  if (!is_bool()) throw ConfigError("config value is not a boolean");
  return std::get<bool>(v_);
}

const TomlValue::Array& TomlValue::as_array() const {
  if (!is_array()) throw ConfigError("config value is not an array");
  return std::get<Array>(v_);
}

std::vector<double> TomlValue::as_float_array() const {
  const Array& a = as_array();
  std::vector<double> out;
  out.reserve(a.size());
  for (const TomlValue& v : a) out.push_back(v.as_float());
  return out;
}

const TomlTable& TomlDoc::section(const std::string& name) const {
  static const TomlTable empty;
  const auto it = sections.find(name);
  return it == sections.end() ? empty : it->second;
}

TomlDoc toml_parse(std::string_view text) {
  TomlDoc doc;
  Cursor c{text};
  TomlTable* current = &doc.root;

  while (true) {
    c.skip_ws(true);
    if (c.done()) return doc;
    const char ch = c.peek();
    if (ch == '[') {
      const size_t line = c.line;
      c.advance();
      std::string name;
      while (!c.done() && c.peek() != ']' && c.peek() != '\n') {
        name += c.peek();
        c.advance();
      }
      if (c.done() || c.peek() != ']') fail(line, "unterminated section header");
      c.advance();
      while (!name.empty() && (name.front() == ' ')) name.erase(name.begin());
      while (!name.empty() && (name.back() == ' ')) name.pop_back();
      if (name.empty()) fail(line, "empty section name");
      current = &doc.sections[name];
      continue;
    }

    // key = value
    const size_t line = c.line;
    std::string key;
    if (ch == '"') {
      key = parse_basic_string(c);
    } else if (bare_key_char(ch)) {
      while (!c.done() && bare_key_char(c.peek())) {
        key += c.peek();
        c.advance();
      }
    } else {
      fail(line, std::string("unexpected character '") + ch + "'");
    }
    c.skip_ws(false);
    if (c.done() || c.peek() != '=') fail(line, "expected '=' after key");
    c.advance();
    TomlValue val = parse_value(c);
    c.skip_ws(false);
    if (!c.done() && c.peek() != '\n')
      fail(line, "trailing characters after value");
    if (current->count(key)) fail(line, "duplicate key '" + key + "'");
    current->emplace(key, std::move(val));
  }
}

TomlDoc toml_parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return toml_parse(ss.str());
}

}  // namespace bdsim

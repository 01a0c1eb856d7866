#pragma once

// Experiment configuration files: a flat, typed subset of TOML.
//
//   file    := { line "\n" }
//   line    := ws [ section | pair ] ws [ "#" comment ]
//   section := "[" name "]"
//   pair    := name ws "=" ws value
//   value   := integer | float | bool | string | array
//   integer := [+-] digit+
//   float   := any decimal or exponent form accepted by strtod (no inf/nan)
//   bool    := "true" | "false"
//   string  := '"' { char | '\"' | '\\' } '"'
//   array   := "[" [ number { "," number } ] "]"
//   name    := [A-Za-z0-9_-]+
//
// Every pair belongs to the most recent section and is addressed as
// "section.name". Keys are checked against a schema: unknown sections or
// keys, duplicates, and type mismatches are errors that carry the line
// number. Integers are accepted where floats are expected, and a single
// number where an array is expected.

#include "spinwalk/core.hpp"

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace spinwalk {

enum class ValueType { Int, Float, Bool, String, FloatArray };

using ConfigSchema = std::map<std::string, ValueType>;

class ConfigError : public Error {
 public:
  ConfigError(const std::string& source, int line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class Config {
 public:
  using Value = std::variant<std::int64_t, double, bool, std::string, std::vector<double>>;

  static Config parse(std::string_view text, const ConfigSchema& schema, const std::string& source = "<config>") {
    Config cfg;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t eol = std::min(text.find('\n', pos), text.size());
      std::string_view line = text.substr(pos, eol - pos);
      pos = eol + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      Cursor c{line, 0, source, line_no};
      c.skip_ws();
      if (c.done() || c.peek() == '#') {
        if (eol == text.size()) break;
        continue;
      }
      if (c.peek() == '[') {
        ++c.i;
        c.skip_ws();
        section = c.name();
        c.skip_ws();
        c.expect(']');
        c.finish();
        bool known = false;
        for (const auto& [key, type] : schema)
          if (key.rfind(section + ".", 0) == 0) known = true;
        if (!known) throw ConfigError(source, line_no, "unknown section [" + section + "]");
      } else {
        const std::string key = c.name();
        c.skip_ws();
        c.expect('=');
        c.skip_ws();
        if (section.empty()) throw ConfigError(source, line_no, "key '" + key + "' outside a section");
        const std::string full = section + "." + key;
        auto it = schema.find(full);
        if (it == schema.end()) throw ConfigError(source, line_no, "unknown key '" + key + "' in section [" + section + "]");
        if (cfg.values_.count(full)) throw ConfigError(source, line_no, "duplicate key '" + full + "'");
        Value v = c.value(it->second);
        c.finish();
        cfg.values_[full] = std::move(v);
        cfg.lines_[full] = line_no;
      }
      if (eol == text.size()) break;
    }
    return cfg;
  }

  static Config load(const std::string& path, const ConfigSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), schema, path);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  int line_of(const std::string& key) const { return lines_.at(key); }

  std::optional<std::int64_t> get_int(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return std::get<std::int64_t>(values_.at(key));
  }
  std::optional<double> get_double(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    const auto& v = values_.at(key);
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    return std::get<double>(v);
  }
  std::optional<bool> get_bool(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return std::get<bool>(values_.at(key));
  }
  std::optional<std::string> get_string(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return std::get<std::string>(values_.at(key));
  }
  std::optional<std::vector<double>> get_array(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return std::get<std::vector<double>>(values_.at(key));
  }

 private:
  struct Cursor {
    std::string_view s;
    std::size_t i;
    const std::string& source;
    int line;

    bool done() const { return i >= s.size(); }
    char peek() const { return s[i]; }
    void skip_ws() {
      while (!done() && (s[i] == ' ' || s[i] == '\t')) ++i;
    }
    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(source, line, what); }
    void expect(char ch) {
      if (done() || s[i] != ch) fail(std::string("expected '") + ch + "'");
      ++i;
    }
    void finish() {
      skip_ws();
      if (!done() && s[i] != '#') fail("unexpected trailing text '" + std::string(s.substr(i)) + "'");
    }
    std::string name() {
      const std::size_t b = i;
      while (!done() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_' || s[i] == '-')) ++i;
      if (i == b) fail("expected a name");
      return std::string(s.substr(b, i - b));
    }
    std::string token() {
      const std::size_t b = i;
      while (!done() && s[i] != ',' && s[i] != ']' && s[i] != '#' && s[i] != ' ' && s[i] != '\t') ++i;
      return std::string(s.substr(b, i - b));
    }
    static bool is_integer(const std::string& t) {
      std::size_t k = (!t.empty() && (t[0] == '+' || t[0] == '-')) ? 1 : 0;
      if (k == t.size()) return false;
      for (; k < t.size(); ++k)
        if (!std::isdigit(static_cast<unsigned char>(t[k]))) return false;
      return true;
    }
    double number(const std::string& t) const {
      if (t.empty()) fail("expected a number");
      for (char ch : t)
        if (!(std::isdigit(static_cast<unsigned char>(ch)) || ch == '.' || ch == 'e' || ch == 'E' || ch == '+' ||
              ch == '-'))
          fail("'" + t + "' is not a number");
      char* end = nullptr;
      const double v = std::strtod(t.c_str(), &end);
      if (end != t.c_str() + t.size()) fail("'" + t + "' is not a number");
      return v;
    }
    Value value(ValueType type) {
      if (done()) fail("missing value");
      switch (type) {
        case ValueType::String: {
          expect('"');
          std::string out;
          while (!done() && s[i] != '"') {
            if (s[i] == '\\') {
              ++i;
              if (done() || (s[i] != '"' && s[i] != '\\')) fail("invalid escape in string");
            }
            out += s[i++];
          }
          expect('"');
          return out;
        }
        case ValueType::Bool: {
          const std::string t = token();
          if (t == "true") return true;
          if (t == "false") return false;
          fail("expected true or false, got '" + t + "'");
        }
        case ValueType::Int: {
          const std::string t = token();
          if (!is_integer(t)) fail("expected an integer, got '" + t + "'");
          try {
            return static_cast<std::int64_t>(std::stoll(t));
          } catch (const std::exception&) {
            fail("integer out of range: '" + t + "'");
          }
        }
        case ValueType::Float: {
          const std::string t = token();
          if (is_integer(t)) return static_cast<std::int64_t>(std::stoll(t));
          return number(t);
        }
        case ValueType::FloatArray: {
          std::vector<double> out;
          if (peek() != '[') {
            out.push_back(number(token()));
            return out;
          }
          ++i;
          skip_ws();
          if (!done() && peek() == ']') {
            ++i;
            return out;
          }
          for (;;) {
            skip_ws();
            out.push_back(number(token()));
            skip_ws();
            if (done()) fail("unterminated array");
            if (peek() == ',') {
              ++i;
              continue;
            }
            expect(']');
            return out;
          }
        }
      }
      fail("unsupported value type");
    }
  };

  std::map<std::string, Value> values_;
  std::map<std::string, int> lines_;
};

/// Keys understood by the command-line runner.
inline ConfigSchema default_schema() {
  using T = ValueType;
  return {
      {"model.family", T::String},     {"model.d", T::Int},
      {"model.U", T::Float},           {"model.b", T::Float},
      {"model.a", T::FloatArray},      {"walk.noise", T::String},
      {"walk.square_root", T::String}, {"walk.x0", T::FloatArray},
      {"walk.perturbation", T::Float}, {"walk.perturbation_decay", T::Float},
      {"run.seed", T::Int},            {"run.replicas", T::Int},
      {"run.n", T::Int},               {"run.dt", T::Float},
      {"run.threads", T::Int},         {"run.horizon", T::Float},
      {"stationary.burn_in", T::Float}, {"stationary.thin", T::Float},
      {"stationary.samples", T::Int},  {"stationary.chains", T::Int},
      {"stationary.bins", T::Int},     {"exit.a", T::Float},
      {"exit.lambda", T::FloatArray},  {"exit.max_time", T::Float},
      {"excursion.delta", T::Float},   {"excursion.min_lifetime", T::Float},
      {"excursion.max_lo", T::Float},  {"excursion.max_hi", T::Float},
      {"excursion.dt_ratio", T::Float}, {"excursion.threshold", T::Float},
      {"nonuniq.p", T::FloatArray},    {"nonuniq.return_factor", T::Float},
  };
}

}  // namespace spinwalk

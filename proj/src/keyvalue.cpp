#include "onsd/keyvalue.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "onsd/errors.hpp"

namespace onsd {

namespace {

std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t\r"));
  const auto last = s.find_last_not_of(" \t\r");
  s.erase(last == std::string::npos ? 0 : last + 1);
  return s;
}

const std::string* find(const KeyValues& kv, const std::string& key) {
  const auto it = kv.find(key);
  return it == kv.end() ? nullptr : &it->second;
}

[[noreturn]] void bad(const std::string& key, const std::string& value) {
  throw ConfigError("invalid value '" + value + "' for " + key);
}

}  // namespace

KeyValues parse_key_values(std::istream& in, const std::string& source) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key=value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return parse_key_values(in, path.string());
}

void write_key_values(std::ostream& out, const KeyValues& kv) {
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

void read_value(const KeyValues& kv, const std::string& key, double& out) {
  const std::string* s = find(kv, key);
  if (!s) return;
  try {
    std::size_t used = 0;
    const double v = std::stod(*s, &used);
    if (used != s->size()) bad(key, *s);
    out = v;
  } catch (const std::logic_error&) {
    bad(key, *s);
  }
}

void read_value(const KeyValues& kv, const std::string& key, int& out) {
  const std::string* s = find(kv, key);
  if (!s) return;
  int v = 0;
  const auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
  if (ec != std::errc() || p != s->data() + s->size()) bad(key, *s);
  out = v;
}

void read_value(const KeyValues& kv, const std::string& key, unsigned long long& out) {
  const std::string* s = find(kv, key);
  if (!s) return;
  unsigned long long v = 0;
  const auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
  if (ec != std::errc() || p != s->data() + s->size()) bad(key, *s);
  out = v;
}

void read_value(const KeyValues& kv, const std::string& key, bool& out) {
  const std::string* s = find(kv, key);
  if (!s) return;
  if (*s == "true" || *s == "1") {
    out = true;
  } else if (*s == "false" || *s == "0") {
    out = false;
  } else {
    bad(key, *s);
  }
}

void read_value(const KeyValues& kv, const std::string& key, std::string& out) {
  if (const std::string* s = find(kv, key)) out = *s;
}

std::string format_double(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace onsd

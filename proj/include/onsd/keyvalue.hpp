#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace onsd {

/// Ordered `key=value` pairs as read from a plain-text config file.
using KeyValues = std::map<std::string, std::string>;

/// Blank lines and `#` comments are skipped; a line without `=` throws
/// ConfigError. Whitespace around keys and values is trimmed.
KeyValues parse_key_values(std::istream& in, const std::string& source = "<stream>");
KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(std::ostream& out, const KeyValues& kv);

/// Typed lookups. Missing keys leave `out` untouched; malformed values throw
/// ConfigError naming the key.
void read_value(const KeyValues& kv, const std::string& key, double& out);
void read_value(const KeyValues& kv, const std::string& key, int& out);
void read_value(const KeyValues& kv, const std::string& key, unsigned long long& out);
void read_value(const KeyValues& kv, const std::string& key, bool& out);
void read_value(const KeyValues& kv, const std::string& key, std::string& out);

/// Shortest round-trippable text for a double.
std::string format_double(double v);

}  // namespace onsd

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace orbseg {

// One `key = value` line of a config file. Blank lines and anything after `#`
// are ignored. Keys may repeat; consumers decide what repetition means.
struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

// `source` names the origin in error messages (usually the file path).
std::vector<ConfigEntry> parse_config_text(std::string_view text, std::string_view source);
std::vector<ConfigEntry> read_config_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

// Parsing helpers that raise ConfigError with "<source>:<line>: ..." context.
double parse_double(std::string_view text, std::string_view source, int line);
long long parse_int(std::string_view text, std::string_view source, int line);
std::vector<double> parse_doubles(std::string_view text, std::string_view source, int line);

}  // namespace orbseg

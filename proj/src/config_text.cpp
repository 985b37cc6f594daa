#include "orbseg/config_text.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "orbseg/error.hpp"
#include "orbseg/util.hpp"

namespace orbseg {
namespace {

std::string where(std::string_view source, int line) {
  return std::string(source) + ":" + std::to_string(line) + ": ";
}

}  // namespace

std::vector<ConfigEntry> parse_config_text(std::string_view text, std::string_view source) {
  std::vector<ConfigEntry> entries;
  int line_no = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(where(source, line_no) + "expected 'key = value'");
    }
    ConfigEntry e;
    e.key = std::string(trim(line.substr(0, eq)));
    e.value = std::string(trim(line.substr(eq + 1)));
    e.line = line_no;
    if (e.key.empty()) throw ConfigError(where(source, line_no) + "empty key");
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<ConfigEntry> read_config_file(const std::string& path) {
  return parse_config_text(read_text_file(path), path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

double parse_double(std::string_view text, std::string_view source, int line) {
  text = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError(where(source, line) + "expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

long long parse_int(std::string_view text, std::string_view source, int line) {
  text = trim(text);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError(where(source, line) + "expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

std::vector<double> parse_doubles(std::string_view text, std::string_view source, int line) {
  std::vector<double> out;
  std::string normalized(text);
  for (char& c : normalized) {
    if (c == ',' || c == '\t') c = ' ';
  }
  for (const std::string& tok : split(normalized, ' ')) {
    if (trim(tok).empty()) continue;
    out.push_back(parse_double(tok, source, line));
  }
  return out;
}

}  // namespace orbseg

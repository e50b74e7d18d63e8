#include "aniso/spec_string.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "aniso/common.hpp"

namespace aniso {

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

double parse_double(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  if (s.empty()) throw ParseError("empty value for " + std::string(what));
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(value)) {
    throw ParseError("invalid number '" + s + "' for " + std::string(what));
  }
  return value;
}

long parse_long(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  if (s.empty()) throw ParseError("empty value for " + std::string(what));
  char* end = nullptr;
  errno = 0;
  const long value = std::strtol(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw ParseError("invalid integer '" + s + "' for " + std::string(what));
  }
  return value;
}

double SpecString::number(const std::string& key) const {
  const auto it = params.find(key);
  if (it == params.end()) throw ParseError("'" + name + "' requires parameter '" + key + "'");
  return parse_double(it->second, key);
}

double SpecString::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long SpecString::integer(const std::string& key) const {
  const auto it = params.find(key);
  if (it == params.end()) throw ParseError("'" + name + "' requires parameter '" + key + "'");
  return parse_long(it->second, key);
}

long SpecString::integer_or(const std::string& key, long fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::string SpecString::text_or(const std::string& key, const std::string& fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void SpecString::only(std::string_view allowed) const {
  const std::string list = "," + std::string(allowed) + ",";
  for (const auto& [key, value] : params) {
    if (list.find("," + key + ",") == std::string::npos) {
      throw ParseError("unknown parameter '" + key + "' for '" + name + "'");
    }
  }
}

SpecString parse_spec_string(std::string_view text) {
  SpecString out;
  const std::string s = trim(text);
  const auto colon = s.find(':');
  out.name = trim(s.substr(0, colon));
  if (out.name.empty()) throw ParseError("empty spec string");
  if (colon == std::string::npos) return out;

  std::string rest = s.substr(colon + 1);
  for (char& c : rest) {
    if (c == ':') c = ',';
  }
  std::stringstream ss(rest);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value in '" + std::string(text) + "'");
    const std::string key = trim(item.substr(0, eq));
    if (out.params.count(key)) throw ParseError("duplicate parameter '" + key + "'");
    out.params[key] = trim(item.substr(eq + 1));
  }
  return out;
}

}  // namespace aniso

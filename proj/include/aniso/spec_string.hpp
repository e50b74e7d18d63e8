#pragma once

#include <map>
#include <string>
#include <string_view>

namespace aniso {

/// A parsed "name:key=value,key=value" string. Parameters may be separated by
/// ',' or ':'.
struct SpecString {
  std::string name;
  std::map<std::string, std::string> params;

  bool has(const std::string& key) const { return params.count(key) != 0; }
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  long integer(const std::string& key) const;
  long integer_or(const std::string& key, long fallback) const;
  std::string text_or(const std::string& key, const std::string& fallback) const;
  /// Throws ParseError if a parameter outside `allowed` (comma separated) is present.
  void only(std::string_view allowed) const;
};

SpecString parse_spec_string(std::string_view text);

double parse_double(std::string_view text, std::string_view what);
long parse_long(std::string_view text, std::string_view what);
std::string trim(std::string_view text);

}  // namespace aniso

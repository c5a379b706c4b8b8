#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "probeconv/errors.hpp"

namespace probeconv {

/// Comma-separated output: header row, '.' decimal separator, LF line
/// endings, UTF-8. Doubles are written shortest-round-trip via to_chars, so
/// identical values always produce identical bytes regardless of locale.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);

  template <typename... Ts>
  void row(const Ts&... vals) {
    bool first = true;
    ((append_field(format(vals), first), first = false), ...);
    out_ << '\n';
  }

  static std::string format(double v);
  static std::string format(int v);
  static std::string format(long v);
  static std::string format(unsigned long v);
  static std::string format(unsigned long long v);
  static std::string format(const std::string& v) { return v; }
  static std::string format(const char* v) { return v; }
  static std::string format(std::string_view v) { return std::string(v); }

 private:
  void append_field(const std::string& s, bool first) {
    if (!first) out_ << ',';
    out_ << s;
  }

  std::ofstream out_;
};

}  // namespace probeconv

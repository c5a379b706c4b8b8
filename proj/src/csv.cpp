#include "probeconv/csv.hpp"

#include <charconv>
#include <system_error>

namespace probeconv {

CsvWriter::CsvWriter(const std::filesystem::path& path) {
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw io_error("CsvWriter: cannot open " + path.string());
}

std::string CsvWriter::format(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{}) throw io_error("CsvWriter: double formatting failed");
  return std::string(buf, res.ptr);
}

std::string CsvWriter::format(int v) { return std::to_string(v); }
std::string CsvWriter::format(long v) { return std::to_string(v); }
std::string CsvWriter::format(unsigned long v) { return std::to_string(v); }
std::string CsvWriter::format(unsigned long long v) { return std::to_string(v); }

}  // namespace probeconv

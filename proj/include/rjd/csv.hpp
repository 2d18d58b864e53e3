#pragma once

// Locale-independent CSV: '.' decimals, shortest round-trip formatting.

#include <charconv>
#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>

namespace rjd {

inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) return "nan";
  return std::string(buf, res.ptr);
}

template <class Int, std::enable_if_t<std::is_integral_v<Int>, int> = 0>
std::string format_number(Int v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::initializer_list<std::string_view> header) : os_(os) {
    bool first = true;
    for (auto h : header) {
      if (!first) os_ << ',';
      os_ << h;
      first = false;
    }
    os_ << '\n';
    columns_ = header.size();
  }

  CsvWriter& cell(double v) { return raw(format_number(v)); }
  CsvWriter& cell(int v) { return raw(format_number(v)); }
  CsvWriter& cell(std::int64_t v) { return raw(format_number(v)); }
  CsvWriter& cell(std::uint64_t v) { return raw(format_number(v)); }
  CsvWriter& cell(std::string_view s) { return raw(std::string(s)); }

  void end_row() {
    os_ << '\n';
    in_row_ = 0;
  }

  std::size_t columns() const { return columns_; }

 private:
  CsvWriter& raw(const std::string& s) {
    if (in_row_++ > 0) os_ << ',';
    os_ << s;
    return *this;
  }

  std::ostream& os_;
  std::size_t columns_ = 0;
  std::size_t in_row_ = 0;
};

}  // namespace rjd

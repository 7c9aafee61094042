#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace emolex {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed input rows; `line` is 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace io {

std::string read_file(const std::filesystem::path& path);

/// Splits on '\n', dropping a trailing '\r' per line and a final empty line.
std::vector<std::string> split_lines(std::string_view text);

std::vector<std::string_view> split(std::string_view s, char sep);

/// Writes to a sibling temp file then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest decimal string that round-trips the double.
std::string format_double(double v);

/// Fixed-point with `digits` decimals.
std::string format_fixed(double v, int digits);

}  // namespace io
}  // namespace emolex

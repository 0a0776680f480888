#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace engage::csv {

/// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF tolerated.
/// Quoted fields may span lines.
class Reader {
 public:
  explicit Reader(std::istream& in, char delimiter = ',') : in_(in), delimiter_(delimiter) {}

  /// Next record, or nullopt at end of input.
  std::optional<std::vector<std::string>> next();

  /// 1-based physical line where the last returned record started.
  std::size_t line() const noexcept { return record_line_; }

 private:
  std::istream& in_;
  char delimiter_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

/// Quotes a field only when it contains the delimiter, a quote or a newline.
std::string escape(std::string_view field, char delimiter = ',');

/// Shortest round-trip decimal representation of a double ("NA" for NaN).
std::string format_double(double value);

}  // namespace engage::csv

#include "engage/csv.hpp"

#include <charconv>
#include <cmath>
#include <istream>

namespace engage::csv {

std::optional<std::vector<std::string>> Reader::next() {
  std::string line;
  if (!std::getline(in_, line)) return std::nullopt;
  ++line_;
  record_line_ = line_;

  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool field_started_quoted = false;
  for (;;) {
    if (!line.empty() && line.back() == '\r' && !quoted) line.pop_back();
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            quoted = false;
          }
        } else {
          field.push_back(c);
        }
      } else if (c == '"' && field.empty() && !field_started_quoted) {
        quoted = true;
        field_started_quoted = true;
      } else if (c == delimiter_) {
        fields.push_back(std::move(field));
        field.clear();
        field_started_quoted = false;
      } else {
        field.push_back(c);
      }
    }
    if (!quoted) break;
    // Quoted field continues on the next physical line.
    if (!std::getline(in_, line)) break;
    ++line_;
    field.push_back('\n');
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string escape(std::string_view field, char delimiter) {
  if (field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return "NA";
  return std::string(buf, end);
}

}  // namespace engage::csv

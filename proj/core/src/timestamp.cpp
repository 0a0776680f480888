#include "engage/timestamp.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

#include "engage/common.hpp"

namespace engage {

namespace {

[[noreturn]] void bad(std::string_view text, std::string_view why) {
  throw ValidationError("invalid RFC 3339 timestamp '" + std::string(text) + "': " +
                        std::string(why));
}

int digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) bad(text, "truncated");
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) bad(text, "expected digit");
    value = value * 10 + (text[i] - '0');
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, std::string_view allowed) {
  if (pos >= text.size() || allowed.find(text[pos]) == std::string_view::npos) {
    bad(text, "unexpected character");
  }
}

}  // namespace

Timestamp parse_rfc3339(std::string_view text) {
  using namespace std::chrono;
  // YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)
  const int y = digits(text, 0, 4);
  expect(text, 4, "-");
  const int mo = digits(text, 5, 2);
  expect(text, 7, "-");
  const int d = digits(text, 8, 2);
  expect(text, 10, "Tt ");
  const int hh = digits(text, 11, 2);
  expect(text, 13, ":");
  const int mm = digits(text, 14, 2);
  expect(text, 16, ":");
  const int ss = digits(text, 17, 2);
  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start) bad(text, "empty fraction");
  }
  if (pos >= text.size()) bad(text, "missing offset");
  int offset_minutes = 0;
  if (text[pos] == 'Z' || text[pos] == 'z') {
    ++pos;
  } else if (text[pos] == '+' || text[pos] == '-') {
    const int sign = text[pos] == '-' ? -1 : 1;
    const int oh = digits(text, pos + 1, 2);
    expect(text, pos + 3, ":");
    const int om = digits(text, pos + 4, 2);
    if (oh > 23 || om > 59) bad(text, "offset out of range");
    offset_minutes = sign * (oh * 60 + om);
    pos += 6;
  } else {
    bad(text, "missing offset");
  }
  if (pos != text.size()) bad(text, "trailing characters");

  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) bad(text, "invalid calendar date");
  if (hh > 23 || mm > 59 || ss > 60) bad(text, "time out of range");
  const sys_seconds local = sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
  return local - minutes{offset_minutes};
}

std::string format_rfc3339(Timestamp ts) {
  using namespace std::chrono;
  const auto day_point = floor<days>(ts);
  const year_month_day ymd{day_point};
  auto rest = ts - day_point;
  const auto h = duration_cast<hours>(rest);
  rest -= h;
  const auto m = duration_cast<minutes>(rest);
  rest -= m;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(h.count()), static_cast<int>(m.count()),
                static_cast<int>(rest.count()));
  return buf;
}

}  // namespace engage

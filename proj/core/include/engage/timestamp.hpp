#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace engage {

using Timestamp = std::chrono::sys_seconds;

/// Parses an RFC 3339 date-time ("2023-05-01T12:00:00Z",
/// "2023-05-01T14:00:00.250+02:00"). Fractional seconds are truncated.
/// Throws ValidationError on malformed input.
Timestamp parse_rfc3339(std::string_view text);

/// UTC rendering with a trailing 'Z'.
std::string format_rfc3339(Timestamp ts);

}  // namespace engage

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace telerank {

using UnixSeconds = std::int64_t;

constexpr UnixSeconds kSecondsPerDay = 86400;

// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SS" with optional "Z" or
// "+HH:MM"/"-HH:MM" suffix. Throws std::invalid_argument otherwise.
UnixSeconds parse_iso8601(std::string_view text);

std::string format_iso8601(UnixSeconds t);

// "YYYY-MM-DD" of the UTC day containing t.
std::string format_date(UnixSeconds t);

}  // namespace telerank

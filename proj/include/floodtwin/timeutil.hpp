#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace floodtwin {

// Seconds since 1970-01-01T00:00:00Z. Calendar handling is proleptic Gregorian, UTC only.
using EpochSeconds = double;

inline constexpr double kSecondsPerDay = 86400.0;

// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS[.fff]]" with optional trailing "Z".
// A space may stand in for the 'T'. Throws DataError on anything else.
EpochSeconds parse_iso8601(std::string_view text);

// "YYYY-MM-DDTHH:MM:SSZ" (fractional seconds are dropped).
std::string format_iso8601(EpochSeconds t);

// "YYYY-MM-DD" of the day containing t.
std::string format_date(EpochSeconds t);

}  // namespace floodtwin

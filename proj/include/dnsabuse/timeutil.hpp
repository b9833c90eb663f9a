#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace dnsabuse {

using Timestamp = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

inline constexpr double kSecondsPerDay = 86400.0;

// Accepts "YYYY-MM-DDTHH:MM:SSZ", "YYYY-MM-DD HH:MM:SSZ", an optional
// fractional-second part (truncated), "+00:00" as the UTC designator, and a
// bare "YYYY-MM-DD" (midnight). Non-UTC offsets are rejected.
std::optional<Timestamp> parse_iso8601(std::string_view text);

// Always "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(Timestamp t);

inline double to_days(Seconds s) { return static_cast<double>(s.count()) / kSecondsPerDay; }

}  // namespace dnsabuse

#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace geocube {

using Timestamp = std::chrono::sys_seconds;

inline constexpr std::int64_t kSecondsPerHour = 3600;
inline constexpr std::int64_t kSecondsPerDay = 86400;

// ISO-8601 UTC instant: "YYYY-MM-DDTHH:MM:SS" followed by "Z" or "+00:00".
// Fractional seconds are accepted and truncated. Throws Error(kMalformedRecord).
Timestamp parse_iso8601(std::string_view text);

std::string format_iso8601(Timestamp t);

inline std::int64_t seconds_since_epoch(Timestamp t) { return t.time_since_epoch().count(); }

inline Timestamp from_unix_seconds(std::int64_t s) {
  return Timestamp{std::chrono::seconds{s}};
}

// Half-open window [begin, end).
struct TimeWindow {
  Timestamp begin;
  Timestamp end;

  bool contains(Timestamp t) const { return begin <= t && t < end; }

  static TimeWindow everything() {
    return {from_unix_seconds(-(std::int64_t{1} << 40)), from_unix_seconds(std::int64_t{1} << 40)};
  }
};

}  // namespace geocube

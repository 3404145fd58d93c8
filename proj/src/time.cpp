#include "geocube/time.hpp"

#include <charconv>
#include <cstdio>

#include "geocube/errors.hpp"

namespace geocube {
namespace {

[[noreturn]] void malformed(std::string_view text) {
  throw Error(ErrorCode::kMalformedRecord, "unparsable timestamp '" + std::string(text) + "'");
}

int read_int(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) malformed(text);
  int value = 0;
  const char* first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) malformed(text);
  return value;
}

void expect(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) malformed(text);
}

}  // namespace

Timestamp parse_iso8601(std::string_view text) {
  using namespace std::chrono;
  const int y = read_int(text, 0, 4);
  expect(text, 4, '-');
  const int mo = read_int(text, 5, 2);
  expect(text, 7, '-');
  const int d = read_int(text, 8, 2);
  if (text.size() <= 10 || (text[10] != 'T' && text[10] != ' ')) malformed(text);
  const int h = read_int(text, 11, 2);
  expect(text, 13, ':');
  const int mi = read_int(text, 14, 2);
  expect(text, 16, ':');
  const int s = read_int(text, 17, 2);

  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
  }
  const std::string_view zone = text.substr(pos);
  if (zone != "Z" && zone != "+00:00" && zone != "+0000") malformed(text);

  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) malformed(text);
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_iso8601(Timestamp t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{t - day_point};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

}  // namespace geocube

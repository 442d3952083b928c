#include "lobforge/types.hpp"

#include <charconv>
#include <cstdio>

namespace lobforge {

Nanos parse_clock_time(std::string_view text) {
  int parts[3] = {0, 0, 0};
  std::size_t count = 0;
  std::size_t start = 0;
  while (count < 3) {
    const std::size_t colon = text.find(':', start);
    const std::string_view field = text.substr(start, colon == std::string_view::npos ? colon : colon - start);
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), parts[count]);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size())
      throw ValidationError("bad clock time '" + std::string(text) + "'");
    ++count;
    if (colon == std::string_view::npos) break;
    start = colon + 1;
    if (count == 3) throw ValidationError("bad clock time '" + std::string(text) + "'");
  }
  if (count < 2 || parts[0] < 0 || parts[0] > 24 || parts[1] < 0 || parts[1] > 59 || parts[2] < 0 || parts[2] > 59)
    throw ValidationError("bad clock time '" + std::string(text) + "'");
  return clock_time(parts[0], parts[1], parts[2]);
}

std::string format_clock_time(Nanos ts) {
  const Nanos s = ts / kNanosPerSecond;
  const Nanos frac = ts % kNanosPerSecond;
  char buf[32];
  if (frac == 0)
    std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld", static_cast<long long>(s / 3600),
                  static_cast<long long>(s / 60 % 60), static_cast<long long>(s % 60));
  else
    std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld.%09lld", static_cast<long long>(s / 3600),
                  static_cast<long long>(s / 60 % 60), static_cast<long long>(s % 60), static_cast<long long>(frac));
  return buf;
}

}  // namespace lobforge

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lobforge {

using Ticks = std::int64_t;
using Shares = std::int64_t;
using Nanos = std::int64_t;
using OrderId = std::uint64_t;

enum class Side : std::uint8_t { Bid = 0, Ask = 1 };

constexpr Side opposite(Side s) noexcept { return s == Side::Bid ? Side::Ask : Side::Bid; }

constexpr std::string_view to_string(Side s) noexcept { return s == Side::Bid ? "BID" : "ASK"; }

constexpr Nanos kNanosPerSecond = 1'000'000'000;
constexpr Nanos kNanosPerMinute = 60 * kNanosPerSecond;
constexpr Nanos kNanosPerHour = 60 * kNanosPerMinute;

constexpr Nanos clock_time(int hours, int minutes, int seconds = 0) noexcept {
  return hours * kNanosPerHour + minutes * kNanosPerMinute + seconds * kNanosPerSecond;
}

// Parses "HH:MM" or "HH:MM:SS" into ns since midnight. Throws ValidationError.
Nanos parse_clock_time(std::string_view text);
std::string format_clock_time(Nanos ts);

/// Bad input: malformed files, invalid parameters, unknown flags. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure while running: I/O, protocol violations, degenerate data. Maps to CLI exit code 2.
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProtocolError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

}  // namespace lobforge

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <boost/circular_buffer.hpp>

#include "lobforge/orderbook.hpp"

namespace lobforge {

/// Snapshot of the nine conditioning features, in canonical order:
/// I1, I5, O128, O256, V1, V5, spread, r1, r50.
struct MarketStateVector {
  static constexpr std::size_t kSize = 9;

  enum Flag : std::uint8_t {
    kOneSided = 1U << 0,      // one book side empty; spread reused
    kEmptyBook = 1U << 1,     // both sides empty; imbalance defaulted
    kReturnWarmup = 1U << 2,  // not enough mid history for r50
  };

  double imbalance1{0.5};
  double imbalance5{0.5};
  double sign_imbalance128{0.0};
  double sign_imbalance256{0.0};
  double volume1{0.0};
  double volume5{0.0};
  double spread{0.0};
  double return1{0.0};
  double return50{0.0};
  std::uint8_t flags{0};

  std::array<double, kSize> to_array() const noexcept {
    return {imbalance1, imbalance5, sign_imbalance128, sign_imbalance256, volume1,
            volume5,    spread,     return1,           return50};
  }
  static MarketStateVector from_array(std::span<const double, kSize> v) noexcept {
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], 0};
  }

  friend bool operator==(const MarketStateVector&, const MarketStateVector&) = default;
};

// Indices into to_array().
namespace feature {
constexpr std::size_t kI1 = 0, kI5 = 1, kO128 = 2, kO256 = 3, kV1 = 4, kV5 = 5, kSpread = 6,
                      kR1 = 7, kR50 = 8;
}

/// Event-time history: market-order signs (+1 sell, -1 buy, 0 otherwise) and
/// post-event mid-prices. When the mid is undefined the last defined one is
/// repeated.
class EventHistory {
 public:
  static constexpr std::size_t kSignCapacity = 256;
  static constexpr std::size_t kMidCapacity = 51;

  EventHistory() : signs_(kSignCapacity), mids_(kMidCapacity) {}

  void record(int sign, const Book& book);

  /// Sum of the last n signs (missing events count as 0).
  int sign_sum(std::size_t n) const noexcept;
  std::size_t event_count() const noexcept { return events_; }
  std::size_t mid_count() const noexcept { return mids_.size(); }
  /// back = 0 is the most recent mid.
  double mid(std::size_t back) const { return mids_[mids_.size() - 1 - back]; }
  std::optional<Ticks> last_spread() const noexcept { return last_spread_; }

 private:
  boost::circular_buffer<int> signs_;
  boost::circular_buffer<double> mids_;
  std::optional<double> last_mid_;
  std::optional<Ticks> last_spread_;
  std::size_t events_{0};
};

/// Market-order sign convention: +1 for a sell, -1 for a buy.
constexpr int market_order_sign(Side aggressor) noexcept { return aggressor == Side::Ask ? 1 : -1; }

std::optional<double> mid_price(const Book& book) noexcept;

/// Bid share of the top-`levels` volume. nullopt when both sides are empty.
std::optional<double> volume_imbalance(const Book& book, std::size_t levels);
Shares absolute_volume(const Book& book, std::size_t levels);
double order_sign_imbalance(const EventHistory& history, std::size_t n);
/// nullopt when either side is empty.
std::optional<Ticks> spread(const Book& book) noexcept;

struct ReturnValue {
  double value{0.0};
  bool warmup{false};
};
ReturnValue price_return(const EventHistory& history, std::size_t n);

MarketStateVector build_state(const Book& book, const EventHistory& history);

/// The last T states, oldest first. Until T states have been pushed the
/// earliest state is repeated at the front.
class StateWindow {
 public:
  explicit StateWindow(std::size_t depth = 5);

  void push(const MarketStateVector& state);

  std::size_t depth() const noexcept { return depth_; }
  bool empty() const noexcept { return states_.empty(); }
  bool warmed_up() const noexcept { return states_.size() == depth_; }
  const MarketStateVector& latest() const { return states_.back(); }
  std::vector<MarketStateVector> states() const;
  /// T x 9 values, row-major, oldest first.
  std::vector<double> flatten() const;

  friend bool operator==(const StateWindow&, const StateWindow&) = default;

 private:
  std::size_t depth_;
  std::vector<MarketStateVector> states_;
};

StateWindow push_state(StateWindow window, const MarketStateVector& state);

}  // namespace lobforge

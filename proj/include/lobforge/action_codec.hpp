#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "lobforge/agent.hpp"
#include "lobforge/distributions.hpp"
#include "lobforge/market_state.hpp"

namespace lobforge {

struct Range {
  double min{0.0};
  double max{1.0};

  bool valid() const noexcept { return min < max; }
  friend bool operator==(const Range&, const Range&) = default;
};

/// Min-max bounds for every ordinal that is scaled to [-1, 1]: four action
/// attributes and the three unbounded state features.
struct ScalerBounds {
  Range depth{-5.0, 20.0};
  Range cancel_depth{0.0, 20.0};
  Range qty_x{1.0, 999.0};
  Range qty_100x{1.0, 20.0};
  Range volume1{0.0, 5000.0};
  Range volume5{0.0, 20000.0};
  Range spread{0.0, 10.0};

  bool valid() const noexcept {
    return depth.valid() && cancel_depth.valid() && qty_x.valid() && qty_100x.valid() && volume1.valid() &&
           volume5.valid() && spread.valid();
  }
  friend bool operator==(const ScalerBounds&, const ScalerBounds&) = default;
};

/// (depth, cancel depth, qty_x, qty_100x, qty type, order type, side)
struct ActionVector {
  static constexpr std::size_t kSize = 7;
  static constexpr std::size_t kDepth = 0, kCancelDepth = 1, kQtyX = 2, kQty100x = 3, kQtyType = 4,
                               kOrderType = 5, kSide = 6;

  std::array<double, kSize> values{};

  double operator[](std::size_t i) const noexcept { return values[i]; }
  double& operator[](std::size_t i) noexcept { return values[i]; }
  friend bool operator==(const ActionVector&, const ActionVector&) = default;
};

// Categorical encodings.
namespace codec {
constexpr double kMarket = -1.0, kAdd = 0.0, kCancel = 1.0;
constexpr double kBuy = -1.0, kSell = 1.0;
constexpr double kQtyRoundLot = -1.0, kQtyOdd = 1.0;
}  // namespace codec

struct CodecCounters {
  std::size_t clipped{0};
  std::size_t clamped_quantity{0};
};

/// Maps x in [min, max] to [-1, 1]; values outside are clipped and counted.
double scale(double x, const Range& r, CodecCounters* counters = nullptr) noexcept;
double unscale(double v, const Range& r) noexcept;

/// Nearest legal value; ties go to the value of smaller magnitude, then to
/// the smaller value.
double harden(double v, std::span<const double> legal) noexcept;

/// Replace yields two vectors: the cancel, then the add.
std::vector<ActionVector> encode(const Action& action, const ScalerBounds& bounds,
                                 CodecCounters* counters = nullptr);

/// Inverse scaling with rounding and categorical hardening. Cancel queue
/// positions are not part of the vector and are left at 0.
Action decode(const ActionVector& vector, const ScalerBounds& bounds, CodecCounters* counters = nullptr);

/// Draws a queue position from the beta-binomial over {0..len-1}.
std::size_t draw_queue_position(const BetaBinomialParams& model, std::size_t live_queue_length, Rng& rng);

/// decode() plus a queue position sized by the live queue at the target level.
Action decode(const ActionVector& vector, const ScalerBounds& bounds, const BetaBinomialParams& queue_model,
              const Book& book, Rng& rng, CodecCounters* counters = nullptr);

/// Scales V1, V5 and the spread; the other features pass through.
std::array<double, MarketStateVector::kSize> normalize_state(const MarketStateVector& state,
                                                             const ScalerBounds& bounds) noexcept;
std::vector<std::array<double, MarketStateVector::kSize>> normalize_window(const StateWindow& window,
                                                                           const ScalerBounds& bounds);

}  // namespace lobforge

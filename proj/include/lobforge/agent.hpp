#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "lobforge/market_state.hpp"
#include "lobforge/orderbook.hpp"
#include "lobforge/rng.hpp"
#include "lobforge/types.hpp"

namespace lobforge {

enum class ActionKind : std::uint8_t { AddLimit, Market, Cancel, Replace };

std::string_view to_string(ActionKind k) noexcept;

/// One trading action. Which fields are meaningful depends on `kind`:
///   AddLimit: side, depth, quantity
///   Market:   side, quantity
///   Cancel:   side, cancel_depth, queue_position
///   Replace:  side, cancel_depth, queue_position, depth (new), quantity (new)
/// Depth may be negative (inside or across the spread).
struct Action {
  ActionKind kind{ActionKind::AddLimit};
  Side side{Side::Bid};
  Ticks depth{0};
  Shares quantity{0};
  Ticks cancel_depth{0};
  std::size_t queue_position{0};

  static Action add_limit(Side side, Ticks depth, Shares quantity) {
    return {ActionKind::AddLimit, side, depth, quantity, 0, 0};
  }
  static Action market(Side side, Shares quantity) { return {ActionKind::Market, side, 0, quantity, 0, 0}; }
  static Action cancel(Side side, Ticks cancel_depth, std::size_t queue_position) {
    return {ActionKind::Cancel, side, 0, 0, cancel_depth, queue_position};
  }
  static Action replace(Side side, Ticks cancel_depth, std::size_t queue_position, Ticks new_depth,
                        Shares new_quantity) {
    return {ActionKind::Replace, side, new_depth, new_quantity, cancel_depth, queue_position};
  }

  bool uses_depth() const noexcept { return kind == ActionKind::AddLimit || kind == ActionKind::Replace; }
  bool uses_quantity() const noexcept { return kind != ActionKind::Cancel; }
  bool uses_cancel() const noexcept { return kind == ActionKind::Cancel || kind == ActionKind::Replace; }

  /// Copy with fields that do not apply to `kind` zeroed.
  Action normalized() const noexcept;

  friend bool operator==(const Action& a, const Action& b) noexcept {
    const Action x = a.normalized();
    const Action y = b.normalized();
    return x.kind == y.kind && x.side == y.side && x.depth == y.depth && x.quantity == y.quantity &&
           x.cancel_depth == y.cancel_depth && x.queue_position == y.queue_position;
  }
};

struct TimedAction {
  Action action;
  Nanos dt{1};
};

/// What a world agent may observe when asked for its next action.
struct MarketView {
  const StateWindow& window;
  const Book& book;
  Nanos now{0};
};

/// A world agent generates the whole market's order flow. Implementations
/// must be deterministic given the view and the generator state.
class WorldAgent {
 public:
  virtual ~WorldAgent() = default;
  virtual TimedAction next(const MarketView& view, Rng& rng) = 0;
  virtual std::string name() const = 0;
};

/// p = best_bid - depth (BID) or best_ask + depth (ASK).
std::optional<Ticks> depth_to_price(const Book& book, Side side, Ticks depth) noexcept;
constexpr Ticks price_to_depth(Ticks same_side_best, Side side, Ticks price) noexcept {
  return side == Side::Bid ? same_side_best - price : price - same_side_best;
}

struct GammaParams {
  double shape{1.0};
  double scale{1.0};

  double mean() const noexcept { return shape * scale; }
  double variance() const noexcept { return shape * scale * scale; }
};

class DegenerateDataError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

/// Inter-arrival delay in ns, floored at 1. Throws ValidationError for
/// non-positive parameters.
Nanos sample_interarrival(const GammaParams& params, Rng& rng);

/// Moment matching with the unbiased sample variance: shape = mean^2/var,
/// scale = var/mean. Non-positive samples are ignored. Throws
/// DegenerateDataError for fewer than two usable samples or zero variance.
GammaParams fit_gamma(std::span<const double> samples);

}  // namespace lobforge

#include "lobforge/action_codec.hpp"

#include <algorithm>
#include <cmath>

namespace lobforge {

double scale(double x, const Range& r, CodecCounters* counters) noexcept {
  double v = 2.0 * (x - r.min) / (r.max - r.min) - 1.0;
  if (v < -1.0 || v > 1.0) {
    if (counters) ++counters->clipped;
    v = std::clamp(v, -1.0, 1.0);
  }
  return v;
}

double unscale(double v, const Range& r) noexcept {
  return r.min + (std::clamp(v, -1.0, 1.0) + 1.0) * 0.5 * (r.max - r.min);
}

double harden(double v, std::span<const double> legal) noexcept {
  double best = legal.front();
  for (double c : legal) {
    const double dc = std::abs(v - c);
    const double db = std::abs(v - best);
    if (dc < db || (dc == db && (std::abs(c) < std::abs(best) || (std::abs(c) == std::abs(best) && c < best))))
      best = c;
  }
  return best;
}

namespace {

constexpr std::array<double, 3> kOrderTypes{codec::kMarket, codec::kAdd, codec::kCancel};
constexpr std::array<double, 2> kSides{codec::kBuy, codec::kSell};
constexpr std::array<double, 2> kQtyTypes{codec::kQtyRoundLot, codec::kQtyOdd};

double side_value(Side s) noexcept { return s == Side::Bid ? codec::kBuy : codec::kSell; }

void encode_quantity(ActionVector& v, Shares quantity, const ScalerBounds& b, CodecCounters* counters) {
  if (quantity % 100 == 0) {
    v[ActionVector::kQtyType] = codec::kQtyRoundLot;
    v[ActionVector::kQty100x] = scale(static_cast<double>(quantity / 100), b.qty_100x, counters);
  } else {
    v[ActionVector::kQtyType] = codec::kQtyOdd;
    v[ActionVector::kQtyX] = scale(static_cast<double>(quantity), b.qty_x, counters);
  }
}

ActionVector cancel_vector(const Action& a, const ScalerBounds& b, CodecCounters* counters) {
  ActionVector v;
  v[ActionVector::kOrderType] = codec::kCancel;
  v[ActionVector::kSide] = side_value(a.side);
  v[ActionVector::kCancelDepth] = scale(static_cast<double>(a.cancel_depth), b.cancel_depth, counters);
  return v;
}

ActionVector add_vector(const Action& a, const ScalerBounds& b, CodecCounters* counters) {
  ActionVector v;
  v[ActionVector::kOrderType] = codec::kAdd;
  v[ActionVector::kSide] = side_value(a.side);
  v[ActionVector::kDepth] = scale(static_cast<double>(a.depth), b.depth, counters);
  encode_quantity(v, a.quantity, b, counters);
  return v;
}

}  // namespace

std::vector<ActionVector> encode(const Action& action, const ScalerBounds& bounds, CodecCounters* counters) {
  switch (action.kind) {
    case ActionKind::AddLimit:
      return {add_vector(action, bounds, counters)};
    case ActionKind::Cancel:
      return {cancel_vector(action, bounds, counters)};
    case ActionKind::Replace:
      return {cancel_vector(action, bounds, counters), add_vector(action, bounds, counters)};
    case ActionKind::Market: {
      ActionVector v;
      v[ActionVector::kOrderType] = codec::kMarket;
      v[ActionVector::kSide] = side_value(action.side);
      encode_quantity(v, action.quantity, bounds, counters);
      return {v};
    }
  }
  return {};
}

Action decode(const ActionVector& vector, const ScalerBounds& bounds, CodecCounters* counters) {
  const double order_type = harden(vector[ActionVector::kOrderType], kOrderTypes);
  const Side side = harden(vector[ActionVector::kSide], kSides) == codec::kBuy ? Side::Bid : Side::Ask;

  if (order_type == codec::kCancel) {
    const auto depth = std::llround(unscale(vector[ActionVector::kCancelDepth], bounds.cancel_depth));
    return Action::cancel(side, depth, 0);
  }

  Shares quantity = 0;
  if (harden(vector[ActionVector::kQtyType], kQtyTypes) == codec::kQtyOdd) {
    quantity = std::llround(unscale(vector[ActionVector::kQtyX], bounds.qty_x));
    if (quantity <= 0) {
      quantity = 1;
      if (counters) ++counters->clamped_quantity;
    }
  } else {
    Shares lots = std::llround(unscale(vector[ActionVector::kQty100x], bounds.qty_100x));
    if (lots <= 0) {
      lots = 1;
      if (counters) ++counters->clamped_quantity;
    }
    quantity = 100 * lots;
  }

  if (order_type == codec::kMarket) return Action::market(side, quantity);
  const auto depth = std::llround(unscale(vector[ActionVector::kDepth], bounds.depth));
  return Action::add_limit(side, depth, quantity);
}

std::size_t draw_queue_position(const BetaBinomialParams& model, std::size_t live_queue_length, Rng& rng) {
  if (live_queue_length <= 1) return 0;
  return static_cast<std::size_t>(sample(model, static_cast<std::int64_t>(live_queue_length - 1), rng));
}

Action decode(const ActionVector& vector, const ScalerBounds& bounds, const BetaBinomialParams& queue_model,
              const Book& book, Rng& rng, CodecCounters* counters) {
  Action action = decode(vector, bounds, counters);
  if (action.kind == ActionKind::Cancel) {
    std::size_t length = 0;
    if (const auto price = book.depth_to_price(action.side, action.cancel_depth))
      length = book.queue_length(action.side, *price);
    action.queue_position = draw_queue_position(queue_model, length, rng);
  }
  return action;
}

std::array<double, MarketStateVector::kSize> normalize_state(const MarketStateVector& state,
                                                             const ScalerBounds& bounds) noexcept {
  auto v = state.to_array();
  v[feature::kV1] = scale(v[feature::kV1], bounds.volume1);
  v[feature::kV5] = scale(v[feature::kV5], bounds.volume5);
  v[feature::kSpread] = scale(v[feature::kSpread], bounds.spread);
  return v;
}

std::vector<std::array<double, MarketStateVector::kSize>> normalize_window(const StateWindow& window,
                                                                           const ScalerBounds& bounds) {
  std::vector<std::array<double, MarketStateVector::kSize>> out;
  for (const auto& s : window.states()) out.push_back(normalize_state(s, bounds));
  return out;
}

}  // namespace lobforge

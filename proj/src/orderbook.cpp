#include "lobforge/orderbook.hpp"

#include <algorithm>

namespace lobforge {

std::string_view to_string(BookStatus s) noexcept {
  switch (s) {
    case BookStatus::Ok: return "ok";
    case BookStatus::InvalidQuantity: return "invalid quantity";
    case BookStatus::InvalidPrice: return "invalid price";
    case BookStatus::NoLiquidity: return "no liquidity";
    case BookStatus::NoSuchLevel: return "no such level";
    case BookStatus::UndefinedReference: return "undefined reference price";
    case BookStatus::UnknownOrder: return "unknown order";
    case BookStatus::DuplicateId: return "duplicate order id";
  }
  return "unknown";
}

namespace {

template <typename Map>
std::vector<LevelView> top_levels(const Map& levels, std::size_t n) {
  std::vector<LevelView> out;
  out.reserve(std::min(n, levels.size()));
  for (const auto& [price, lvl] : levels) {
    if (out.size() == n) break;
    out.push_back({price, lvl.volume, lvl.orders.size()});
  }
  return out;
}

}  // namespace

OrderId Book::claim_id(std::optional<OrderId> requested) {
  if (!requested) return next_id_++;
  next_id_ = std::max(next_id_, *requested + 1);
  return *requested;
}

AddResult Book::add_limit(Side side, Ticks price, Shares quantity) {
  if (quantity <= 0) return {.status = BookStatus::InvalidQuantity};
  if (price <= 0) return {.status = BookStatus::InvalidPrice};
  return add_impl(claim_id(std::nullopt), side, price, quantity);
}

AddResult Book::add_limit_with_id(OrderId id, Side side, Ticks price, Shares quantity) {
  if (quantity <= 0) return {.status = BookStatus::InvalidQuantity};
  if (price <= 0) return {.status = BookStatus::InvalidPrice};
  if (id == 0 || locator_.contains(id)) return {.status = BookStatus::DuplicateId};
  return add_impl(claim_id(id), side, price, quantity);
}

AddResult Book::add_impl(OrderId id, Side side, Ticks price, Shares quantity) {
  AddResult result{.status = BookStatus::Ok, .id = id, .price = price};
  const std::uint64_t seq = next_seq_++;
  const Shares remaining = match(id, side, quantity, price, result.trades);
  if (remaining > 0) {
    auto rest = [&](auto& levels) {
      auto& lvl = levels[price];
      lvl.orders.push_back({id, side, price, remaining, seq});
      lvl.volume += remaining;
    };
    if (side == Side::Bid) rest(bids_); else rest(asks_);
    side_volume(side) += remaining;
    locator_.emplace(id, std::make_pair(side, price));
  }
  result.resting = remaining;
  return result;
}

MarketResult Book::market_order(Side side, Shares quantity) {
  if (quantity <= 0) return {.status = BookStatus::InvalidQuantity};
  return market_impl(claim_id(std::nullopt), side, quantity);
}

MarketResult Book::market_order_with_id(OrderId id, Side side, Shares quantity) {
  if (quantity <= 0) return {.status = BookStatus::InvalidQuantity};
  if (id == 0 || locator_.contains(id)) return {.status = BookStatus::DuplicateId};
  return market_impl(claim_id(id), side, quantity);
}

MarketResult Book::market_impl(OrderId id, Side side, Shares quantity) {
  MarketResult result{.status = BookStatus::Ok, .id = id};
  if (empty(opposite(side))) {
    result.status = BookStatus::NoLiquidity;
    result.unfilled = quantity;
    return result;
  }
  result.unfilled = match(id, side, quantity, std::nullopt, result.trades);
  return result;
}

Shares Book::match(OrderId aggressor_id, Side side, Shares quantity, std::optional<Ticks> limit,
                   std::vector<Trade>& trades) {
  auto sweep = [&](auto& levels) {
    while (quantity > 0 && !levels.empty()) {
      auto it = levels.begin();
      const Ticks price = it->first;
      if (limit && (side == Side::Bid ? price > *limit : price < *limit)) break;
      Level& lvl = it->second;
      while (quantity > 0 && !lvl.orders.empty()) {
        Order& resting = lvl.orders.front();
        const Shares fill = std::min(quantity, resting.quantity);
        trades.push_back({price, fill, side, resting.id, aggressor_id});
        last_trade_ = LastTrade{price, fill, side};
        quantity -= fill;
        resting.quantity -= fill;
        lvl.volume -= fill;
        side_volume(opposite(side)) -= fill;
        if (resting.quantity == 0) {
          locator_.erase(resting.id);
          lvl.orders.pop_front();
        }
      }
      if (lvl.orders.empty()) levels.erase(it);
    }
  };
  if (side == Side::Bid) sweep(asks_); else sweep(bids_);
  return quantity;
}

CancelResult Book::remove_at(Side side, Ticks price, std::size_t queue_position) {
  auto remove = [&](auto& levels) -> CancelResult {
    auto it = levels.find(price);
    if (it == levels.end()) return {.status = BookStatus::NoSuchLevel};
    Level& lvl = it->second;
    const std::size_t pos = std::min(queue_position, lvl.orders.size() - 1);
    CancelResult result{.status = BookStatus::Ok, .cancelled = lvl.orders[pos], .queue_position = pos};
    lvl.orders.erase(lvl.orders.begin() + static_cast<std::ptrdiff_t>(pos));
    lvl.volume -= result.cancelled.quantity;
    if (lvl.orders.empty()) levels.erase(it);
    return result;
  };
  CancelResult result = side == Side::Bid ? remove(bids_) : remove(asks_);
  if (result.ok()) {
    side_volume(side) -= result.cancelled.quantity;
    locator_.erase(result.cancelled.id);
  }
  return result;
}

CancelResult Book::cancel_at(Side side, Ticks cancel_depth, std::size_t queue_position) {
  const auto reference = best(side);
  if (!reference) return {.status = BookStatus::UndefinedReference};
  const Ticks price = side == Side::Bid ? *reference - cancel_depth : *reference + cancel_depth;
  return remove_at(side, price, queue_position);
}

CancelResult Book::cancel_order(OrderId id) {
  auto it = locator_.find(id);
  if (it == locator_.end()) return {.status = BookStatus::UnknownOrder};
  const auto [side, price] = it->second;
  const Level* lvl = level(side, price);
  std::size_t pos = 0;
  while (lvl->orders[pos].id != id) ++pos;
  return remove_at(side, price, pos);
}

ReplaceResult Book::replace(Side side, Ticks cancel_depth, std::size_t queue_position, Ticks new_depth,
                            Shares new_quantity) {
  if (new_quantity <= 0) return {.status = BookStatus::InvalidQuantity};
  CancelResult cancel = cancel_at(side, cancel_depth, queue_position);
  if (!cancel.ok()) return {.status = cancel.status};
  ReplaceResult result{.status = BookStatus::Ok, .cancel_applied = true, .cancelled = cancel.cancelled};
  const auto price = depth_to_price(side, new_depth);
  if (!price) {
    result.status = BookStatus::UndefinedReference;
    return result;
  }
  AddResult add = add_limit(side, *price, new_quantity);
  result.status = add.status;
  result.new_id = add.id;
  result.new_price = *price;
  result.trades = std::move(add.trades);
  return result;
}

ReplaceResult Book::replace_order(OrderId old_id, OrderId new_id, Ticks new_price, Shares new_quantity) {
  if (new_quantity <= 0) return {.status = BookStatus::InvalidQuantity};
  if (new_price <= 0) return {.status = BookStatus::InvalidPrice};
  if (new_id == 0 || (new_id != old_id && locator_.contains(new_id))) return {.status = BookStatus::DuplicateId};
  CancelResult cancel = cancel_order(old_id);
  if (!cancel.ok()) return {.status = cancel.status};
  AddResult add = add_limit_with_id(new_id, cancel.cancelled.side, new_price, new_quantity);
  ReplaceResult result{.status = add.status,
                       .cancel_applied = true,
                       .cancelled = cancel.cancelled,
                       .new_id = add.id,
                       .new_price = new_price,
                       .trades = std::move(add.trades)};
  return result;
}

LevelSnapshot Book::snapshot_levels(std::size_t n) const {
  LevelSnapshot snap;
  snap.bids = top_levels(bids_, n);
  snap.asks = top_levels(asks_, n);
  snap.bids_padded = snap.bids.size() < n;
  snap.asks_padded = snap.asks.size() < n;
  return snap;
}

std::optional<Ticks> Book::best_bid() const noexcept {
  if (bids_.empty()) return std::nullopt;
  return bids_.begin()->first;
}

std::optional<Ticks> Book::best_ask() const noexcept {
  if (asks_.empty()) return std::nullopt;
  return asks_.begin()->first;
}

std::optional<Ticks> Book::depth_to_price(Side side, Ticks depth) const noexcept {
  const auto reference = best(side);
  if (!reference) return std::nullopt;
  return side == Side::Bid ? *reference - depth : *reference + depth;
}

const Book::Level* Book::level(Side side, Ticks price) const {
  if (side == Side::Bid) {
    auto it = bids_.find(price);
    return it == bids_.end() ? nullptr : &it->second;
  }
  auto it = asks_.find(price);
  return it == asks_.end() ? nullptr : &it->second;
}

std::size_t Book::queue_length(Side side, Ticks price) const {
  const Level* lvl = level(side, price);
  return lvl ? lvl->orders.size() : 0;
}

const Order* Book::find(OrderId id) const {
  auto it = locator_.find(id);
  if (it == locator_.end()) return nullptr;
  const Level* lvl = level(it->second.first, it->second.second);
  for (const Order& o : lvl->orders)
    if (o.id == id) return &o;
  return nullptr;
}

}  // namespace lobforge

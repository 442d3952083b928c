#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lobforge/types.hpp"

namespace lobforge {

struct Order {
  OrderId id{0};
  Side side{Side::Bid};
  Ticks price{0};
  Shares quantity{0};
  std::uint64_t entry_seq{0};

  friend bool operator==(const Order&, const Order&) = default;
};

struct Trade {
  Ticks price{0};
  Shares quantity{0};
  Side aggressor{Side::Bid};
  OrderId resting_id{0};
  OrderId aggressor_id{0};

  friend bool operator==(const Trade&, const Trade&) = default;
};

struct LastTrade {
  Ticks price{0};
  Shares quantity{0};
  Side aggressor{Side::Bid};
};

enum class BookStatus : std::uint8_t {
  Ok,
  InvalidQuantity,
  InvalidPrice,
  NoLiquidity,
  NoSuchLevel,
  UndefinedReference,
  UnknownOrder,
  DuplicateId,
};

std::string_view to_string(BookStatus s) noexcept;

struct AddResult {
  BookStatus status{BookStatus::Ok};
  OrderId id{0};
  Ticks price{0};
  std::vector<Trade> trades;
  Shares resting{0};

  bool ok() const noexcept { return status == BookStatus::Ok; }
};

struct MarketResult {
  BookStatus status{BookStatus::Ok};
  OrderId id{0};
  std::vector<Trade> trades;
  Shares unfilled{0};

  bool ok() const noexcept { return status == BookStatus::Ok; }
};

struct CancelResult {
  BookStatus status{BookStatus::Ok};
  Order cancelled{};
  std::size_t queue_position{0};

  bool ok() const noexcept { return status == BookStatus::Ok; }
};

// status == Ok means both legs ran. A failed add after a successful cancel
// reports the add failure with cancel_applied set.
struct ReplaceResult {
  BookStatus status{BookStatus::Ok};
  bool cancel_applied{false};
  Order cancelled{};
  OrderId new_id{0};
  Ticks new_price{0};
  std::vector<Trade> trades;

  bool ok() const noexcept { return status == BookStatus::Ok; }
};

struct LevelView {
  Ticks price{0};
  Shares volume{0};
  std::size_t orders{0};

  friend bool operator==(const LevelView&, const LevelView&) = default;
};

struct LevelSnapshot {
  std::vector<LevelView> bids;  // best first
  std::vector<LevelView> asks;  // best first
  bool bids_padded{false};      // fewer than n levels existed
  bool asks_padded{false};
};

/// Two-sided limit order book with price-time priority. Prices are integer
/// ticks. Bid side is ordered descending, ask side ascending; each level is a
/// FIFO queue. Empty levels are erased immediately.
class Book {
 public:
  struct Level {
    std::deque<Order> orders;
    Shares volume{0};
  };
  using BidMap = std::map<Ticks, Level, std::greater<>>;
  using AskMap = std::map<Ticks, Level, std::less<>>;

  AddResult add_limit(Side side, Ticks price, Shares quantity);
  /// Replay entry point: uses the recorded order id.
  AddResult add_limit_with_id(OrderId id, Side side, Ticks price, Shares quantity);

  /// `side` is the aggressor: Bid buys from the ask side. Any remainder
  /// after the opposite side is exhausted is discarded.
  MarketResult market_order(Side side, Shares quantity);
  MarketResult market_order_with_id(OrderId id, Side side, Shares quantity);

  /// Removes the order at `queue_position` of the level `cancel_depth` ticks
  /// behind the same-side best quote. Out-of-range positions clamp to the
  /// back of the queue.
  CancelResult cancel_at(Side side, Ticks cancel_depth, std::size_t queue_position);
  CancelResult cancel_order(OrderId id);

  /// cancel_at followed by an add at `new_depth` from the same-side best
  /// quote after the cancel. The new order loses time priority.
  ReplaceResult replace(Side side, Ticks cancel_depth, std::size_t queue_position, Ticks new_depth,
                        Shares new_quantity);
  ReplaceResult replace_order(OrderId old_id, OrderId new_id, Ticks new_price, Shares new_quantity);

  LevelSnapshot snapshot_levels(std::size_t n) const;

  std::optional<Ticks> best_bid() const noexcept;
  std::optional<Ticks> best_ask() const noexcept;
  std::optional<Ticks> best(Side side) const noexcept {
    return side == Side::Bid ? best_bid() : best_ask();
  }

  /// Price implied by a signed depth from the same-side best quote.
  std::optional<Ticks> depth_to_price(Side side, Ticks depth) const noexcept;

  const Level* level(Side side, Ticks price) const;
  std::size_t queue_length(Side side, Ticks price) const;
  const Order* find(OrderId id) const;

  bool empty(Side side) const noexcept { return side == Side::Bid ? bids_.empty() : asks_.empty(); }
  bool empty() const noexcept { return bids_.empty() && asks_.empty(); }
  Shares volume(Side side) const noexcept { return side == Side::Bid ? bid_volume_ : ask_volume_; }
  Shares total_volume() const noexcept { return bid_volume_ + ask_volume_; }
  std::size_t order_count() const noexcept { return locator_.size(); }
  std::size_t level_count(Side side) const noexcept {
    return side == Side::Bid ? bids_.size() : asks_.size();
  }
  const std::optional<LastTrade>& last_trade() const noexcept { return last_trade_; }
  OrderId next_order_id() const noexcept { return next_id_; }

  const BidMap& bids() const noexcept { return bids_; }
  const AskMap& asks() const noexcept { return asks_; }

 private:
  OrderId claim_id(std::optional<OrderId> requested);
  AddResult add_impl(OrderId id, Side side, Ticks price, Shares quantity);
  MarketResult market_impl(OrderId id, Side side, Shares quantity);
  // Consumes opposite liquidity up to `limit` (no limit when nullopt).
  Shares match(OrderId aggressor_id, Side side, Shares quantity, std::optional<Ticks> limit,
               std::vector<Trade>& trades);
  CancelResult remove_at(Side side, Ticks price, std::size_t queue_position);
  Shares& side_volume(Side side) noexcept { return side == Side::Bid ? bid_volume_ : ask_volume_; }

  BidMap bids_;
  AskMap asks_;
  std::unordered_map<OrderId, std::pair<Side, Ticks>> locator_;
  Shares bid_volume_{0};
  Shares ask_volume_{0};
  OrderId next_id_{1};
  std::uint64_t next_seq_{1};
  std::optional<LastTrade> last_trade_;
};

}  // namespace lobforge

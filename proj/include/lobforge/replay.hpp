#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "lobforge/agent.hpp"
#include "lobforge/flow.hpp"
#include "lobforge/market_state.hpp"
#include "lobforge/orderbook.hpp"

namespace lobforge {

/// Book plus the event history and state window derived from it.
class Market {
 public:
  explicit Market(std::size_t window_depth = 5, std::optional<Ticks> fallback_reference = std::nullopt);

  Book& book() noexcept { return book_; }
  const Book& book() const noexcept { return book_; }
  const EventHistory& history() const noexcept { return history_; }
  const StateWindow& window() const noexcept { return window_; }

  /// Same-side best quote, else the last one seen on that side, else the
  /// fallback reference. Used to resolve depths when a side is empty.
  std::optional<Ticks> reference(Side side) const noexcept;

  /// Records one applied event: pushes its market-order sign and the new
  /// state into the history and window.
  void record_event(int sign);

 private:
  Book book_;
  EventHistory history_;
  StateWindow window_;
  std::optional<Ticks> last_best_[2];
  std::optional<Ticks> fallback_;
};

/// Outcome of applying one A/C/R/M record.
struct AppliedRecord {
  BookStatus status{BookStatus::Ok};
  /// The record expressed as a depth-form action against the pre-event book.
  Action action;
  bool depth_defined{true};
  std::size_t queue_length{0};  // cancel target queue length before removal
  OrderId order_id{0};          // new order (A, R) or market order id (M)
  Ticks price{0};               // limit price (A) or new price (R)
  std::optional<Order> cancelled;
  std::vector<Trade> trades;

  bool ok() const noexcept { return status == BookStatus::Ok; }
};

/// Replays recorded messages against a Market. Execution (E) records are
/// outputs of matching: they are compared with the executions the book
/// generated and mismatches are counted.
class FlowApplier {
 public:
  explicit FlowApplier(Market& market) : market_(market) {}

  /// nullopt for E records. A successful record is also recorded as an event.
  std::optional<AppliedRecord> apply(const FlowRecord& record);

  /// Flags generated executions never confirmed by an E record.
  void finish();

  std::size_t execution_mismatches() const noexcept { return mismatches_; }
  std::size_t rejected() const noexcept { return rejected_; }

 private:
  AppliedRecord apply_add(const FlowRecord& r);
  AppliedRecord apply_market(const FlowRecord& r);
  AppliedRecord apply_cancel(const FlowRecord& r);
  AppliedRecord apply_replace(const FlowRecord& r);
  void check_execution(const FlowRecord& r);
  void flush_pending();

  Market& market_;
  std::deque<Trade> pending_;
  std::size_t mismatches_{0};
  std::size_t rejected_{0};
};

/// Queue index of a resting order within its level.
std::size_t queue_index(const Book& book, const Order& order);

}  // namespace lobforge

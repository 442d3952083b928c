#include "lobforge/replay.hpp"

namespace lobforge {

Market::Market(std::size_t window_depth, std::optional<Ticks> fallback_reference)
    : window_(window_depth), fallback_(fallback_reference) {
  window_.push(build_state(book_, history_));
}

std::optional<Ticks> Market::reference(Side side) const noexcept {
  if (auto best = book_.best(side)) return best;
  if (last_best_[static_cast<int>(side)]) return last_best_[static_cast<int>(side)];
  return fallback_;
}

void Market::record_event(int sign) {
  history_.record(sign, book_);
  for (Side s : {Side::Bid, Side::Ask})
    if (auto best = book_.best(s)) last_best_[static_cast<int>(s)] = best;
  window_.push(build_state(book_, history_));
}

std::size_t queue_index(const Book& book, const Order& order) {
  const Book::Level* lvl = book.level(order.side, order.price);
  std::size_t pos = 0;
  while (lvl && pos < lvl->orders.size() && lvl->orders[pos].id != order.id) ++pos;
  return pos;
}

std::optional<AppliedRecord> FlowApplier::apply(const FlowRecord& record) {
  if (record.msg == MsgType::Execute) {
    check_execution(record);
    return std::nullopt;
  }
  flush_pending();
  AppliedRecord out;
  switch (record.msg) {
    case MsgType::Add: out = apply_add(record); break;
    case MsgType::Market: out = apply_market(record); break;
    case MsgType::Cancel: out = apply_cancel(record); break;
    case MsgType::Replace: out = apply_replace(record); break;
    case MsgType::Execute: break;
  }
  if (!out.ok()) {
    ++rejected_;
    return out;
  }
  pending_.insert(pending_.end(), out.trades.begin(), out.trades.end());
  const int sign = out.action.kind == ActionKind::Market ? market_order_sign(out.action.side) : 0;
  market_.record_event(sign);
  return out;
}

AppliedRecord FlowApplier::apply_add(const FlowRecord& r) {
  Book& book = market_.book();
  AppliedRecord out;
  const auto reference = market_.reference(*r.side);
  out.depth_defined = reference.has_value();
  out.action = Action::add_limit(*r.side, reference ? price_to_depth(*reference, *r.side, *r.price) : 0, *r.qty);
  AddResult add = book.add_limit_with_id(*r.order_id, *r.side, *r.price, *r.qty);
  out.status = add.status;
  out.order_id = add.id;
  out.price = *r.price;
  out.trades = std::move(add.trades);
  return out;
}

AppliedRecord FlowApplier::apply_market(const FlowRecord& r) {
  Book& book = market_.book();
  AppliedRecord out;
  out.action = Action::market(*r.side, *r.qty);
  MarketResult result = r.order_id ? book.market_order_with_id(*r.order_id, *r.side, *r.qty)
                                   : book.market_order(*r.side, *r.qty);
  // A market order into an empty side is still a recorded event.
  out.status = result.status == BookStatus::NoLiquidity ? BookStatus::Ok : result.status;
  out.order_id = result.id;
  out.trades = std::move(result.trades);
  return out;
}

AppliedRecord FlowApplier::apply_cancel(const FlowRecord& r) {
  Book& book = market_.book();
  AppliedRecord out;
  const Order* order = book.find(*r.ref_order_id);
  if (!order) {
    out.status = BookStatus::UnknownOrder;
    return out;
  }
  const Order target = *order;
  const Ticks best = *book.best(target.side);
  const std::size_t position = queue_index(book, target);
  out.queue_length = book.queue_length(target.side, target.price);
  out.action = Action::cancel(target.side, price_to_depth(best, target.side, target.price), position);
  CancelResult cancel = book.cancel_order(target.id);
  out.status = cancel.status;
  if (cancel.ok()) out.cancelled = cancel.cancelled;
  return out;
}

AppliedRecord FlowApplier::apply_replace(const FlowRecord& r) {
  Book& book = market_.book();
  AppliedRecord out;
  const Order* order = book.find(*r.ref_order_id);
  if (!order) {
    out.status = BookStatus::UnknownOrder;
    return out;
  }
  const Order target = *order;
  const Ticks best = *book.best(target.side);
  const std::size_t position = queue_index(book, target);
  out.queue_length = book.queue_length(target.side, target.price);
  CancelResult cancel = book.cancel_order(target.id);
  if (!cancel.ok()) {
    out.status = cancel.status;
    return out;
  }
  out.cancelled = cancel.cancelled;
  const auto reference = market_.reference(target.side);
  out.depth_defined = reference.has_value();
  const Ticks new_depth = reference ? price_to_depth(*reference, target.side, *r.new_price) : 0;
  out.action = Action::replace(target.side, price_to_depth(best, target.side, target.price), position, new_depth,
                               *r.new_qty);
  AddResult add = book.add_limit_with_id(*r.order_id, target.side, *r.new_price, *r.new_qty);
  out.status = add.status;
  out.order_id = add.id;
  out.price = *r.new_price;
  out.trades = std::move(add.trades);
  return out;
}

void FlowApplier::check_execution(const FlowRecord& r) {
  if (pending_.empty()) {
    ++mismatches_;
    return;
  }
  const Trade t = pending_.front();
  pending_.pop_front();
  const bool match = t.resting_id == *r.ref_order_id && t.quantity == *r.qty && (!r.price || *r.price == t.price) &&
                     (!r.order_id || *r.order_id == t.aggressor_id);
  if (!match) ++mismatches_;
}

void FlowApplier::flush_pending() {
  mismatches_ += pending_.size();
  pending_.clear();
}

void FlowApplier::finish() { flush_pending(); }

}  // namespace lobforge

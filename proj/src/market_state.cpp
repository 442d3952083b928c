#include "lobforge/market_state.hpp"

#include <algorithm>

namespace lobforge {

namespace {

template <typename Map>
Shares top_volume(const Map& levels, std::size_t n) {
  Shares total = 0;
  std::size_t taken = 0;
  for (auto it = levels.begin(); it != levels.end() && taken < n; ++it, ++taken)
    total += it->second.volume;
  return total;
}

}  // namespace

void EventHistory::record(int sign, const Book& book) {
  signs_.push_back(sign);
  ++events_;
  if (auto m = mid_price(book)) last_mid_ = *m;
  if (last_mid_) mids_.push_back(*last_mid_);
  if (auto s = spread(book)) last_spread_ = *s;
}

int EventHistory::sign_sum(std::size_t n) const noexcept {
  const std::size_t take = std::min(n, signs_.size());
  int sum = 0;
  for (std::size_t i = signs_.size() - take; i < signs_.size(); ++i) sum += signs_[i];
  return sum;
}

std::optional<double> mid_price(const Book& book) noexcept {
  const auto bid = book.best_bid();
  const auto ask = book.best_ask();
  if (!bid || !ask) return std::nullopt;
  return 0.5 * static_cast<double>(*bid + *ask);
}

std::optional<double> volume_imbalance(const Book& book, std::size_t levels) {
  const Shares bid = top_volume(book.bids(), levels);
  const Shares ask = top_volume(book.asks(), levels);
  if (bid + ask == 0) return std::nullopt;
  return static_cast<double>(bid) / static_cast<double>(bid + ask);
}

Shares absolute_volume(const Book& book, std::size_t levels) {
  return top_volume(book.bids(), levels) + top_volume(book.asks(), levels);
}

double order_sign_imbalance(const EventHistory& history, std::size_t n) {
  if (n == 0) return 0.0;
  return static_cast<double>(history.sign_sum(n)) / static_cast<double>(n);
}

std::optional<Ticks> spread(const Book& book) noexcept {
  const auto bid = book.best_bid();
  const auto ask = book.best_ask();
  if (!bid || !ask) return std::nullopt;
  return *ask - *bid;
}

ReturnValue price_return(const EventHistory& history, std::size_t n) {
  if (history.mid_count() < n + 1) return {0.0, true};
  return {history.mid(0) / history.mid(n) - 1.0, false};
}

MarketStateVector build_state(const Book& book, const EventHistory& history) {
  MarketStateVector s;
  if (auto i1 = volume_imbalance(book, 1)) {
    s.imbalance1 = *i1;
    s.imbalance5 = *volume_imbalance(book, 5);
  } else {
    s.flags |= MarketStateVector::kEmptyBook;
  }
  s.sign_imbalance128 = order_sign_imbalance(history, 128);
  s.sign_imbalance256 = order_sign_imbalance(history, 256);
  s.volume1 = static_cast<double>(absolute_volume(book, 1));
  s.volume5 = static_cast<double>(absolute_volume(book, 5));
  if (auto d = spread(book)) {
    s.spread = static_cast<double>(*d);
  } else {
    s.flags |= MarketStateVector::kOneSided;
    s.spread = static_cast<double>(history.last_spread().value_or(0));
  }
  s.return1 = price_return(history, 1).value;
  const ReturnValue r50 = price_return(history, 50);
  s.return50 = r50.value;
  if (r50.warmup) s.flags |= MarketStateVector::kReturnWarmup;
  return s;
}

StateWindow::StateWindow(std::size_t depth) : depth_(depth == 0 ? 1 : depth) {
  states_.reserve(depth_);
}

void StateWindow::push(const MarketStateVector& state) {
  if (states_.size() == depth_) states_.erase(states_.begin());
  states_.push_back(state);
}

std::vector<MarketStateVector> StateWindow::states() const {
  std::vector<MarketStateVector> out;
  if (states_.empty()) return out;
  out.reserve(depth_);
  out.insert(out.end(), depth_ - states_.size(), states_.front());
  out.insert(out.end(), states_.begin(), states_.end());
  return out;
}

std::vector<double> StateWindow::flatten() const {
  std::vector<double> out;
  out.reserve(depth_ * MarketStateVector::kSize);
  for (const auto& s : states()) {
    const auto a = s.to_array();
    out.insert(out.end(), a.begin(), a.end());
  }
  return out;
}

StateWindow push_state(StateWindow window, const MarketStateVector& state) {
  window.push(state);
  return window;
}

}  // namespace lobforge

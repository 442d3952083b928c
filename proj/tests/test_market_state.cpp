#include <random>

#include <gtest/gtest.h>

#include "lobforge/market_state.hpp"

using namespace lobforge;

namespace {

Book two_sided(Shares bid, Shares ask) {
  Book b;
  b.add_limit(Side::Bid, 10000, bid);
  b.add_limit(Side::Ask, 10002, ask);
  return b;
}

}  // namespace

TEST(MarketState, VolumeImbalance) {
  EXPECT_DOUBLE_EQ(*volume_imbalance(two_sided(100, 100), 1), 0.5);
  EXPECT_DOUBLE_EQ(*volume_imbalance(two_sided(300, 100), 1), 0.75);
  Book bid_only;
  bid_only.add_limit(Side::Bid, 10000, 100);
  EXPECT_DOUBLE_EQ(*volume_imbalance(bid_only, 5), 1.0);
  EXPECT_FALSE(volume_imbalance(Book{}, 1));
}

TEST(MarketState, AbsoluteVolume) {
  EXPECT_EQ(absolute_volume(Book{}, 5), 0);
  EXPECT_EQ(absolute_volume(two_sided(300, 100), 1), 400);

  Book b;
  const Shares bids[6] = {10, 20, 30, 40, 50, 60};
  const Shares asks[6] = {1, 2, 3, 4, 5, 6};
  for (int i = 0; i < 6; ++i) {
    b.add_limit(Side::Bid, 10000 - 2 * i, bids[i]);
    b.add_limit(Side::Ask, 10001 + i, asks[i]);
  }
  EXPECT_EQ(absolute_volume(b, 5), 10 + 20 + 30 + 40 + 50 + 1 + 2 + 3 + 4 + 5);
  EXPECT_EQ(absolute_volume(b, 1), 11);
  EXPECT_DOUBLE_EQ(*volume_imbalance(b, 5), 150.0 / 165.0);
}

TEST(MarketState, OrderSignImbalance) {
  Book b = two_sided(100, 100);
  EventHistory h;
  EXPECT_DOUBLE_EQ(order_sign_imbalance(h, 4), 0.0);
  for (int s : {1, -1, 0, 1}) h.record(s, b);
  EXPECT_DOUBLE_EQ(order_sign_imbalance(h, 4), 0.25);

  EventHistory sells;
  for (int i = 0; i < 128; ++i) sells.record(market_order_sign(Side::Ask), b);
  EXPECT_DOUBLE_EQ(order_sign_imbalance(sells, 128), 1.0);

  EventHistory quiet;
  for (int i = 0; i < 300; ++i) quiet.record(0, b);
  EXPECT_DOUBLE_EQ(order_sign_imbalance(quiet, 256), 0.0);
}

TEST(MarketState, OrderSignImbalanceIsAntisymmetric) {
  std::mt19937_64 gen(3);
  Book b = two_sided(100, 100);
  EventHistory h, flipped;
  for (int i = 0; i < 400; ++i) {
    const int s = static_cast<int>(gen() % 3) - 1;
    h.record(s, b);
    flipped.record(-s, b);
    for (std::size_t n : {1U, 5U, 128U, 256U})
      EXPECT_DOUBLE_EQ(order_sign_imbalance(flipped, n), -order_sign_imbalance(h, n));
  }
}

TEST(MarketState, Spread) {
  Book b;
  b.add_limit(Side::Bid, 10000, 1);
  EXPECT_FALSE(spread(b));
  b.add_limit(Side::Ask, 10002, 1);
  EXPECT_EQ(spread(b), 2);
}

TEST(MarketState, PriceReturn) {
  EventHistory flat;
  Book b = two_sided(10, 10);
  for (int i = 0; i < 60; ++i) flat.record(0, b);
  EXPECT_EQ(price_return(flat, 50).value, 0.0);
  EXPECT_FALSE(price_return(flat, 50).warmup);

  EventHistory short_history;
  short_history.record(0, b);
  EXPECT_TRUE(price_return(short_history, 1).warmup);
  EXPECT_EQ(price_return(short_history, 1).value, 0.0);

  // Mid moves from 10000 to 10100 over exactly 50 events.
  EventHistory h;
  Book m;
  m.add_limit(Side::Bid, 9999, 1);
  m.add_limit(Side::Ask, 10001, 1);
  h.record(0, m);
  for (int i = 1; i <= 50; ++i) {
    m.cancel_at(Side::Bid, 0, 0);
    m.cancel_at(Side::Ask, 0, 0);
    m.add_limit(Side::Ask, 10001 + 2 * i, 1);
    m.add_limit(Side::Bid, 9999 + 2 * i, 1);
    h.record(0, m);
  }
  EXPECT_NEAR(price_return(h, 50).value, 0.01, 1e-12);
  EXPECT_NEAR(price_return(h, 1).value, 10100.0 / 10098.0 - 1.0, 1e-15);
}

TEST(MarketState, BuildStateMatchesHandComputation) {
  Book b;
  b.add_limit(Side::Bid, 10000, 300);
  b.add_limit(Side::Bid, 9999, 100);
  b.add_limit(Side::Ask, 10003, 100);
  b.add_limit(Side::Ask, 10005, 300);
  EventHistory h;
  for (int i = 0; i < 10; ++i) h.record(i % 2 == 0 ? 1 : 0, b);
  const MarketStateVector s = build_state(b, h);
  const auto a = s.to_array();
  EXPECT_DOUBLE_EQ(a[feature::kI1], 0.75);
  EXPECT_DOUBLE_EQ(a[feature::kI5], 0.5);
  EXPECT_DOUBLE_EQ(a[feature::kO128], 5.0 / 128.0);
  EXPECT_DOUBLE_EQ(a[feature::kO256], 5.0 / 256.0);
  EXPECT_DOUBLE_EQ(a[feature::kV1], 400.0);
  EXPECT_DOUBLE_EQ(a[feature::kV5], 800.0);
  EXPECT_DOUBLE_EQ(a[feature::kSpread], 3.0);
  EXPECT_DOUBLE_EQ(a[feature::kR1], 0.0);
  EXPECT_DOUBLE_EQ(a[feature::kR50], 0.0);
  EXPECT_TRUE(s.flags & MarketStateVector::kReturnWarmup);
  EXPECT_EQ(build_state(b, h), s);
}

TEST(MarketState, OneSidedBookReusesSpread) {
  Book b = two_sided(10, 10);
  EventHistory h;
  h.record(0, b);
  b.cancel_at(Side::Ask, 0, 0);
  h.record(0, b);
  const MarketStateVector s = build_state(b, h);
  EXPECT_DOUBLE_EQ(s.spread, 2.0);
  EXPECT_DOUBLE_EQ(s.imbalance1, 1.0);
  EXPECT_TRUE(s.flags & MarketStateVector::kOneSided);

  const MarketStateVector empty = build_state(Book{}, EventHistory{});
  EXPECT_TRUE(empty.flags & MarketStateVector::kEmptyBook);
  EXPECT_DOUBLE_EQ(empty.imbalance1, 0.5);
}

TEST(MarketState, ImbalanceMatchesFlatRecount) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    Book b;
    std::vector<std::tuple<Side, Ticks, Shares>> flat;
    for (int i = 0; i < 30; ++i) {
      const Side side = gen() % 2 ? Side::Bid : Side::Ask;
      const Ticks price = side == Side::Bid ? 9990 + static_cast<Ticks>(gen() % 10) : 10001 + static_cast<Ticks>(gen() % 10);
      const Shares q = 1 + static_cast<Shares>(gen() % 100);
      b.add_limit(side, price, q);
      flat.emplace_back(side, price, q);
    }
    Ticks best_bid = 0, best_ask = 1 << 30;
    for (auto [s, p, q] : flat) {
      if (s == Side::Bid) best_bid = std::max(best_bid, p);
      else best_ask = std::min(best_ask, p);
    }
    Shares bid1 = 0, ask1 = 0;
    for (auto [s, p, q] : flat) {
      if (s == Side::Bid && p == best_bid) bid1 += q;
      if (s == Side::Ask && p == best_ask) ask1 += q;
    }
    if (bid1 + ask1 == 0) continue;
    EXPECT_DOUBLE_EQ(*volume_imbalance(b, 1), static_cast<double>(bid1) / static_cast<double>(bid1 + ask1));
  }
}

TEST(StateWindow, PadsWithEarliestState) {
  StateWindow w(3);
  MarketStateVector a;
  a.volume1 = 1;
  w.push(a);
  const auto states = w.states();
  ASSERT_EQ(states.size(), 3U);
  for (const auto& s : states) EXPECT_EQ(s, a);
  EXPECT_FALSE(w.warmed_up());
  EXPECT_EQ(w.flatten().size(), 27U);
}

TEST(StateWindow, FullWindowDropsOldest) {
  StateWindow w(2);
  MarketStateVector s[3];
  for (int i = 0; i < 3; ++i) {
    s[i].volume1 = i;
    w = push_state(w, s[i]);
  }
  const auto states = w.states();
  ASSERT_EQ(states.size(), 2U);
  EXPECT_EQ(states[0], s[1]);
  EXPECT_EQ(states[1], s[2]);
  EXPECT_EQ(w.latest(), s[2]);
}

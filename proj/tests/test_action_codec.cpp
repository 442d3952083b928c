#include <array>

#include <gtest/gtest.h>

#include "lobforge/action_codec.hpp"

using namespace lobforge;

namespace {

const ScalerBounds kBounds{};

}  // namespace

TEST(Codec, RoundLotQuantity) {
  const auto v = encode(Action::add_limit(Side::Bid, 2, 500), kBounds);
  ASSERT_EQ(v.size(), 1U);
  EXPECT_EQ(v[0][ActionVector::kQtyType], codec::kQtyRoundLot);
  EXPECT_DOUBLE_EQ(unscale(v[0][ActionVector::kQty100x], kBounds.qty_100x), 5.0);
  EXPECT_EQ(v[0][ActionVector::kOrderType], codec::kAdd);
  EXPECT_EQ(v[0][ActionVector::kSide], codec::kBuy);
}

TEST(Codec, OddLotQuantity) {
  const auto v = encode(Action::market(Side::Ask, 37), kBounds);
  ASSERT_EQ(v.size(), 1U);
  EXPECT_EQ(v[0][ActionVector::kQtyType], codec::kQtyOdd);
  EXPECT_NEAR(unscale(v[0][ActionVector::kQtyX], kBounds.qty_x), 37.0, 1e-9);
  EXPECT_EQ(v[0][ActionVector::kOrderType], codec::kMarket);
  EXPECT_EQ(v[0][ActionVector::kSide], codec::kSell);
}

TEST(Codec, ReplaceIsCancelThenAdd) {
  const Action r = Action::replace(Side::Ask, 3, 1, -1, 200);
  const auto v = encode(r, kBounds);
  ASSERT_EQ(v.size(), 2U);
  EXPECT_EQ(v[0][ActionVector::kOrderType], codec::kCancel);
  EXPECT_EQ(v[1][ActionVector::kOrderType], codec::kAdd);
  EXPECT_EQ(decode(v[0], kBounds), Action::cancel(Side::Ask, 3, 0));
  EXPECT_EQ(decode(v[1], kBounds), Action::add_limit(Side::Ask, -1, 200));
}

TEST(Codec, RoundTripOnGrid) {
  for (Side side : {Side::Bid, Side::Ask}) {
    for (Ticks d = -5; d <= 20; ++d)
      for (Shares q : {1, 37, 99, 100, 101, 500, 999, 2000}) {
        const Action add = Action::add_limit(side, d, q);
        ASSERT_EQ(decode(encode(add, kBounds)[0], kBounds), add);
        const Action mkt = Action::market(side, q);
        ASSERT_EQ(decode(encode(mkt, kBounds)[0], kBounds), mkt);
      }
    for (Ticks c = 0; c <= 20; ++c) {
      const Action can = Action::cancel(side, c, 0);
      ASSERT_EQ(decode(encode(can, kBounds)[0], kBounds), can);
    }
  }
}

TEST(Codec, HardensCategoricals) {
  ActionVector v;
  v[ActionVector::kOrderType] = 0.4;
  v[ActionVector::kSide] = 0.2;
  v[ActionVector::kQtyType] = 0.0;
  const Action a = decode(v, kBounds);
  EXPECT_EQ(a.kind, ActionKind::AddLimit);
  EXPECT_EQ(a.side, Side::Ask);
  v[ActionVector::kOrderType] = -0.6;
  v[ActionVector::kSide] = 0.0;
  const Action b = decode(v, kBounds);
  EXPECT_EQ(b.kind, ActionKind::Market);
  EXPECT_EQ(b.side, Side::Bid);
  EXPECT_EQ(b.quantity % 100, 0);

  const std::array<double, 3> types{-1.0, 0.0, 1.0};
  EXPECT_EQ(harden(0.5, types), 0.0);
  EXPECT_EQ(harden(-0.5, types), 0.0);
  EXPECT_EQ(harden(7.0, types), 1.0);
  const std::array<double, 2> sides{-1.0, 1.0};
  EXPECT_EQ(harden(0.0, sides), -1.0);
}

TEST(Codec, ClipsOutOfBoundsValues) {
  CodecCounters counters;
  const auto v = encode(Action::add_limit(Side::Bid, 0, 100 * 50), kBounds, &counters);
  EXPECT_EQ(v[0][ActionVector::kQty100x], 1.0);
  EXPECT_EQ(counters.clipped, 1U);
  EXPECT_EQ(decode(v[0], kBounds).quantity, 100 * static_cast<Shares>(kBounds.qty_100x.max));

  ActionVector big;
  big[ActionVector::kOrderType] = codec::kMarket;
  big[ActionVector::kQtyType] = codec::kQtyRoundLot;
  big[ActionVector::kQty100x] = 3.0;
  EXPECT_EQ(decode(big, kBounds).quantity, 100 * static_cast<Shares>(kBounds.qty_100x.max));
}

TEST(Codec, NonPositiveQuantityIsClampedAndCounted) {
  ScalerBounds b;
  b.qty_x = {-10.0, 10.0};
  ActionVector v;
  v[ActionVector::kOrderType] = codec::kMarket;
  v[ActionVector::kQtyType] = codec::kQtyOdd;
  v[ActionVector::kQtyX] = -1.0;
  CodecCounters counters;
  EXPECT_EQ(decode(v, b, &counters).quantity, 1);
  EXPECT_EQ(counters.clamped_quantity, 1U);
}

TEST(Codec, IrrelevantSlotsAreIgnored) {
  ActionVector add = encode(Action::add_limit(Side::Bid, 4, 300), kBounds)[0];
  add[ActionVector::kCancelDepth] = 0.77;
  EXPECT_EQ(decode(add, kBounds), Action::add_limit(Side::Bid, 4, 300));

  ActionVector can = encode(Action::cancel(Side::Ask, 2, 0), kBounds)[0];
  can[ActionVector::kDepth] = 0.9;
  can[ActionVector::kQtyX] = -0.3;
  can[ActionVector::kQtyType] = 1.0;
  EXPECT_EQ(decode(can, kBounds), Action::cancel(Side::Ask, 2, 0));
}

TEST(Codec, QueuePositionIsDrawnFromLiveQueue) {
  Book book;
  for (int i = 0; i < 6; ++i) book.add_limit(Side::Bid, 10000, 10);
  book.add_limit(Side::Bid, 9998, 10);
  const ActionVector v = encode(Action::cancel(Side::Bid, 0, 0), kBounds)[0];
  const BetaBinomialParams uniform{};
  Rng rng(1);
  std::array<int, 6> seen{};
  for (int i = 0; i < 6000; ++i) {
    const Action a = decode(v, kBounds, uniform, book, rng);
    ASSERT_LT(a.queue_position, 6U);
    seen[a.queue_position]++;
  }
  for (int c : seen) EXPECT_GT(c, 700);

  const ActionVector deep = encode(Action::cancel(Side::Bid, 2, 0), kBounds)[0];
  for (int i = 0; i < 100; ++i) EXPECT_EQ(decode(deep, kBounds, uniform, book, rng).queue_position, 0U);
}

TEST(Codec, NormalizesStateFeatures) {
  MarketStateVector s;
  s.volume1 = 2500.0;
  s.volume5 = 0.0;
  s.spread = 10.0;
  s.imbalance1 = 0.3;
  const auto v = normalize_state(s, kBounds);
  EXPECT_DOUBLE_EQ(v[feature::kV1], 0.0);
  EXPECT_DOUBLE_EQ(v[feature::kV5], -1.0);
  EXPECT_DOUBLE_EQ(v[feature::kSpread], 1.0);
  EXPECT_DOUBLE_EQ(v[feature::kI1], 0.3);
}

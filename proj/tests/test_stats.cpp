#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "lobforge/explicit_model.hpp"
#include "lobforge/sim_kernel.hpp"
#include "lobforge/stats.hpp"
#include "lobforge/synth.hpp"
#include "reference/naive_stats.hpp"

using namespace lobforge;

namespace {

constexpr Nanos kSec = kNanosPerSecond;
constexpr Nanos kMin = kNanosPerMinute;

FlowRecord add(Nanos ts, OrderId id, Side side, Ticks price, Shares qty) {
  FlowRecord r;
  r.ts = ts;
  r.msg = MsgType::Add;
  r.order_id = id;
  r.side = side;
  r.price = price;
  r.qty = qty;
  return r;
}

FlowRecord market(Nanos ts, OrderId id, Side side, Shares qty) {
  FlowRecord r;
  r.ts = ts;
  r.msg = MsgType::Market;
  r.order_id = id;
  r.side = side;
  r.qty = qty;
  return r;
}

FlowRecord execution(Nanos ts, OrderId resting, OrderId aggressor, Side side, Ticks price, Shares qty) {
  FlowRecord r;
  r.ts = ts;
  r.msg = MsgType::Execute;
  r.order_id = aggressor;
  r.ref_order_id = resting;
  r.side = side;
  r.price = price;
  r.qty = qty;
  return r;
}

FlowRecord cancel(Nanos ts, OrderId ref, Side side, Ticks price, Shares qty) {
  FlowRecord r;
  r.ts = ts;
  r.msg = MsgType::Cancel;
  r.ref_order_id = ref;
  r.side = side;
  r.price = price;
  r.qty = qty;
  return r;
}

void expect_summary_eq(const Summary& a, const Summary& b) {
  EXPECT_EQ(a.count, b.count);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.stddev, b.stddev);
  EXPECT_EQ(a.p5, b.p5);
  EXPECT_EQ(a.p50, b.p50);
  EXPECT_EQ(a.p75, b.p75);
  EXPECT_EQ(a.p95, b.p95);
}

void expect_profile_eq(const BucketProfile& got, const std::map<Nanos, Summary>& want) {
  ASSERT_EQ(got.starts.size(), want.size());
  std::size_t i = 0;
  for (const auto& [start, s] : want) {
    EXPECT_EQ(got.starts[i], start);
    expect_summary_eq(got.values[i], s);
    ++i;
  }
}

void expect_matches_naive(const std::vector<FlowRecord>& log) {
  StatsOptions opt;
  opt.max_lag = 5;
  opt.histogram_bins = 20;
  const StatsReport got = compute_stats(log, opt);
  const naive::Stats want = naive::stats(log, opt.max_lag, opt.histogram_bins);
  EXPECT_EQ(got.returns, want.returns);
  EXPECT_EQ(got.return_acf.has_value(), !want.acf.empty());
  if (got.return_acf) {
    EXPECT_EQ(*got.return_acf, want.acf);
  }
  EXPECT_EQ(got.squared_return_acf.has_value(), !want.squared_acf.empty());
  if (got.squared_return_acf) {
    EXPECT_EQ(*got.squared_return_acf, want.squared_acf);
  }
  if (!want.histogram_counts.empty()) {
    const Histogram& h = got.return_histogram;
    ASSERT_EQ(h.density.size(), want.histogram_counts.size());
    for (std::size_t i = 0; i < h.density.size(); ++i) {
      const double count = h.density[i] * static_cast<double>(h.count) * (h.edges[i + 1] - h.edges[i]);
      EXPECT_EQ(std::llround(count), static_cast<long long>(want.histogram_counts[i])) << "bin " << i;
    }
  }
  EXPECT_EQ(got.first_fill.seconds, want.first_fill);
  EXPECT_EQ(got.first_fill.limit_orders, want.limit_orders);
  EXPECT_EQ(got.add_volume_per_minute, want.add_volume_per_minute);
  EXPECT_EQ(got.depth_histogram[0], want.depth[0]);
  EXPECT_EQ(got.depth_histogram[1], want.depth[1]);
  expect_profile_eq(got.spread, want.spread);
  expect_profile_eq(got.l1_bid, want.l1_bid);
  expect_profile_eq(got.l1_ask, want.l1_ask);
  EXPECT_EQ(std::vector<double>(got.type_proportions.begin(), got.type_proportions.end()), want.type_proportions);
}

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::vector<double> x(n);
  for (double& v : x) v = normal(gen);
  return x;
}

}  // namespace

TEST(Percentile, NearestRank) {
  std::vector<double> v;
  for (int i = 1; i <= 20; ++i) v.push_back(i);
  EXPECT_EQ(percentile_nearest_rank(v, 0), 1.0);
  EXPECT_EQ(percentile_nearest_rank(v, 5), 1.0);
  EXPECT_EQ(percentile_nearest_rank(v, 50), 10.0);
  EXPECT_EQ(percentile_nearest_rank(v, 95), 19.0);
  EXPECT_EQ(percentile_nearest_rank(v, 100), 20.0);
  EXPECT_THROW(percentile_nearest_rank(std::vector<double>{}, 50), ValidationError);
  EXPECT_THROW(percentile_nearest_rank(v, 101), ValidationError);
}

TEST(Summary, HandValues) {
  const Summary s = summarize(std::vector<double>{4, 1, 3, 2});
  EXPECT_EQ(s.count, 4U);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.stddev, std::sqrt(5.0 / 3.0));
  EXPECT_EQ(s.p5, 1.0);
  EXPECT_EQ(s.p50, 2.0);
  EXPECT_EQ(s.p75, 3.0);
  EXPECT_EQ(s.p95, 4.0);
  const Summary one = summarize(std::vector<double>{7});
  EXPECT_EQ(one.stddev, 0.0);
  EXPECT_EQ(summarize(std::vector<double>{}).count, 0U);
}

TEST(Returns, FlatAndSingleStep) {
  const std::vector<double> flat(10, 100.5);
  for (double r : log_returns(flat)) EXPECT_EQ(r, 0.0);
  const auto r = log_returns(std::vector<double>{100.0, 101.0});
  ASSERT_EQ(r.size(), 1U);
  EXPECT_DOUBLE_EQ(r[0], std::log(1.01));
  EXPECT_THROW(log_returns(std::vector<double>{100.0}), ValidationError);
  EXPECT_THROW(log_returns(std::vector<double>{100.0, 0.0}), ValidationError);
}

TEST(Returns, BucketLastCarriesForward) {
  const std::vector<MidSample> mids{{5 * kSec, 100.0}, {50 * kSec, 101.0}, {2 * kMin + 1, 103.0}, {4 * kMin, 99.0}};
  EXPECT_EQ(bucket_last(mids, kMin), (std::vector<double>{101.0, 101.0, 103.0, 103.0, 99.0}));
  EXPECT_TRUE(bucket_last({}, kMin).empty());
  EXPECT_THROW(bucket_last(mids, 0), ValidationError);
}

TEST(Acf, AlternatingSeries) {
  std::vector<double> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = i % 2 == 0 ? 1.0 : -1.0;
  const auto a = acf(x, 2);
  EXPECT_EQ(a[0], 1.0);
  EXPECT_NEAR(a[1], -1.0, 2e-3);
  EXPECT_NEAR(a[2], 1.0, 3e-3);
}

TEST(Acf, WhiteNoiseStaysInsideBand) {
  const auto x = white_noise(10000, 17);
  const auto a = acf(x, 10);
  const double band = 3.0 / std::sqrt(10000.0);
  for (std::size_t k = 1; k <= 10; ++k) EXPECT_LT(std::abs(a[k]), band) << "lag " << k;
}

TEST(Acf, DegenerateAndShortSeries) {
  EXPECT_THROW(acf(std::vector<double>(50, 0.0), 5), DegenerateDataError);
  EXPECT_THROW(acf(std::vector<double>{1, 2, 3}, 3), ValidationError);
}

TEST(Histogram, IntegratesToOne) {
  const auto x = white_noise(5000, 3);
  const Histogram h = histogram(x, 40);
  EXPECT_EQ(h.edges.size(), 41U);
  EXPECT_NEAR(h.integral(), 1.0, 1e-12);
  const Histogram c = histogram(std::vector<double>(10, 2.0), 40);
  ASSERT_EQ(c.density.size(), 1U);
  EXPECT_DOUBLE_EQ(c.edges[1] - c.edges[0], 1.0);
  EXPECT_DOUBLE_EQ(c.integral(), 1.0);
}

TEST(FirstFill, HandLog) {
  const std::vector<FlowRecord> log{
      add(1 * kSec, 1, Side::Bid, 100, 10),
      add(1 * kSec, 2, Side::Ask, 103, 10),
      market(3 * kSec, 3, Side::Ask, 10),
      execution(3 * kSec, 1, 3, Side::Ask, 100, 10),
      cancel(4 * kSec, 2, Side::Ask, 103, 10),
      add(5 * kSec, 4, Side::Bid, 101, 5),
      add(6 * kSec, 5, Side::Ask, 101, 5),
      execution(6 * kSec, 4, 5, Side::Ask, 101, 5),
  };
  const FirstFillDistribution d = time_to_first_fill(log);
  EXPECT_EQ(d.seconds, (std::vector<double>{2.0, 1.0, 0.0}));
  EXPECT_EQ(d.limit_orders, 4U);
  EXPECT_EQ(d.never_filled, 1U);
  EXPECT_FALSE(d.empty);
  EXPECT_TRUE(time_to_first_fill(std::vector<FlowRecord>{add(0, 1, Side::Bid, 1, 1)}).empty);
}

TEST(TypeProportions, OnlyAdds) {
  std::vector<FlowRecord> log;
  for (OrderId i = 1; i <= 5; ++i) log.push_back(add(static_cast<Nanos>(i), i, Side::Bid, 100 - static_cast<Ticks>(i), 1));
  const auto p = type_proportions(log);
  EXPECT_EQ(p, (std::array<double, 4>{1.0, 0.0, 0.0, 0.0}));
}

TEST(TypeProportions, ReplaceAsCancelAdd) {
  std::vector<FlowRecord> log{add(0, 1, Side::Bid, 100, 5)};
  FlowRecord r;
  r.ts = 1;
  r.msg = MsgType::Replace;
  r.order_id = 2;
  r.ref_order_id = 1;
  r.new_price = 99;
  r.new_qty = 5;
  log.push_back(r);
  EXPECT_EQ(type_proportions(log), (std::array<double, 4>{0.5, 0.0, 0.0, 0.5}));
  EXPECT_EQ(type_proportions(log, true), (std::array<double, 4>{2.0 / 3.0, 0.0, 1.0 / 3.0, 0.0}));
}

TEST(Stats, ConstantSpreadAndFlatMid) {
  std::vector<FlowRecord> log{add(0, 1, Side::Bid, 100, 10), add(1, 2, Side::Ask, 102, 10)};
  for (OrderId i = 3; i < 13; ++i)
    log.push_back(add(static_cast<Nanos>(i) * 30 * kSec, i, i % 2 ? Side::Bid : Side::Ask, i % 2 ? 99 : 103, 7));
  const StatsReport rep = compute_stats(log);
  ASSERT_FALSE(rep.returns.empty());
  for (double r : rep.returns) EXPECT_EQ(r, 0.0);
  EXPECT_FALSE(rep.return_acf);
  EXPECT_FALSE(rep.warnings.empty());
  ASSERT_FALSE(rep.spread.values.empty());
  for (const Summary& s : rep.spread.values) {
    EXPECT_EQ(s.mean, 2.0);
    EXPECT_EQ(s.p5, 2.0);
    EXPECT_EQ(s.p95, 2.0);
  }
  EXPECT_EQ(rep.type_proportions, (std::array<double, 4>{1.0, 0.0, 0.0, 0.0}));
}

TEST(Stats, AddVolumePerMinute) {
  const std::vector<FlowRecord> log{add(10 * kSec, 1, Side::Bid, 100, 100), add(2 * kMin, 2, Side::Bid, 99, 200),
                                    add(2 * kMin + 5 * kSec, 3, Side::Ask, 105, 300)};
  const StatsReport rep = compute_stats(log);
  EXPECT_EQ(rep.add_volume_per_minute, (std::vector<double>{100.0, 0.0, 500.0}));
  EXPECT_EQ(rep.minute_starts, (std::vector<Nanos>{0, kMin, 2 * kMin}));
}

TEST(Stats, MatchesNaiveOnSyntheticLogs) {
  for (std::uint64_t seed : {1, 2, 3}) {
    SynthConfig cfg;
    cfg.actions = 4000;
    cfg.seed = seed;
    SCOPED_TRACE(seed);
    expect_matches_naive(synth_seed(cfg).records);
  }
}

TEST(Stats, MatchesNaiveOnSimulatedLog) {
  SynthConfig cfg;
  cfg.actions = 8000;
  const auto flow = synth_seed(cfg).records;
  const ExplicitModelParams model = fit_explicit_model(extract_dataset(flow, 5));
  SimConfig sim;
  sim.warmup_until = clock_time(9, 50);
  sim.session_end = clock_time(10, 5);
  ExplicitAgent agent(model);
  Kernel k(sim, flow, agent);
  k.run();
  expect_matches_naive(to_flow(k.log()));
}

TEST(Stats, WritesReportAndPlots) {
  SynthConfig cfg;
  cfg.actions = 3000;
  const StatsReport rep = compute_stats(synth_seed(cfg).records);
  const auto dir = std::filesystem::temp_directory_path() / "lobforge_stats_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  rep.write(dir);
  rep.write_plots(dir);
  for (const char* f : {"report.json", "returns.csv", "acf.csv", "time_to_first_fill.csv", "add_volume.csv",
                        "depth_histogram.csv", "spread.csv", "type_proportions.csv", "returns.svg", "spread.svg",
                        "type_proportions.svg"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  EXPECT_TRUE(rep.to_json().contains("type_proportions"));
  std::filesystem::remove_all(dir);
}

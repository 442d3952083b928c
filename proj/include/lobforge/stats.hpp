#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lobforge/flow.hpp"

namespace lobforge {

/// Nearest-rank percentile of sorted data: the value at rank ceil(p/100 * n).
double percentile_nearest_rank(std::span<const double> sorted, double p);

struct Summary {
  std::size_t count{0};
  double mean{0.0};
  double stddev{0.0};  // sample (n - 1); 0 for a single value
  double p5{0.0};
  double p50{0.0};
  double p75{0.0};
  double p95{0.0};
};

/// All zeros for empty input.
Summary summarize(std::span<const double> values);
nlohmann::json to_json(const Summary& s);

struct MidSample {
  Nanos ts{0};
  double mid{0.0};
};

/// ln(m_k / m_{k-1}) over consecutive bucket mids. Throws ValidationError for
/// fewer than two mids or a non-positive mid.
std::vector<double> log_returns(std::span<const double> bucket_mids);

/// Last mid in each bucket [origin + k*bucket, origin + (k+1)*bucket),
/// carried forward across empty buckets, from the first to the last sample.
std::vector<double> bucket_last(std::span<const MidSample> mids, Nanos bucket, Nanos origin = 0);

/// Sample autocorrelation at lags 0..max_lag, biased (1/n) normalization.
/// Throws ValidationError when size <= max_lag and DegenerateDataError
/// ("degenerate series") for zero variance.
std::vector<double> acf(std::span<const double> series, std::size_t max_lag);

struct Histogram {
  std::vector<double> edges;    // bins + 1
  std::vector<double> density;  // sum(density * width) == 1 when non-empty
  std::size_t count{0};

  double integral() const;
  nlohmann::json to_json() const;
};

/// Equal-width bins over [min, max]; a constant sample gets a unit-width bin.
Histogram histogram(std::span<const double> values, std::size_t bins);

struct FirstFillDistribution {
  std::vector<double> seconds;  // one per limit order that ever filled
  std::size_t limit_orders{0};
  std::size_t never_filled{0};
  bool empty{true};
  Summary summary;
};

/// Placement to first execution for every ADD and REPLACE-created order.
/// Marketable limits fill at 0 s. Orders never filled are only counted.
FirstFillDistribution time_to_first_fill(std::span<const FlowRecord> log);

/// Proportions in ActionKind order (LO, MO, CAN, REP). With
/// `replace_as_cancel_add` a replace counts as one cancel and one add.
std::array<double, 4> type_proportions(std::span<const FlowRecord> log, bool replace_as_cancel_add = false);

/// Book state after each applied non-execution record.
struct EventPoint {
  Nanos ts{0};
  MsgType msg{MsgType::Add};
  Side side{Side::Bid};
  Shares qty{0};
  std::optional<Ticks> add_depth;  // ADD only
  std::optional<Ticks> best_bid;
  std::optional<Ticks> best_ask;
  Shares l1_bid{0};
  Shares l1_ask{0};
};

struct Timeline {
  std::vector<EventPoint> points;
  std::size_t rejected{0};
  std::size_t execution_mismatches{0};
};

/// Replays the log on an empty book.
Timeline replay_timeline(std::span<const FlowRecord> log);

struct BucketProfile {
  std::vector<Nanos> starts;
  std::vector<Summary> values;

  nlohmann::json to_json() const;
};

struct StatsOptions {
  Nanos bucket{kNanosPerMinute};
  std::size_t max_lag{20};
  std::size_t histogram_bins{50};
  /// Events before this time only build the book.
  std::optional<Nanos> from;
  bool replace_as_cancel_add{false};
};

struct StatsReport {
  std::vector<double> returns;
  Histogram return_histogram;
  std::optional<std::vector<double>> return_acf;
  std::optional<std::vector<double>> squared_return_acf;
  FirstFillDistribution first_fill;
  std::vector<Nanos> minute_starts;
  std::vector<double> add_volume_per_minute;
  Summary add_volume;
  std::array<std::map<Ticks, double>, 2> depth_histogram;  // per side, signed depth -> share
  BucketProfile spread;
  BucketProfile l1_bid;
  BucketProfile l1_ask;
  std::array<double, 4> type_proportions{};
  std::size_t events{0};
  std::size_t rejected{0};
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  /// report.json plus one CSV per metric.
  void write(const std::filesystem::path& dir) const;
  /// SVG charts of the main metrics.
  void write_plots(const std::filesystem::path& dir) const;
};

StatsReport compute_stats(std::span<const FlowRecord> log, const StatsOptions& options = {});

}  // namespace lobforge

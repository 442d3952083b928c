#include "lobforge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "lobforge/agent.hpp"
#include "lobforge/replay.hpp"

namespace lobforge {

double percentile_nearest_rank(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ValidationError("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw ValidationError("percentile must be in [0, 100]");
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * n / 100.0 - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  s.p5 = percentile_nearest_rank(sorted, 5);
  s.p50 = percentile_nearest_rank(sorted, 50);
  s.p75 = percentile_nearest_rank(sorted, 75);
  s.p95 = percentile_nearest_rank(sorted, 95);
  return s;
}

nlohmann::json to_json(const Summary& s) {
  return {{"count", s.count}, {"mean", s.mean}, {"std", s.stddev}, {"p5", s.p5},
          {"p50", s.p50},     {"p75", s.p75},   {"p95", s.p95}};
}

std::vector<double> log_returns(std::span<const double> bucket_mids) {
  if (bucket_mids.size() < 2) throw ValidationError("log returns need at least two buckets");
  std::vector<double> out;
  out.reserve(bucket_mids.size() - 1);
  for (std::size_t k = 0; k < bucket_mids.size(); ++k) {
    if (!(bucket_mids[k] > 0.0)) throw ValidationError("log returns need positive mids");
    if (k > 0) out.push_back(std::log(bucket_mids[k] / bucket_mids[k - 1]));
  }
  return out;
}

namespace {

Nanos bucket_index(Nanos ts, Nanos bucket, Nanos origin) {
  const Nanos d = ts - origin;
  return d >= 0 ? d / bucket : -((-d + bucket - 1) / bucket);
}

}  // namespace

std::vector<double> bucket_last(std::span<const MidSample> mids, Nanos bucket, Nanos origin) {
  if (bucket <= 0) throw ValidationError("bucket must be positive");
  std::vector<double> out;
  if (mids.empty()) return out;
  const Nanos first = bucket_index(mids.front().ts, bucket, origin);
  for (const MidSample& m : mids) {
    const auto k = static_cast<std::size_t>(bucket_index(m.ts, bucket, origin) - first);
    if (k < out.size()) {
      out[k] = m.mid;
    } else {
      const double carry = out.empty() ? m.mid : out.back();
      out.resize(k, carry);
      out.push_back(m.mid);
    }
  }
  return out;
}

std::vector<double> acf(std::span<const double> series, std::size_t max_lag) {
  const std::size_t n = series.size();
  if (n <= max_lag) throw ValidationError("series of length " + std::to_string(n) + " is too short for lag " +
                                          std::to_string(max_lag));
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  if (*lo == *hi) throw DegenerateDataError("degenerate series");
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  double c0 = 0.0;
  for (double x : series) c0 += (x - mean) * (x - mean);
  if (!(c0 > 0.0)) throw DegenerateDataError("degenerate series");
  std::vector<double> out(max_lag + 1);
  out[0] = 1.0;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double c = 0.0;
    for (std::size_t t = k; t < n; ++t) c += (series[t] - mean) * (series[t - k] - mean);
    out[k] = c / c0;
  }
  return out;
}

double Histogram::integral() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) sum += density[i] * (edges[i + 1] - edges[i]);
  return sum;
}

nlohmann::json Histogram::to_json() const { return {{"edges", edges}, {"density", density}, {"count", count}}; }

Histogram histogram(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw ValidationError("histogram needs at least one bin");
  Histogram h;
  h.count = values.size();
  if (values.empty()) return h;
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it, hi = *hi_it;
  if (lo == hi) {
    bins = 1;
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
  h.edges.back() = hi;
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    auto i = static_cast<std::size_t>((v - lo) / width);
    counts[std::min(i, bins - 1)]++;
  }
  h.density.resize(bins);
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < bins; ++i)
    h.density[i] = static_cast<double>(counts[i]) / (n * (h.edges[i + 1] - h.edges[i]));
  return h;
}

FirstFillDistribution time_to_first_fill(std::span<const FlowRecord> log) {
  FirstFillDistribution d;
  std::unordered_map<OrderId, Nanos> open;
  auto fill = [&](OrderId id, Nanos ts) {
    auto it = open.find(id);
    if (it == open.end()) return;
    d.seconds.push_back(static_cast<double>(ts - it->second) / static_cast<double>(kNanosPerSecond));
    open.erase(it);
  };
  for (const FlowRecord& r : log) {
    switch (r.msg) {
      case MsgType::Add:
      case MsgType::Replace:
        if (r.order_id) {
          open.emplace(*r.order_id, r.ts);
          ++d.limit_orders;
        }
        break;
      case MsgType::Execute:
        if (r.ref_order_id) fill(*r.ref_order_id, r.ts);
        if (r.order_id) fill(*r.order_id, r.ts);
        break;
      default:
        break;
    }
  }
  d.never_filled = open.size();
  d.empty = d.seconds.empty();
  d.summary = summarize(d.seconds);
  return d;
}

std::array<double, 4> type_proportions(std::span<const FlowRecord> log, bool replace_as_cancel_add) {
  std::array<double, 4> counts{};
  for (const FlowRecord& r : log) {
    switch (r.msg) {
      case MsgType::Add:
        counts[0] += 1;
        break;
      case MsgType::Market:
        counts[1] += 1;
        break;
      case MsgType::Cancel:
        counts[2] += 1;
        break;
      case MsgType::Replace:
        if (replace_as_cancel_add) {
          counts[0] += 1;
          counts[2] += 1;
        } else {
          counts[3] += 1;
        }
        break;
      case MsgType::Execute:
        break;
    }
  }
  const double total = counts[0] + counts[1] + counts[2] + counts[3];
  if (total > 0)
    for (double& c : counts) c /= total;
  return counts;
}

Timeline replay_timeline(std::span<const FlowRecord> log) {
  Timeline tl;
  Market market(1);
  FlowApplier applier(market);
  const Book& book = market.book();
  for (const FlowRecord& r : log) {
    const auto res = applier.apply(r);
    if (!res || !res->ok()) continue;
    EventPoint p;
    p.ts = r.ts;
    p.msg = r.msg;
    p.side = r.side.value_or(Side::Bid);
    p.qty = r.msg == MsgType::Replace ? r.new_qty.value_or(0) : r.qty.value_or(0);
    if (r.msg == MsgType::Add && res->depth_defined) p.add_depth = res->action.depth;
    p.best_bid = book.best_bid();
    p.best_ask = book.best_ask();
    if (p.best_bid) p.l1_bid = book.level(Side::Bid, *p.best_bid)->volume;
    if (p.best_ask) p.l1_ask = book.level(Side::Ask, *p.best_ask)->volume;
    tl.points.push_back(p);
  }
  applier.finish();
  tl.rejected = applier.rejected();
  tl.execution_mismatches = applier.execution_mismatches();
  return tl;
}

nlohmann::json BucketProfile::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < starts.size(); ++i) {
    nlohmann::json row = lobforge::to_json(values[i]);
    row["start"] = format_clock_time(starts[i]);
    rows.push_back(row);
  }
  return rows;
}

namespace {

BucketProfile profile(std::span<const EventPoint> points, Nanos bucket,
                      const std::function<std::optional<double>(const EventPoint&)>& sample) {
  BucketProfile out;
  std::map<Nanos, std::vector<double>> samples;
  for (const EventPoint& p : points)
    if (const auto v = sample(p)) samples[bucket_index(p.ts, bucket, 0) * bucket].push_back(*v);
  for (const auto& [start, values] : samples) {
    out.starts.push_back(start);
    out.values.push_back(summarize(values));
  }
  return out;
}

}  // namespace

StatsReport compute_stats(std::span<const FlowRecord> log, const StatsOptions& options) {
  if (options.bucket <= 0) throw ValidationError("bucket must be positive");
  if (options.histogram_bins == 0) throw ValidationError("histogram needs at least one bin");
  StatsReport rep;
  const Timeline tl = replay_timeline(log);
  rep.rejected = tl.rejected;
  if (tl.rejected) rep.warnings.push_back(std::to_string(tl.rejected) + " records did not apply to the book");
  if (tl.execution_mismatches)
    rep.warnings.push_back(std::to_string(tl.execution_mismatches) + " execution records did not match the book");

  const Nanos from = options.from.value_or(std::numeric_limits<Nanos>::min());
  auto first_point = std::lower_bound(tl.points.begin(), tl.points.end(), from,
                                      [](const EventPoint& p, Nanos t) { return p.ts < t; });
  const std::span<const EventPoint> points(first_point, tl.points.end());
  auto first_record = std::lower_bound(log.begin(), log.end(), from,
                                       [](const FlowRecord& r, Nanos t) { return r.ts < t; });
  const std::span<const FlowRecord> window(first_record, log.end());
  rep.events = points.size();

  std::vector<MidSample> mids;
  for (const EventPoint& p : points)
    if (p.best_bid && p.best_ask) mids.push_back({p.ts, 0.5 * static_cast<double>(*p.best_bid + *p.best_ask)});
  const std::vector<double> bucket_mids = bucket_last(mids, options.bucket);
  if (bucket_mids.size() >= 2) {
    rep.returns = log_returns(bucket_mids);
    rep.return_histogram = histogram(rep.returns, options.histogram_bins);
    std::vector<double> squared(rep.returns.size());
    std::transform(rep.returns.begin(), rep.returns.end(), squared.begin(), [](double r) { return r * r; });
    auto try_acf = [&](const std::vector<double>& series, const char* what) -> std::optional<std::vector<double>> {
      try {
        return acf(series, options.max_lag);
      } catch (const std::exception& e) {
        rep.warnings.push_back(std::string(what) + ": " + e.what());
        return std::nullopt;
      }
    };
    rep.return_acf = try_acf(rep.returns, "return autocorrelation");
    rep.squared_return_acf = try_acf(squared, "squared return autocorrelation");
  } else {
    rep.warnings.push_back("fewer than two buckets with a two-sided book; no returns");
  }

  rep.first_fill = time_to_first_fill(window);

  if (!points.empty()) {
    const Nanos first = bucket_index(points.front().ts, options.bucket, 0);
    const Nanos last = bucket_index(points.back().ts, options.bucket, 0);
    rep.add_volume_per_minute.assign(static_cast<std::size_t>(last - first + 1), 0.0);
    for (Nanos k = first; k <= last; ++k) rep.minute_starts.push_back(k * options.bucket);
    for (const EventPoint& p : points)
      if (p.msg == MsgType::Add)
        rep.add_volume_per_minute[static_cast<std::size_t>(bucket_index(p.ts, options.bucket, 0) - first)] +=
            static_cast<double>(p.qty);
  }
  rep.add_volume = summarize(rep.add_volume_per_minute);

  std::array<std::size_t, 2> depth_totals{};
  for (const EventPoint& p : points) {
    if (!p.add_depth) continue;
    const auto s = static_cast<std::size_t>(p.side);
    rep.depth_histogram[s][*p.add_depth] += 1.0;
    ++depth_totals[s];
  }
  for (std::size_t s = 0; s < 2; ++s)
    for (auto& [depth, share] : rep.depth_histogram[s]) share /= static_cast<double>(depth_totals[s]);

  rep.spread = profile(points, options.bucket, [](const EventPoint& p) -> std::optional<double> {
    if (p.best_bid && p.best_ask) return static_cast<double>(*p.best_ask - *p.best_bid);
    return std::nullopt;
  });
  rep.l1_bid = profile(points, options.bucket,
                       [](const EventPoint& p) -> std::optional<double> { return static_cast<double>(p.l1_bid); });
  rep.l1_ask = profile(points, options.bucket,
                       [](const EventPoint& p) -> std::optional<double> { return static_cast<double>(p.l1_ask); });
  rep.type_proportions = type_proportions(window, options.replace_as_cancel_add);
  return rep;
}

namespace {

constexpr const char* kTypeNames[4] = {"LO", "MO", "CAN", "REP"};

nlohmann::json optional_series(const std::optional<std::vector<double>>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write " + path.string());
  out.precision(17);
  return out;
}

}  // namespace

nlohmann::json StatsReport::to_json() const {
  nlohmann::json depth = nlohmann::json::object();
  for (Side side : {Side::Bid, Side::Ask}) {
    nlohmann::json h = nlohmann::json::object();
    for (const auto& [d, share] : depth_histogram[static_cast<std::size_t>(side)]) h[std::to_string(d)] = share;
    depth[std::string(to_string(side))] = h;
  }
  nlohmann::json types = nlohmann::json::object();
  for (std::size_t i = 0; i < 4; ++i) types[kTypeNames[i]] = type_proportions[i];
  nlohmann::json minutes = nlohmann::json::array();
  for (Nanos t : minute_starts) minutes.push_back(format_clock_time(t));
  return {{"events", events},
          {"rejected", rejected},
          {"warnings", warnings},
          {"returns", returns},
          {"return_histogram", return_histogram.to_json()},
          {"return_acf", optional_series(return_acf)},
          {"squared_return_acf", optional_series(squared_return_acf)},
          {"time_to_first_fill",
           {{"limit_orders", first_fill.limit_orders},
            {"filled", first_fill.seconds.size()},
            {"never_filled", first_fill.never_filled},
            {"empty", first_fill.empty},
            {"summary", lobforge::to_json(first_fill.summary)}}},
          {"add_volume_per_minute", {{"minutes", minutes}, {"volume", add_volume_per_minute}}},
          {"add_volume", lobforge::to_json(add_volume)},
          {"depth_histogram", depth},
          {"spread", spread.to_json()},
          {"l1_bid", l1_bid.to_json()},
          {"l1_ask", l1_ask.to_json()},
          {"type_proportions", types}};
}

void StatsReport::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  open_out(dir / "report.json") << to_json().dump(2) << '\n';
  {
    auto out = open_out(dir / "returns.csv");
    out << "bucket,log_return\n";
    for (std::size_t i = 0; i < returns.size(); ++i) out << i + 1 << ',' << returns[i] << '\n';
  }
  {
    auto out = open_out(dir / "return_histogram.csv");
    out << "left,right,density\n";
    for (std::size_t i = 0; i < return_histogram.density.size(); ++i)
      out << return_histogram.edges[i] << ',' << return_histogram.edges[i + 1] << ',' << return_histogram.density[i]
          << '\n';
  }
  {
    auto out = open_out(dir / "acf.csv");
    out << "lag,acf,squared_acf\n";
    const std::size_t n = std::max(return_acf ? return_acf->size() : 0, squared_return_acf ? squared_return_acf->size() : 0);
    for (std::size_t k = 0; k < n; ++k) {
      out << k << ',';
      if (return_acf) out << (*return_acf)[k];
      out << ',';
      if (squared_return_acf) out << (*squared_return_acf)[k];
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / "time_to_first_fill.csv");
    out << "seconds\n";
    for (double s : first_fill.seconds) out << s << '\n';
  }
  {
    auto out = open_out(dir / "add_volume.csv");
    out << "minute,volume\n";
    for (std::size_t i = 0; i < minute_starts.size(); ++i)
      out << format_clock_time(minute_starts[i]) << ',' << add_volume_per_minute[i] << '\n';
  }
  {
    auto out = open_out(dir / "depth_histogram.csv");
    out << "side,depth,share\n";
    for (Side side : {Side::Bid, Side::Ask})
      for (const auto& [d, share] : depth_histogram[static_cast<std::size_t>(side)])
        out << to_string(side) << ',' << d << ',' << share << '\n';
  }
  auto write_profile = [&](const char* name, const BucketProfile& p) {
    auto out = open_out(dir / name);
    out << "bucket,count,mean,p5,p95\n";
    for (std::size_t i = 0; i < p.starts.size(); ++i)
      out << format_clock_time(p.starts[i]) << ',' << p.values[i].count << ',' << p.values[i].mean << ','
          << p.values[i].p5 << ',' << p.values[i].p95 << '\n';
  };
  write_profile("spread.csv", spread);
  write_profile("l1_bid.csv", l1_bid);
  write_profile("l1_ask.csv", l1_ask);
  {
    auto out = open_out(dir / "type_proportions.csv");
    out << "type,proportion\n";
    for (std::size_t i = 0; i < 4; ++i) out << kTypeNames[i] << ',' << type_proportions[i] << '\n';
  }
}

}  // namespace lobforge

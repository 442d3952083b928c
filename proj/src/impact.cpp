#include "lobforge/impact.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include <spdlog/spdlog.h>

#include "lobforge/stats.hpp"

namespace lobforge {

std::string_view to_string(Direction d) noexcept { return d == Direction::Buy ? "BUY" : "SELL"; }

Direction parse_direction(std::string_view text) {
  if (text == "buy" || text == "BUY") return Direction::Buy;
  if (text == "sell" || text == "SELL") return Direction::Sell;
  throw ValidationError("direction must be buy or sell, got '" + std::string(text) + "'");
}

void PovSpec::validate(const SimConfig& config, bool allow_zero) const {
  if (!(lambda <= 1.0) || lambda < 0.0 || (lambda == 0.0 && !allow_zero))
    throw ValidationError("lambda must be in (0, 1]");
  if (slice <= 0) throw ValidationError("slice interval must be positive");
  if (window_end <= window_start) throw ValidationError("POV window is empty");
  if (window_start < config.warmup_until || window_end > config.session_end)
    throw ValidationError("POV window " + format_clock_time(window_start) + "-" + format_clock_time(window_end) +
                          " is outside the simulated session " + format_clock_time(config.warmup_until) + "-" +
                          format_clock_time(config.session_end));
  if (reference_volume && *reference_volume < 0) throw ValidationError("reference volume must be non-negative");
}

std::size_t PovSpec::slice_count() const noexcept {
  return static_cast<std::size_t>((window_end - window_start + slice - 1) / slice);
}

nlohmann::json PovSpec::to_json() const {
  nlohmann::json j{{"lambda", lambda},
                   {"direction", to_string(direction)},
                   {"window_start", format_clock_time(window_start)},
                   {"window_end", format_clock_time(window_end)},
                   {"slice_ns", slice},
                   {"slices", slice_count()}};
  j["reference_volume"] = reference_volume ? nlohmann::json(*reference_volume) : nlohmann::json(nullptr);
  return j;
}

Shares transacted_volume(std::span<const FlowRecord> flow, Nanos start, Nanos end) {
  Shares total = 0;
  for (const FlowRecord& r : flow)
    if (r.msg == MsgType::Execute && r.ts >= start && r.ts < end) total += r.qty.value_or(0);
  return total;
}

Shares pov_order_size(Shares target, Shares filled, std::size_t slices, std::size_t slice_index) noexcept {
  if (filled >= target || slice_index >= slices) return 0;
  const Shares remaining = target - filled;
  const auto left = static_cast<Shares>(slices - slice_index);
  return (remaining + left - 1) / left;
}

PovAgent::PovAgent(const PovSpec& spec, Shares reference_volume)
    : spec_(spec),
      target_(static_cast<Shares>(std::llround(spec.lambda * static_cast<double>(reference_volume)))),
      slices_(spec.slice_count()) {}

std::optional<Nanos> PovAgent::next_wakeup() const {
  if (next_slice_ >= slices_ || filled_ >= target_) return std::nullopt;
  return spec_.window_start + static_cast<Nanos>(next_slice_) * spec_.slice;
}

std::optional<Action> PovAgent::wakeup(Nanos, const MarketView&, Rng&) {
  const Shares qty = pov_order_size(target_, filled_, slices_, next_slice_);
  ++next_slice_;
  if (qty <= 0) return std::nullopt;
  submitted_ += qty;
  ++orders_;
  return Action::market(spec_.direction == Direction::Buy ? Side::Bid : Side::Ask, qty);
}

void PovAgent::on_result(const EventLogRecord* record) {
  if (!record) return;
  for (const Trade& t : record->trades) filled_ += t.quantity;
}

double ImpactReport::peak_mean() const {
  if (mean.empty()) return 0.0;
  return spec.direction == Direction::Buy ? *std::max_element(mean.begin(), mean.end())
                                          : *std::min_element(mean.begin(), mean.end());
}

double ImpactReport::window_mean() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] > spec.window_start && times[i] <= spec.window_end) {
      sum += mean[i];
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

nlohmann::json ImpactReport::to_json() const {
  nlohmann::json buckets = nlohmann::json::array();
  for (std::size_t i = 0; i < times.size(); ++i)
    buckets.push_back({{"time", format_clock_time(times[i])},
                       {"mean", mean[i]},
                       {"std", stddev[i]},
                       {"p5", p5[i]},
                       {"p95", p95[i]}});
  return {{"spec", spec.to_json()},
          {"runs", runs},
          {"bucket_ns", bucket},
          {"reference_volume", reference_volume},
          {"target", target},
          {"filled", filled},
          {"seeds", seeds},
          {"peak_mean", peak_mean()},
          {"window_mean", window_mean()},
          {"buckets", buckets}};
}

void ImpactReport::write_csv(std::ostream& out) const {
  out << "bucket,mean,std,p5,p95\n";
  char line[160];
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::snprintf(line, sizeof line, "%s,%.10g,%.10g,%.10g,%.10g\n", format_clock_time(times[i]).c_str(), mean[i],
                  stddev[i], p5[i], p95[i]);
    out << line;
  }
}

std::optional<double> mid_at(std::span<const EventLogRecord> log, Nanos t) {
  auto it = std::upper_bound(log.begin(), log.end(), t, [](Nanos x, const EventLogRecord& r) { return x < r.ts; });
  while (it != log.begin()) {
    --it;
    if (it->mid) return it->mid;
  }
  return std::nullopt;
}

namespace {

struct RunPath {
  std::vector<double> mids;
  std::optional<double> handover_mid;
  Shares filled{0};
};

std::vector<Nanos> bucket_times(const SimConfig& config, Nanos bucket) {
  std::vector<Nanos> times;
  for (Nanos t = config.warmup_until; t <= config.session_end; t += bucket) times.push_back(t);
  return times;
}

RunPath simulate_path(const SimConfig& config, std::span<const FlowRecord> flow, const ExplicitModelParams& model,
                      const std::vector<Nanos>& times, const PovSpec* spec, Shares reference_volume) {
  ExplicitAgent world(model);
  std::optional<PovAgent> pov;
  if (spec) pov.emplace(*spec, reference_volume);
  Kernel kernel(config, flow, world, pov ? &*pov : nullptr);
  kernel.run();
  RunPath path;
  path.handover_mid = kernel.summary().handover_mid;
  const auto& log = kernel.log();
  path.mids.reserve(times.size());
  for (Nanos t : times) {
    const auto m = mid_at(log, t);
    path.mids.push_back(m ? *m : std::nan(""));
  }
  if (pov) path.filled = pov->filled();
  return path;
}

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers. The first failure
/// by index is rethrown.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t count = std::max<std::size_t>(1, std::min(threads, n));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < count; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

std::vector<ImpactReport> run_impact_sweep(const SimConfig& config, std::span<const FlowRecord> flow,
                                           const ExplicitModelParams& model, std::span<const PovSpec> specs,
                                           const ImpactOptions& options) {
  config.validate();
  model.validate();
  if (options.runs == 0) throw ValidationError("runs must be at least 1");
  if (options.bucket <= 0) throw ValidationError("bucket must be positive");
  std::vector<Shares> reference(specs.size());
  for (std::size_t k = 0; k < specs.size(); ++k) {
    specs[k].validate(config, options.allow_zero_lambda);
    reference[k] = specs[k].reference_volume
                       ? *specs[k].reference_volume
                       : transacted_volume(flow, specs[k].window_start, specs[k].window_end);
  }

  const std::vector<Nanos> times = bucket_times(config, options.bucket);
  const std::size_t runs = options.runs;
  std::vector<RunPath> baseline(runs);
  std::vector<std::vector<RunPath>> treated(specs.size(), std::vector<RunPath>(runs));

  const std::size_t jobs = runs * (1 + specs.size());
  parallel_for(jobs, options.threads, [&](std::size_t job) {
    const std::size_t run = job % runs;
    const std::size_t which = job / runs;
    SimConfig c = config;
    c.seed = config.seed + run;
    try {
      if (which == 0)
        baseline[run] = simulate_path(c, flow, model, times, nullptr, 0);
      else
        treated[which - 1][run] = simulate_path(c, flow, model, times, &specs[which - 1], reference[which - 1]);
    } catch (const std::exception& e) {
      throw RuntimeError("impact run with seed " + std::to_string(c.seed) + " failed: " + e.what());
    }
  });

  std::vector<ImpactReport> reports;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    ImpactReport rep;
    rep.spec = specs[k];
    rep.runs = runs;
    rep.bucket = options.bucket;
    rep.reference_volume = reference[k];
    rep.target = static_cast<Shares>(std::llround(specs[k].lambda * static_cast<double>(reference[k])));
    rep.times = times;
    for (std::size_t run = 0; run < runs; ++run) {
      const RunPath& base = baseline[run];
      const RunPath& with = treated[k][run];
      if (!base.handover_mid || *base.handover_mid <= 0.0)
        throw RuntimeError("impact run with seed " + std::to_string(config.seed + run) +
                           " failed: no mid at handover");
      std::vector<double> impact(times.size());
      for (std::size_t i = 0; i < times.size(); ++i) {
        const double d = with.mids[i] - base.mids[i];
        impact[i] = std::isnan(d) ? 0.0 : d / *base.handover_mid;
      }
      rep.per_run.push_back(std::move(impact));
      rep.filled.push_back(with.filled);
      rep.seeds.push_back(config.seed + run);
    }
    std::vector<double> column(runs);
    for (std::size_t i = 0; i < times.size(); ++i) {
      for (std::size_t run = 0; run < runs; ++run) column[run] = rep.per_run[run][i];
      const Summary s = summarize(column);
      rep.mean.push_back(s.mean);
      rep.stddev.push_back(s.stddev);
      rep.p5.push_back(s.p5);
      rep.p95.push_back(s.p95);
    }
    spdlog::info("impact lambda={} {}: target {} peak mean {:.3e}", specs[k].lambda, to_string(specs[k].direction),
                 rep.target, rep.peak_mean());
    reports.push_back(std::move(rep));
  }
  return reports;
}

ImpactReport run_impact(const SimConfig& config, std::span<const FlowRecord> flow, const ExplicitModelParams& model,
                        const PovSpec& spec, const ImpactOptions& options) {
  return std::move(run_impact_sweep(config, flow, model, std::span<const PovSpec>(&spec, 1), options).front());
}

}  // namespace lobforge

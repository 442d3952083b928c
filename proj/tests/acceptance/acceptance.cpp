// Prints one PASS/FAIL line per acceptance criterion. Always exits 0 once
// every check has run; a FAIL line is a reported result, not a crash.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include <spdlog/spdlog.h>
#include <sys/wait.h>

#include "lobforge/explicit_model.hpp"
#include "lobforge/impact.hpp"
#include "lobforge/sim_kernel.hpp"
#include "lobforge/stats.hpp"
#include "lobforge/synth.hpp"
#include "reference/naive_book.hpp"
#include "reference/naive_stats.hpp"

using namespace lobforge;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

struct Result {
  bool pass{true};
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail.clear();
    pass = false;
    detail += (detail.empty() ? "" : "; ") + why;
  }
};

void report(const std::string& name, const std::function<Result()>& check) {
  Result r;
  try {
    r = check();
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  std::cout << (r.pass ? "PASS " : "FAIL ") << name << ": " << r.detail << std::endl;
}

struct Shared {
  fs::path dir;
  std::vector<FlowRecord> flow;
  SynthProfile truth;
  ExplicitModelParams model;
  double fit_seconds{0.0};
};

const Shared& shared() {
  static const Shared s = [] {
    Shared out;
    out.dir = fs::temp_directory_path() / "lobforge_acceptance";
    fs::remove_all(out.dir);
    fs::create_directories(out.dir);
    const auto t0 = Clock::now();
    SynthConfig cfg;
    cfg.actions = 100000;
    cfg.seed = 20240601;
    out.truth = cfg.profile;
    const SynthResult synth = synth_seed(cfg);
    out.flow = synth.records;
    write_synth(out.dir / "seed.csv", cfg, synth);
    out.model = fit_explicit_model(extract_dataset(out.flow, 5));
    save_model(out.dir / "model.json", out.model);
    out.fit_seconds = seconds_since(t0);
    return out;
  }();
  return s;
}

SimConfig full_session(std::uint64_t seed) {
  SimConfig c;
  c.seed = seed;
  c.session_start = clock_time(9, 30);
  c.warmup_until = clock_time(10, 0);
  c.session_end = clock_time(16, 0);
  return c;
}

Result matcher_oracle() {
  Result r;
  const auto t0 = Clock::now();
  std::mt19937_64 gen(99);
  Book book;
  naive::Book ref;
  std::vector<Trade> tape;
  const int messages = 100000;
  for (int step = 0; step < messages && r.pass; ++step) {
    const Side side = gen() % 2 ? Side::Bid : Side::Ask;
    const Shares qty = 1 + static_cast<Shares>(gen() % 150);
    BookStatus got{}, want{};
    switch (gen() % 6) {
      case 0:
      case 1:
      case 2: {
        const Ticks price = 9990 + static_cast<Ticks>(gen() % 21);
        AddResult a = book.add_limit(side, price, qty);
        got = a.status;
        tape.insert(tape.end(), a.trades.begin(), a.trades.end());
        want = ref.add(side, price, qty);
        break;
      }
      case 3: {
        MarketResult m = book.market_order(side, qty);
        got = m.status;
        tape.insert(tape.end(), m.trades.begin(), m.trades.end());
        want = ref.market(side, qty);
        break;
      }
      case 4: {
        const Ticks d = static_cast<Ticks>(gen() % 4);
        const std::size_t pos = gen() % 5;
        got = book.cancel_at(side, d, pos).status;
        want = ref.cancel_at(side, d, pos);
        break;
      }
      default: {
        const Ticks d = static_cast<Ticks>(gen() % 4);
        const std::size_t pos = gen() % 5;
        const Ticks nd = static_cast<Ticks>(gen() % 8) - 2;
        ReplaceResult p = book.replace(side, d, pos, nd, qty);
        got = p.status;
        tape.insert(tape.end(), p.trades.begin(), p.trades.end());
        want = ref.replace(side, d, pos, nd, qty);
        break;
      }
    }
    if (got != want) r.fail("status differs at message " + std::to_string(step));
  }
  if (tape != ref.tape) r.fail("trade tapes differ");
  if (naive::levels_of(book.bids()) != ref.levels(Side::Bid)) r.fail("bid books differ");
  if (naive::levels_of(book.asks()) != ref.levels(Side::Ask)) r.fail("ask books differ");
  const double secs = seconds_since(t0);
  if (secs >= 10.0) r.fail("took " + fmt(secs) + " s");
  if (r.pass)
    r.detail = std::to_string(messages) + " messages, " + std::to_string(tape.size()) + " trades, " +
               std::to_string(book.order_count()) + " resting orders identical; " + fmt(secs, 3) + " s";
  return r;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LOBFORGE_CLI) + " " + args + " > /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Result determinism() {
  Result r;
  const Shared& s = shared();
  const std::string base = "simulate --model " + (s.dir / "model.json").string() + " --data " +
                           (s.dir / "seed.csv").string() +
                           " --seed 42 --session-start 09:30 --warmup-until 10:00 --session-end 16:00 --out ";
  double worst = 0.0;
  for (const char* name : {"det_a.csv", "det_b.csv"}) {
    const auto t0 = Clock::now();
    const int code = run_cli(base + (s.dir / name).string());
    worst = std::max(worst, seconds_since(t0));
    if (code != 0) r.fail(std::string("simulate exited ") + std::to_string(code));
  }
  const std::string a = slurp(s.dir / "det_a.csv"), b = slurp(s.dir / "det_b.csv");
  if (a.empty() || a != b) r.fail("event logs differ");
  if (worst >= 60.0) r.fail("slowest run took " + fmt(worst) + " s");
  if (r.pass)
    r.detail = "6.5 h session, " + std::to_string(std::count(a.begin(), a.end(), '\n')) +
               " lines byte-identical; slowest run " + fmt(worst, 3) + " s";
  return r;
}

Result round_trip() {
  Result r;
  const Shared& s = shared();
  const ExplicitModelParams& t = s.truth.params;
  const ExplicitModelParams& f = s.model;
  double worst_abs = 0.0, worst_rel = 0.0;
  auto absolute = [&](const std::string& what, double fit, double truth) {
    const double e = std::abs(fit - truth);
    worst_abs = std::max(worst_abs, e);
    if (e > 0.02) r.fail(what + " " + fmt(fit) + " vs " + fmt(truth));
  };
  auto relative = [&](const std::string& what, double fit, double truth) {
    const double e = std::abs(fit - truth) / std::abs(truth);
    worst_rel = std::max(worst_rel, e);
    if (e > 0.05) r.fail(what + " mean " + fmt(fit) + " vs " + fmt(truth));
  };
  const char* types[] = {"P(LO)", "P(MO)", "P(CAN)", "P(REP)"};
  for (std::size_t i = 0; i < kTypeCount; ++i) absolute(types[i], f.type_probs[i], t.type_probs[i]);
  absolute("P(round lot)", f.quantity.round_lot_prob, t.quantity.round_lot_prob);
  relative("round-lot NB", f.quantity.round_lot.mean(), t.quantity.round_lot.mean());
  relative("odd-lot NB", f.quantity.odd_lot.mean(), t.quantity.odd_lot.mean());
  relative("cancel-depth NB", f.cancel_depth[0].mean(), t.cancel_depth[0].mean());
  relative("replace-depth NB", f.cancel_depth[1].mean(), t.cancel_depth[1].mean());
  relative("inter-arrival gamma", f.interarrival.mean(), t.interarrival.mean());
  const double trials = static_cast<double>(t.neg_depth.max_magnitude - 1);
  relative("negative-depth BB", trials * f.neg_depth.magnitude.mean_fraction(),
           trials * t.neg_depth.magnitude.mean_fraction());
  relative("cancel queue BB", f.queue_position[0].mean_fraction(), t.queue_position[0].mean_fraction());
  relative("replace queue BB", f.queue_position[1].mean_fraction(), t.queue_position[1].mean_fraction());
  if (s.fit_seconds >= 60.0) r.fail("synth and fit took " + fmt(s.fit_seconds) + " s");
  if (r.pass)
    r.detail = std::to_string(f.metadata.pairs) + " actions; worst probability error " + fmt(worst_abs, 3) +
               ", worst relative mean error " + fmt(worst_rel, 3) + "; " + fmt(s.fit_seconds, 3) + " s";
  return r;
}

Result stability() {
  Result r;
  const Shared& s = shared();
  ExplicitAgent agent(s.model);
  Kernel k(full_session(7), s.flow, agent);
  k.run();
  const KernelSummary sum = k.summary();
  const double v0 = static_cast<double>(sum.handover_volume);
  const double hi = static_cast<double>(sum.max_volume_after_handover) / v0;
  const double lo = static_cast<double>(sum.min_volume_after_handover) / v0;
  if (!(v0 > 0)) r.fail("empty book at handover");
  if (hi > 10.0) r.fail("volume reached " + fmt(hi) + "x the handover volume");
  if (lo < 0.1) r.fail("volume fell to " + fmt(lo) + "x the handover volume");
  if (r.pass)
    r.detail = "handover volume " + std::to_string(sum.handover_volume) + ", range [" + fmt(lo, 3) + "x, " +
               fmt(hi, 3) + "x] over " + std::to_string(k.log().size() - sum.handover_index) + " events";
  return r;
}

std::vector<ImpactReport> impact_reports(const std::vector<double>& lambdas, std::size_t runs, bool allow_zero) {
  const Shared& s = shared();
  SimConfig cfg = full_session(1000);
  cfg.session_end = clock_time(12, 0);
  std::vector<PovSpec> specs;
  for (double l : lambdas) {
    PovSpec p;
    p.lambda = l;
    p.direction = Direction::Buy;
    p.window_start = clock_time(10, 30);
    p.window_end = clock_time(11, 0);
    p.slice = 60 * kNanosPerSecond;
    specs.push_back(p);
  }
  ImpactOptions opt;
  opt.runs = runs;
  opt.threads = std::max(1U, std::thread::hardware_concurrency());
  opt.allow_zero_lambda = allow_zero;
  return run_impact_sweep(cfg, s.flow, s.model, specs, opt);
}

Result responsiveness() {
  Result r;
  const auto t0 = Clock::now();
  const auto reports = impact_reports({0.1, 0.2, 0.5}, 25, false);
  std::string summary;
  for (const auto& rep : reports) {
    if (!(rep.window_mean() > 0.0))
      r.fail("window mean impact " + fmt(rep.window_mean()) + " at lambda " + fmt(rep.spec.lambda));
    summary += (summary.empty() ? "" : ", ") + std::string("lambda ") + fmt(rep.spec.lambda) + ": window " +
               fmt(rep.window_mean(), 3) + " peak " + fmt(rep.peak_mean(), 3);
  }
  for (std::size_t i = 1; i < reports.size(); ++i)
    if (reports[i].peak_mean() < reports[i - 1].peak_mean())
      r.fail("peak mean impact decreases from lambda " + fmt(reports[i - 1].spec.lambda) + " (" +
             fmt(reports[i - 1].peak_mean()) + ") to " + fmt(reports[i].spec.lambda) + " (" +
             fmt(reports[i].peak_mean()) + ")");
  const double secs = seconds_since(t0);
  if (secs >= 600.0) r.fail("took " + fmt(secs) + " s");
  r.detail += (r.detail.empty() ? "" : " | ") + summary + "; " + fmt(secs, 3) + " s";
  return r;
}

Result zero_lambda() {
  Result r;
  const auto reports = impact_reports({0.0}, 5, true);
  std::size_t buckets = 0;
  for (const auto& run : reports[0].per_run)
    for (double v : run) {
      ++buckets;
      if (v != 0.0) r.fail("nonzero impact " + fmt(v));
    }
  for (double v : reports[0].mean)
    if (v != 0.0) r.fail("nonzero mean impact " + fmt(v));
  if (r.pass) r.detail = std::to_string(buckets) + " run-buckets exactly zero";
  return r;
}

std::string compare_with_naive(const std::vector<FlowRecord>& log) {
  StatsOptions opt;
  opt.max_lag = 10;
  opt.histogram_bins = 30;
  const StatsReport got = compute_stats(log, opt);
  const naive::Stats want = naive::stats(log, opt.max_lag, opt.histogram_bins);
  if (got.returns != want.returns) return "returns";
  if (want.acf.empty() ? got.return_acf.has_value() : (!got.return_acf || *got.return_acf != want.acf))
    return "return ACF";
  if (want.squared_acf.empty() ? got.squared_return_acf.has_value()
                               : (!got.squared_return_acf || *got.squared_return_acf != want.squared_acf))
    return "squared return ACF";
  const Histogram& h = got.return_histogram;
  if (h.density.size() != want.histogram_counts.size()) return "histogram bins";
  for (std::size_t i = 0; i < h.density.size(); ++i)
    if (std::llround(h.density[i] * static_cast<double>(h.count) * (h.edges[i + 1] - h.edges[i])) !=
        static_cast<long long>(want.histogram_counts[i]))
      return "histogram counts";
  if (got.first_fill.seconds != want.first_fill || got.first_fill.limit_orders != want.limit_orders)
    return "time to first fill";
  if (got.add_volume_per_minute != want.add_volume_per_minute) return "add volume";
  if (got.depth_histogram[0] != want.depth[0] || got.depth_histogram[1] != want.depth[1]) return "depth histogram";
  auto same_profile = [](const BucketProfile& p, const std::map<Nanos, Summary>& m) {
    if (p.starts.size() != m.size()) return false;
    std::size_t i = 0;
    for (const auto& [start, s] : m) {
      const Summary& g = p.values[i];
      if (p.starts[i] != start || g.count != s.count || g.mean != s.mean || g.stddev != s.stddev || g.p5 != s.p5 ||
          g.p50 != s.p50 || g.p75 != s.p75 || g.p95 != s.p95)
        return false;
      ++i;
    }
    return true;
  };
  if (!same_profile(got.spread, want.spread)) return "spread profile";
  if (!same_profile(got.l1_bid, want.l1_bid)) return "best bid volume profile";
  if (!same_profile(got.l1_ask, want.l1_ask)) return "best ask volume profile";
  if (std::vector<double>(got.type_proportions.begin(), got.type_proportions.end()) != want.type_proportions)
    return "type proportions";
  return {};
}

Result stylized_facts() {
  Result r;
  const Shared& s = shared();
  std::size_t logs = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthConfig cfg;
    cfg.actions = 10000;
    cfg.seed = 1000 + seed;
    SynthProfile& p = cfg.profile;
    std::mt19937_64 gen(seed);
    // Perturb the generating law so each log has a different character.
    p.params.type_probs = {0.35 + 0.02 * static_cast<double>(gen() % 8), 0.03 + 0.01 * static_cast<double>(gen() % 4),
                           0.3, 0.1};
    double total = 0.0;
    for (double v : p.params.type_probs) total += v;
    for (double& v : p.params.type_probs) v /= total;
    const auto log = synth_seed(cfg).records;
    if (const std::string m = compare_with_naive(log); !m.empty()) r.fail(m + " differs on synthetic log " + std::to_string(seed));
    ++logs;
  }
  ExplicitAgent agent(s.model);
  SimConfig cfg = full_session(11);
  Kernel k(cfg, s.flow, agent);
  k.warm_up();
  const std::size_t handover = k.log().size();
  std::size_t actions = 0;
  while (actions < 10000 && k.step()) ++actions;
  if (const std::string m = compare_with_naive(to_flow(k.log())); !m.empty()) r.fail(m + " differs on simulated log");
  ++logs;

  std::array<double, kTypeCount> counts{};
  for (std::size_t i = handover; i < k.log().size(); ++i)
    if (k.log()[i].source == EventSource::World) counts[type_index(k.log()[i].action.kind)] += 1.0;
  double total = 0.0;
  for (double c : counts) total += c;
  double worst = 0.0;
  for (std::size_t i = 0; i < kTypeCount; ++i) {
    const double e = std::abs(counts[i] / total - s.model.type_probs[i]);
    worst = std::max(worst, e);
    if (e > 0.02) r.fail("simulated type " + std::to_string(i) + " share " + fmt(counts[i] / total) + " vs fitted " +
                         fmt(s.model.type_probs[i]));
  }

  std::mt19937_64 gen(5);
  std::normal_distribution<double> normal;
  std::vector<double> noise(10000);
  for (double& v : noise) v = normal(gen);
  const auto a = acf(noise, 20);
  const double band = 3.0 / std::sqrt(static_cast<double>(noise.size()));
  double worst_acf = 0.0;
  for (std::size_t lag = 1; lag < a.size(); ++lag) worst_acf = std::max(worst_acf, std::abs(a[lag]));
  if (worst_acf >= band) r.fail("white-noise ACF reached " + fmt(worst_acf) + " against band " + fmt(band));
  if (r.pass)
    r.detail = std::to_string(logs) + " logs match the reference; white-noise max |ACF| " + fmt(worst_acf, 3) +
               " < " + fmt(band, 3) + "; worst type share error " + fmt(worst, 3) + " over " +
               std::to_string(actions) + " actions";
  return r;
}

Result flow_round_trip() {
  Result r;
  SynthConfig cfg;
  cfg.actions = 10000;
  cfg.seed = 77;
  const auto records = synth_seed(cfg).records;
  std::ostringstream first;
  write_flow(first, records);
  std::istringstream in(first.str());
  const FlowFile back = read_flow(in);
  std::ostringstream second;
  write_flow(second, back.records);
  if (back.records != records) r.fail("records differ after reading back");
  if (first.str() != second.str()) r.fail("bytes differ after a second write");
  if (r.pass) r.detail = std::to_string(records.size()) + " records, " + std::to_string(first.str().size()) + " bytes identical";
  return r;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  report("matcher-oracle-equivalence", matcher_oracle);
  report("simulate-determinism", determinism);
  report("explicit-model-round-trip", round_trip);
  report("closed-loop-stability", stability);
  report("impact-responsiveness", responsiveness);
  report("zero-lambda-null", zero_lambda);
  report("stylized-facts-correctness", stylized_facts);
  report("flow-format-round-trip", flow_round_trip);
  fs::remove_all(shared().dir);
  return 0;
}

#include "lobforge/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>

#include "lobforge/replay.hpp"

namespace lobforge {

Dataset extract_dataset(std::span<const FlowRecord> flow, std::size_t window_depth) {
  Dataset out;
  out.window_depth = window_depth;
  Market market(window_depth);
  FlowApplier applier(market);
  std::optional<Nanos> previous;
  for (const FlowRecord& record : flow) {
    if (record.msg == MsgType::Execute) {
      applier.apply(record);
      continue;
    }
    StateActionPair pair;
    pair.window = market.window().states();
    auto applied = applier.apply(record);
    if (!applied->ok()) continue;
    pair.action = applied->action;
    pair.ts = record.ts;
    pair.dt = previous ? record.ts - *previous : 0;
    pair.queue_length = applied->queue_length;
    pair.depth_defined = applied->depth_defined;
    previous = record.ts;
    out.pairs.push_back(std::move(pair));
  }
  applier.finish();
  out.rejected = applier.rejected();
  out.execution_mismatches = applier.execution_mismatches();
  return out;
}

namespace {

struct Extent {
  double lo{0.0};
  double hi{0.0};
  bool seen{false};

  void add(double v) {
    if (!seen) lo = hi = v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    seen = true;
  }
  void apply(Range& r) const {
    if (!seen) return;
    r = {lo, hi > lo ? hi : lo + 1.0};
  }
};

}  // namespace

ScalerBounds fit_bounds(const Dataset& dataset) {
  Extent depth, cancel_depth, qty_x, qty_100x, v1, v5, spread;
  for (const StateActionPair& p : dataset.pairs) {
    for (const MarketStateVector& s : p.window) {
      v1.add(s.volume1);
      v5.add(s.volume5);
      spread.add(s.spread);
    }
    const Action& a = p.action;
    if (a.uses_depth() && p.depth_defined) depth.add(static_cast<double>(a.depth));
    if (a.uses_cancel()) cancel_depth.add(static_cast<double>(a.cancel_depth));
    if (a.uses_quantity()) {
      if (a.quantity % 100 == 0) qty_100x.add(static_cast<double>(a.quantity / 100));
      else qty_x.add(static_cast<double>(a.quantity));
    }
  }
  ScalerBounds b;
  depth.apply(b.depth);
  cancel_depth.apply(b.cancel_depth);
  qty_x.apply(b.qty_x);
  qty_100x.apply(b.qty_100x);
  v1.apply(b.volume1);
  v5.apply(b.volume5);
  spread.apply(b.spread);
  return b;
}

void write_codec_dataset(std::ostream& out, const Dataset& dataset, const ScalerBounds& bounds) {
  static constexpr const char* kFeatureNames[] = {"i1", "i5", "o128", "o256", "v1", "v5", "spread", "r1", "r50"};
  static constexpr const char* kActionNames[] = {"depth",    "cancel_depth", "qty_x", "qty_100x",
                                                 "qty_type", "order_type",   "side"};
  out << kFormatVersionLine << '\n' << "pair,leg";
  for (std::size_t t = 0; t < dataset.window_depth; ++t)
    for (const char* f : kFeatureNames) out << ",s" << t << '_' << f;
  for (const char* a : kActionNames) out << ',' << a;
  out << ",dt_ns\n";

  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << ',' << buf;
  };
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
    const StateActionPair& p = dataset.pairs[i];
    const auto vectors = encode(p.action, bounds);
    for (std::size_t leg = 0; leg < vectors.size(); ++leg) {
      out << i << ',' << leg;
      for (const MarketStateVector& s : p.window)
        for (double v : normalize_state(s, bounds)) put(v);
      for (double v : vectors[leg].values) put(v);
      out << ',' << p.dt << '\n';
    }
  }
}

void write_codec_dataset(const std::filesystem::path& path, const Dataset& dataset, const ScalerBounds& bounds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write dataset " + path.string());
  write_codec_dataset(out, dataset, bounds);
  if (!out) throw RuntimeError("error writing dataset " + path.string());
}

std::string dataset_hash(const Dataset& dataset) {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&](std::int64_t v) {
    unsigned char bytes[8];
    std::memcpy(bytes, &v, 8);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::int64_t>(dataset.window_depth));
  for (const StateActionPair& p : dataset.pairs) {
    const Action& a = p.action;
    mix(static_cast<std::int64_t>(a.kind));
    mix(static_cast<std::int64_t>(a.side));
    mix(a.depth);
    mix(a.quantity);
    mix(a.cancel_depth);
    mix(static_cast<std::int64_t>(a.queue_position));
    mix(p.ts);
    mix(static_cast<std::int64_t>(p.queue_length));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace lobforge

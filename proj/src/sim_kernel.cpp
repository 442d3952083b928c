#include "lobforge/sim_kernel.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

namespace lobforge {

void SimConfig::validate() const {
  if (!(session_start < warmup_until)) throw ValidationError("session start must precede warmup_until");
  if (!(warmup_until <= session_end)) throw ValidationError("warmup_until must not exceed session end");
  if (window_depth == 0) throw ValidationError("window depth T must be at least 1");
  if (!(tick_size > 0.0)) throw ValidationError("tick size must be positive");
  if (fallback_reference && *fallback_reference <= 0) throw ValidationError("fallback reference must be positive");
}

nlohmann::json SimConfig::to_json() const {
  nlohmann::json j = {
      {"seed", seed},
      {"session_start", format_clock_time(session_start)},
      {"warmup_until", format_clock_time(warmup_until)},
      {"session_end", format_clock_time(session_end)},
      {"T", window_depth},
      {"tick_size", tick_size},
      {"data", data_path.string()},
      {"model", model_path.string()},
  };
  if (fallback_reference) j["fallback_reference"] = *fallback_reference;
  return j;
}

std::string_view to_string(EventSource s) noexcept {
  switch (s) {
    case EventSource::Replay: return "REPLAY";
    case EventSource::World: return "WORLD";
    case EventSource::Experimental: return "EXPERIMENTAL";
  }
  return "?";
}

void append_flow(const EventLogRecord& r, std::vector<FlowRecord>& out) {
  if (r.original) {
    out.push_back(*r.original);
  } else {
    FlowRecord f;
    f.ts = r.ts;
    const Side side = r.action.side;
    f.side = side;
    switch (r.action.kind) {
      case ActionKind::AddLimit:
        f.msg = MsgType::Add;
        f.order_id = r.order_id;
        f.price = r.price;
        f.qty = r.action.quantity;
        break;
      case ActionKind::Market:
        f.msg = MsgType::Market;
        f.order_id = r.order_id;
        f.qty = r.action.quantity;
        break;
      case ActionKind::Cancel:
        f.msg = MsgType::Cancel;
        f.ref_order_id = r.cancelled->id;
        f.price = r.cancelled->price;
        f.qty = r.cancelled->quantity;
        break;
      case ActionKind::Replace:
        f.msg = MsgType::Replace;
        f.order_id = r.order_id;
        f.ref_order_id = r.cancelled->id;
        f.new_price = r.price;
        f.new_qty = r.action.quantity;
        break;
    }
    out.push_back(f);
  }
  for (const Trade& t : r.trades) {
    FlowRecord e;
    e.ts = r.ts;
    e.msg = MsgType::Execute;
    e.order_id = t.aggressor_id;
    e.side = opposite(t.aggressor);
    e.price = t.price;
    e.qty = t.quantity;
    e.ref_order_id = t.resting_id;
    out.push_back(e);
  }
}

std::vector<FlowRecord> to_flow(std::span<const EventLogRecord> log) {
  std::vector<FlowRecord> out;
  out.reserve(log.size() * 2);
  for (const EventLogRecord& r : log) append_flow(r, out);
  return out;
}

void write_event_log(const std::filesystem::path& path, std::span<const EventLogRecord> log) {
  write_flow(path, to_flow(log));
}

std::span<const FlowRecord> records_before(std::span<const FlowRecord> flow, Nanos until) {
  const auto it = std::partition_point(flow.begin(), flow.end(), [&](const FlowRecord& r) { return r.ts < until; });
  return flow.first(static_cast<std::size_t>(it - flow.begin()));
}

Kernel::Kernel(SimConfig config, std::span<const FlowRecord> replay, WorldAgent& world,
               ExperimentalAgent* experimental)
    : config_(std::move(config)),
      replay_(replay),
      world_(world),
      experimental_(experimental),
      market_(config_.window_depth, config_.fallback_reference),
      world_stream_(Rng(config_.seed).split(streams::kWorldAgent)),
      experimental_rng_(Rng(config_.seed).split(streams::kExperimentalAgent)),
      now_(config_.session_start) {
  config_.validate();
}

void Kernel::log_event(EventLogRecord record, int sign) {
  market_.record_event(sign);
  const Book& book = market_.book();
  record.best_bid = book.best_bid();
  record.best_ask = book.best_ask();
  record.mid = mid_price(book);
  record.total_volume = book.total_volume();
  ++summary_.events_by_source[static_cast<std::size_t>(record.source)];
  if (record.source != EventSource::Replay) {
    summary_.min_volume_after_handover = std::min(summary_.min_volume_after_handover, record.total_volume);
    summary_.max_volume_after_handover = std::max(summary_.max_volume_after_handover, record.total_volume);
  }
  log_.push_back(std::move(record));
}

void Kernel::drop(BookStatus status) { ++summary_.dropped[std::string(to_string(status))]; }

void Kernel::warm_up() {
  if (warmed_up_) return;
  const auto start = std::chrono::steady_clock::now();
  FlowApplier applier(market_);
  for (const FlowRecord& r : records_before(replay_, config_.warmup_until)) {
    auto applied = applier.apply(r);
    if (!applied) continue;
    if (!applied->ok()) {
      ++summary_.replay_rejected;
      continue;
    }
    EventLogRecord rec;
    rec.ts = r.ts;
    rec.source = EventSource::Replay;
    rec.action = applied->action;
    rec.order_id = applied->order_id;
    rec.price = applied->price;
    rec.cancelled = applied->cancelled;
    rec.trades = std::move(applied->trades);
    rec.original = r;
    const Book& book = market_.book();
    rec.best_bid = book.best_bid();
    rec.best_ask = book.best_ask();
    rec.mid = mid_price(book);
    rec.total_volume = book.total_volume();
    ++summary_.events_by_source[static_cast<std::size_t>(EventSource::Replay)];
    log_.push_back(std::move(rec));
  }
  applier.finish();
  summary_.replayed = log_.size();
  summary_.execution_mismatches = applier.execution_mismatches();
  if (summary_.execution_mismatches > 0)
    spdlog::warn("replay: {} executions differ from the recorded ones", summary_.execution_mismatches);

  now_ = std::max(now_, config_.warmup_until);
  summary_.handover_index = log_.size();
  summary_.handover_volume = market_.book().total_volume();
  summary_.min_volume_after_handover = summary_.max_volume_after_handover = summary_.handover_volume;
  summary_.handover_mid = mid_price(market_.book());
  for (auto it = log_.rbegin(); !summary_.handover_mid && it != log_.rend(); ++it) summary_.handover_mid = it->mid;
  warmed_up_ = true;
  finished_ = config_.warmup_until >= config_.session_end;
  elapsed_ += std::chrono::steady_clock::now() - start;
}

StepOutcome Kernel::apply_action(const Action& action, EventSource source) {
  Book& book = market_.book();
  EventLogRecord rec;
  rec.ts = now_;
  rec.source = source;
  rec.action = action.normalized();
  int sign = 0;
  auto fail = [&](BookStatus status) {
    drop(status);
    return StepOutcome{false, status};
  };
  auto resolve = [&](Side side, Ticks depth) -> std::optional<Ticks> {
    const auto ref = market_.reference(side);
    if (!ref) return std::nullopt;
    return side == Side::Bid ? *ref - depth : *ref + depth;
  };

  switch (action.kind) {
    case ActionKind::AddLimit: {
      const auto price = resolve(action.side, action.depth);
      if (!price) return fail(BookStatus::UndefinedReference);
      AddResult r = book.add_limit(action.side, *price, action.quantity);
      if (!r.ok()) return fail(r.status);
      rec.order_id = r.id;
      rec.price = *price;
      rec.trades = std::move(r.trades);
      break;
    }
    case ActionKind::Market: {
      MarketResult r = book.market_order(action.side, action.quantity);
      if (!r.ok()) return fail(r.status);
      rec.order_id = r.id;
      rec.trades = std::move(r.trades);
      sign = market_order_sign(action.side);
      break;
    }
    case ActionKind::Cancel: {
      CancelResult c = book.cancel_at(action.side, action.cancel_depth, action.queue_position);
      if (!c.ok()) return fail(c.status);
      rec.cancelled = c.cancelled;
      rec.action.queue_position = c.queue_position;
      break;
    }
    case ActionKind::Replace: {
      if (action.quantity <= 0) return fail(BookStatus::InvalidQuantity);
      CancelResult c = book.cancel_at(action.side, action.cancel_depth, action.queue_position);
      if (!c.ok()) return fail(c.status);
      rec.cancelled = c.cancelled;
      rec.action.queue_position = c.queue_position;
      const auto price = resolve(action.side, action.depth);
      AddResult r = price ? book.add_limit(action.side, *price, action.quantity)
                          : AddResult{.status = BookStatus::UndefinedReference};
      if (!r.ok()) {
        // The cancel leg stands on its own.
        ++summary_.dropped["replace_add_" + std::string(to_string(r.status))];
        rec.action = Action::cancel(action.side, action.cancel_depth, c.queue_position);
        break;
      }
      rec.order_id = r.id;
      rec.price = *price;
      rec.trades = std::move(r.trades);
      break;
    }
  }
  if (source == EventSource::World) ++summary_.world_actions_by_type[static_cast<std::size_t>(rec.action.kind)];
  if (source == EventSource::Experimental && rec.order_id != 0) summary_.experimental_orders.push_back(rec.order_id);
  log_event(std::move(rec), sign);
  return {true, BookStatus::Ok};
}

StepOutcome Kernel::apply(const TimedAction& timed, EventSource source) {
  if (!warmed_up_) warm_up();
  if (timed.dt <= 0) throw ValidationError("dt must be positive");
  now_ += timed.dt;
  pending_.reset();
  return apply_action(timed.action, source);
}

bool Kernel::step() {
  if (!warmed_up_) warm_up();
  if (finished_) return false;
  const auto start = std::chrono::steady_clock::now();
  struct Timer {
    std::chrono::steady_clock::time_point start;
    std::chrono::steady_clock::duration& total;
    ~Timer() { total += std::chrono::steady_clock::now() - start; }
  } timer{start, elapsed_};

  while (true) {
    const MarketView view{market_.window(), market_.book(), now_};
    if (!pending_) {
      Rng rng = world_rng(query_);
      pending_ = world_.next(view, rng);
      ++summary_.world_queries;
      if (pending_->dt <= 0) throw RuntimeError("world agent returned a non-positive dt");
      pending_ts_ = now_ + pending_->dt;
    }
    if (experimental_) {
      const auto wake = experimental_->next_wakeup();
      if (wake && *wake < pending_ts_ && *wake <= config_.session_end) {
        now_ = std::max(now_, *wake);
        const MarketView agent_view{market_.window(), market_.book(), now_};
        const auto action = experimental_->wakeup(now_, agent_view, experimental_rng_);
        if (!action) continue;
        const StepOutcome outcome = apply_action(*action, EventSource::Experimental);
        experimental_->on_result(outcome.applied ? &log_.back() : nullptr);
        if (!outcome.applied) continue;
        pending_.reset();
        return true;
      }
    }
    if (pending_ts_ > config_.session_end) {
      finished_ = true;
      return false;
    }
    now_ = pending_ts_;
    const Action action = pending_->action;
    pending_.reset();
    ++query_;
    if (apply_action(action, EventSource::World).applied) return true;
  }
}

void Kernel::run() {
  warm_up();
  while (step()) {
  }
}

KernelSummary Kernel::summary() const {
  KernelSummary s = summary_;
  s.runtime_seconds = std::chrono::duration<double>(elapsed_).count();
  return s;
}

nlohmann::json Kernel::summary_json() const {
  const KernelSummary s = summary();
  const Book& book = market_.book();
  nlohmann::json dropped = nlohmann::json::object();
  for (const auto& [k, v] : s.dropped) dropped[k] = v;
  nlohmann::json j = {
      {"version", "v1"},
      {"config", config_.to_json()},
      {"world_agent", world_.name()},
      {"events",
       {{"REPLAY", s.events_by_source[0]}, {"WORLD", s.events_by_source[1]}, {"EXPERIMENTAL", s.events_by_source[2]}}},
      {"world_actions",
       {{"LO", s.world_actions_by_type[0]},
        {"MO", s.world_actions_by_type[1]},
        {"CAN", s.world_actions_by_type[2]},
        {"REP", s.world_actions_by_type[3]}}},
      {"world_queries", s.world_queries},
      {"dropped", dropped},
      {"replay_rejected", s.replay_rejected},
      {"execution_mismatches", s.execution_mismatches},
      {"handover",
       {{"event_index", s.handover_index},
        {"mid", s.handover_mid ? nlohmann::json(*s.handover_mid) : nlohmann::json(nullptr)},
        {"total_volume", s.handover_volume}}},
      {"volume_after_handover", {{"min", s.min_volume_after_handover}, {"max", s.max_volume_after_handover}}},
      {"experimental_orders", s.experimental_orders},
      {"runtime_seconds", s.runtime_seconds},
      {"final_book",
       {{"best_bid", book.best_bid() ? nlohmann::json(*book.best_bid()) : nlohmann::json(nullptr)},
        {"best_ask", book.best_ask() ? nlohmann::json(*book.best_ask()) : nlohmann::json(nullptr)},
        {"bid_volume", book.volume(Side::Bid)},
        {"ask_volume", book.volume(Side::Ask)},
        {"orders", book.order_count()},
        {"bid_levels", book.level_count(Side::Bid)},
        {"ask_levels", book.level_count(Side::Ask)}}},
      {"clock", format_clock_time(now_)},
  };
  if (experimental_) j["experimental_agent"] = experimental_->name();
  return j;
}

}  // namespace lobforge

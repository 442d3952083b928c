#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lobforge/agent.hpp"
#include "lobforge/flow.hpp"
#include "lobforge/replay.hpp"
#include "lobforge/rng.hpp"

namespace lobforge {

struct SimConfig {
  std::uint64_t seed{1};
  Nanos session_start{clock_time(9, 30)};
  Nanos warmup_until{clock_time(10, 0)};
  Nanos session_end{clock_time(16, 0)};
  std::size_t window_depth{5};
  double tick_size{0.01};
  std::filesystem::path data_path;
  std::filesystem::path model_path;
  /// Reference quote for adds when a side has never been quoted.
  std::optional<Ticks> fallback_reference;

  /// Throws ValidationError.
  void validate() const;
  nlohmann::json to_json() const;
};

enum class EventSource : std::uint8_t { Replay, World, Experimental };

std::string_view to_string(EventSource s) noexcept;

struct EventLogRecord {
  Nanos ts{0};
  EventSource source{EventSource::World};
  Action action;
  OrderId order_id{0};  // new order (ADD, REPLACE) or market order id
  Ticks price{0};       // limit price (ADD) or new price (REPLACE)
  std::optional<Order> cancelled;
  std::vector<Trade> trades;
  std::optional<Ticks> best_bid;
  std::optional<Ticks> best_ask;
  std::optional<double> mid;
  Shares total_volume{0};
  /// Replayed records are logged verbatim.
  std::optional<FlowRecord> original;
};

/// Flow records for one logged event: the message followed by its executions.
void append_flow(const EventLogRecord& record, std::vector<FlowRecord>& out);
std::vector<FlowRecord> to_flow(std::span<const EventLogRecord> log);

/// An agent acting at its own times, e.g. an execution algorithm.
class ExperimentalAgent {
 public:
  virtual ~ExperimentalAgent() = default;
  virtual std::optional<Nanos> next_wakeup() const = 0;
  /// Consumes the pending wakeup.
  virtual std::optional<Action> wakeup(Nanos now, const MarketView& view, Rng& rng) = 0;
  /// Outcome of the action returned by the last wakeup; nullptr when dropped.
  virtual void on_result(const EventLogRecord* record) { (void)record; }
  virtual std::string name() const = 0;
};

struct StepOutcome {
  bool applied{false};
  BookStatus status{BookStatus::Ok};
};

struct KernelSummary {
  std::size_t replayed{0};
  std::size_t replay_rejected{0};
  std::size_t execution_mismatches{0};
  std::array<std::size_t, 3> events_by_source{};
  std::array<std::size_t, 4> world_actions_by_type{};
  std::size_t world_queries{0};
  std::map<std::string, std::size_t> dropped;
  std::size_t handover_index{0};
  std::optional<double> handover_mid;
  Shares handover_volume{0};
  Shares min_volume_after_handover{0};
  Shares max_volume_after_handover{0};
  std::vector<OrderId> experimental_orders;
  double runtime_seconds{0.0};
};

/// Phase 1 replays recorded messages with ts < warmup_until. Phase 2 asks the
/// world agent for timed actions until session end, interleaving
/// experimental-agent wakeups in time order.
///
/// The q-th world query draws from stream split(world).split(q). When an
/// experimental action lands before the pending world action, the world is
/// asked again with the same q, so runs with and without the agent share
/// their random numbers.
class Kernel {
 public:
  Kernel(SimConfig config, std::span<const FlowRecord> replay, WorldAgent& world,
         ExperimentalAgent* experimental = nullptr);

  void warm_up();
  /// Applies exactly one timed action. Returns false once the session is over.
  bool step();
  void run();

  /// Advances the clock by `timed.dt` and applies the action.
  StepOutcome apply(const TimedAction& timed, EventSource source);

  const SimConfig& config() const noexcept { return config_; }
  Nanos now() const noexcept { return now_; }
  bool finished() const noexcept { return finished_; }
  const Market& market() const noexcept { return market_; }
  const StateWindow& window() const noexcept { return market_.window(); }
  const std::vector<EventLogRecord>& log() const noexcept { return log_; }
  KernelSummary summary() const;
  nlohmann::json summary_json() const;

 private:
  StepOutcome apply_action(const Action& action, EventSource source);
  void log_event(EventLogRecord record, int sign);
  void drop(BookStatus status);
  Rng world_rng(std::uint64_t query) const { return world_stream_.split(query); }

  SimConfig config_;
  std::span<const FlowRecord> replay_;
  WorldAgent& world_;
  ExperimentalAgent* experimental_;
  Market market_;
  Rng world_stream_;
  Rng experimental_rng_;
  Nanos now_;
  bool warmed_up_{false};
  bool finished_{false};
  std::uint64_t query_{0};
  std::optional<TimedAction> pending_;
  Nanos pending_ts_{0};
  std::vector<EventLogRecord> log_;
  KernelSummary summary_;
  std::chrono::steady_clock::duration elapsed_{};
};

/// Flow records with ts before `until`.
std::span<const FlowRecord> records_before(std::span<const FlowRecord> flow, Nanos until);

void write_event_log(const std::filesystem::path& path, std::span<const EventLogRecord> log);

}  // namespace lobforge

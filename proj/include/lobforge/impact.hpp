#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "lobforge/explicit_model.hpp"
#include "lobforge/sim_kernel.hpp"

namespace lobforge {

enum class Direction : std::uint8_t { Buy, Sell };

std::string_view to_string(Direction d) noexcept;
Direction parse_direction(std::string_view text);

struct PovSpec {
  double lambda{0.1};
  Direction direction{Direction::Buy};
  Nanos window_start{clock_time(10, 30)};
  Nanos window_end{clock_time(11, 0)};
  Nanos slice{60 * kNanosPerSecond};
  /// Transacted volume in the same historical window; taken from the data when unset.
  std::optional<Shares> reference_volume;

  /// Throws ValidationError. lambda = 0 is accepted only with `allow_zero`.
  void validate(const SimConfig& config, bool allow_zero = false) const;
  std::size_t slice_count() const noexcept;
  nlohmann::json to_json() const;
};

/// Sum of execution quantities with ts in [start, end).
Shares transacted_volume(std::span<const FlowRecord> flow, Nanos start, Nanos end);

/// Size of the market order for slice `slice_index` (0-based): the remaining
/// target spread evenly over the remaining slices, rounded up. 0 once the
/// target is met.
Shares pov_order_size(Shares target, Shares filled, std::size_t slices, std::size_t slice_index) noexcept;

/// Market orders at uniform slices across the window.
class PovAgent final : public ExperimentalAgent {
 public:
  PovAgent(const PovSpec& spec, Shares reference_volume);

  std::optional<Nanos> next_wakeup() const override;
  std::optional<Action> wakeup(Nanos now, const MarketView& view, Rng& rng) override;
  void on_result(const EventLogRecord* record) override;
  std::string name() const override { return "pov"; }

  Shares target() const noexcept { return target_; }
  Shares submitted() const noexcept { return submitted_; }
  Shares filled() const noexcept { return filled_; }
  std::size_t orders() const noexcept { return orders_; }

 private:
  PovSpec spec_;
  Shares target_;
  std::size_t slices_;
  std::size_t next_slice_{0};
  Shares submitted_{0};
  Shares filled_{0};
  std::size_t orders_{0};
};

struct ImpactReport {
  PovSpec spec;
  std::size_t runs{0};
  Nanos bucket{kNanosPerMinute};
  Shares reference_volume{0};
  Shares target{0};
  std::vector<Nanos> times;  // bucket ends, starting at handover
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<double> p5;
  std::vector<double> p95;
  std::vector<std::vector<double>> per_run;  // [run][bucket]
  std::vector<Shares> filled;                // per run
  std::vector<std::uint64_t> seeds;

  /// Largest bucket mean in the trade direction (max for BUY, min for SELL).
  double peak_mean() const;
  /// Mean over buckets inside the POV window.
  double window_mean() const;
  nlohmann::json to_json() const;
  void write_csv(std::ostream& out) const;
};

struct ImpactOptions {
  std::size_t runs{25};
  Nanos bucket{kNanosPerMinute};
  std::size_t threads{1};
  bool allow_zero_lambda{false};
};

/// Mid of the last logged event with ts <= t (carrying the last defined mid).
std::optional<double> mid_at(std::span<const EventLogRecord> log, Nanos t);

/// Run i uses seed config.seed + i for both simulations.
ImpactReport run_impact(const SimConfig& config, std::span<const FlowRecord> flow, const ExplicitModelParams& model,
                        const PovSpec& spec, const ImpactOptions& options);

/// Several specs sharing the without-agent runs.
std::vector<ImpactReport> run_impact_sweep(const SimConfig& config, std::span<const FlowRecord> flow,
                                           const ExplicitModelParams& model, std::span<const PovSpec> specs,
                                           const ImpactOptions& options);

}  // namespace lobforge

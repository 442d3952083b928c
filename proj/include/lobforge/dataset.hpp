#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "lobforge/action_codec.hpp"
#include "lobforge/agent.hpp"
#include "lobforge/flow.hpp"
#include "lobforge/market_state.hpp"

namespace lobforge {

struct StateActionPair {
  std::vector<MarketStateVector> window;  // T states before the action, oldest first
  Action action;
  Nanos dt{0};  // since the previous action; 0 for the first
  Nanos ts{0};
  std::size_t queue_length{0};  // live length of the cancelled queue (CANCEL, REPLACE)
  bool depth_defined{true};     // false when the add depth had no reference quote
};

struct Dataset {
  std::size_t window_depth{5};
  std::vector<StateActionPair> pairs;
  std::size_t skipped_unresolved{0};
  std::size_t rejected{0};
  std::size_t execution_mismatches{0};
};

/// Replays the flow and emits one pair per A/C/R/M record. E records only
/// validate the replay.
Dataset extract_dataset(std::span<const FlowRecord> flow, std::size_t window_depth);

/// Observed ranges of every scaled attribute. Degenerate ranges are widened
/// by one unit.
ScalerBounds fit_bounds(const Dataset& dataset);

/// Codec-form dataset: one row per vector (two for REPLACE), normalized
/// window followed by the 7 action values and dt.
void write_codec_dataset(std::ostream& out, const Dataset& dataset, const ScalerBounds& bounds);
void write_codec_dataset(const std::filesystem::path& path, const Dataset& dataset, const ScalerBounds& bounds);

/// FNV-1a over the pair contents, hex encoded.
std::string dataset_hash(const Dataset& dataset);

}  // namespace lobforge

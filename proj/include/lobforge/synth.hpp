#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lobforge/explicit_model.hpp"
#include "lobforge/flow.hpp"

namespace lobforge {

/// Ground-truth generator parameters plus the book the session opens with.
struct SynthProfile {
  std::string name{"default"};
  ExplicitModelParams params;
  Ticks opening_bid{9999};
  Ticks opening_ask{10001};
  std::size_t opening_levels{15};
  std::size_t orders_per_level{12};

  void validate() const;
};

/// Built-in profile: a dense, balanced book with a mean inter-arrival of
/// about a quarter second.
SynthProfile default_synth_profile();
SynthProfile synth_profile_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthProfile& profile);
/// "default" or a path to a profile JSON file.
SynthProfile load_synth_profile(const std::string& name_or_path);

struct SynthConfig {
  std::uint64_t seed{1};
  std::size_t actions{100000};
  Nanos start{clock_time(9, 30)};
  SynthProfile profile{default_synth_profile()};
};

struct SynthResult {
  std::vector<FlowRecord> records;
  std::size_t opening_orders{0};
  std::size_t resampled{0};
};

/// Runs the profile's explicit model from the opening book for `actions`
/// actions. Actions that cannot apply to the current book are redrawn
/// without advancing the clock. actions = 0 gives an empty flow.
SynthResult synth_seed(const SynthConfig& config);

/// Writes the flow and `<path>.params.json` with the generating profile.
void write_synth(const std::filesystem::path& path, const SynthConfig& config, const SynthResult& result);

}  // namespace lobforge

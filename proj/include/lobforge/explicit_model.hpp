#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lobforge/action_codec.hpp"
#include "lobforge/agent.hpp"
#include "lobforge/dataset.hpp"
#include "lobforge/distributions.hpp"

namespace lobforge {

/// Index into per-type arrays; follows ActionKind order (LO, MO, CAN, REP).
constexpr std::size_t type_index(ActionKind k) noexcept { return static_cast<std::size_t>(k); }
constexpr std::size_t kTypeCount = 4;

/// Negative depths: magnitude - 1 ~ BetaBinomial(max_magnitude - 1).
struct NegativeDepthModel {
  Ticks max_magnitude{1};
  BetaBinomialParams magnitude;
};

/// Depths >= 0: empirical law on the observed support, plus a tail bucket
/// for depths beyond the 99.9th percentile sampled uniformly in [tail_lo, tail_hi].
struct PositiveDepthModel {
  std::vector<Ticks> support{0};
  std::vector<double> probs{1.0};
  double tail_prob{0.0};
  Ticks tail_lo{0};
  Ticks tail_hi{0};
};

/// Mixture of round lots (100 * (1 + NB)) and odd lots (NB on the index of
/// the quantity among the non-multiples of 100).
struct QuantityModel {
  double round_lot_prob{0.5};
  NegativeBinomialParams round_lot{1.0, 0.5};
  NegativeBinomialParams odd_lot{1.0, 0.02};
};

/// Maps odd quantities 1..99, 101..199, ... onto 0, 1, 2, ...
constexpr std::int64_t odd_lot_index(Shares q) noexcept { return q - 1 - q / 100; }
constexpr Shares odd_lot_from_index(std::int64_t m) noexcept { return m + 1 + m / 99; }

struct FitMetadata {
  std::string dataset_hash;
  std::size_t pairs{0};
  std::array<std::size_t, kTypeCount> type_counts{};
  std::size_t negative_depths{0};
  std::size_t positive_depths{0};
  std::size_t round_lots{0};
  std::size_t odd_lots{0};
  std::size_t interarrivals{0};
  std::vector<std::string> warnings;
};

struct ExplicitModelParams {
  std::array<double, kTypeCount> type_probs{0.25, 0.25, 0.25, 0.25};
  /// P(SELL | type, I5) = sigmoid(a + b * I5), per type.
  std::array<std::array<double, 2>, kTypeCount> side_logit{};
  /// P(depth < 0 | spread, I5) = sigmoid(a + b * spread + c * I5), spread in raw ticks.
  std::array<double, 3> neg_depth_logit{-3.0, 0.0, 0.0};
  NegativeDepthModel neg_depth;
  PositiveDepthModel pos_depth;
  QuantityModel quantity;
  /// [0] cancels, [1] replaces.
  std::array<NegativeBinomialParams, 2> cancel_depth{};
  std::array<BetaBinomialParams, 2> queue_position{};
  GammaParams interarrival{1.0, 1e9};
  ScalerBounds bounds;
  std::size_t window_depth{5};
  FitMetadata metadata;

  /// Throws ValidationError when an invariant is broken.
  void validate() const;
};

/// Throws ValidationError for an empty dataset. Branches without usable data
/// keep their defaults and add a warning to the metadata.
ExplicitModelParams fit_explicit_model(const Dataset& dataset);

double sell_probability(const ExplicitModelParams& params, ActionKind kind, double imbalance5) noexcept;
double negative_depth_probability(const ExplicitModelParams& params, double spread, double imbalance5) noexcept;

Ticks sample_depth(const ExplicitModelParams& params, const MarketStateVector& state, Rng& rng);
Shares sample_quantity(const QuantityModel& model, Rng& rng);
Ticks sample_positive_depth(const PositiveDepthModel& model, Rng& rng);

struct CancelTarget {
  Ticks depth{0};
  std::size_t queue_position{0};
};

/// Cancel depth and queue position for a CANCEL or REPLACE on `side`.
CancelTarget sample_cancel_target(const ExplicitModelParams& params, ActionKind kind, Side side, const Book& book,
                                  Rng& rng);

/// Type, then side, then the type's attributes. Cancel queue positions use
/// the live queue length at the sampled depth in `view.book`.
TimedAction sample_action(const ExplicitModelParams& params, const MarketView& view, Rng& rng);

class ExplicitAgent final : public WorldAgent {
 public:
  explicit ExplicitAgent(ExplicitModelParams params) : params_(std::move(params)) {}

  TimedAction next(const MarketView& view, Rng& rng) override { return sample_action(params_, view, rng); }
  std::string name() const override { return "explicit"; }
  const ExplicitModelParams& params() const noexcept { return params_; }

 private:
  ExplicitModelParams params_;
};

nlohmann::json to_json(const ScalerBounds& bounds);
ScalerBounds bounds_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExplicitModelParams& params);
ExplicitModelParams params_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const ExplicitModelParams& params);
ExplicitModelParams load_model(const std::filesystem::path& path);

}  // namespace lobforge

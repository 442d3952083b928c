#include "lobforge/agent.hpp"

#include <cmath>
#include <random>

namespace lobforge {

std::string_view to_string(ActionKind k) noexcept {
  switch (k) {
    case ActionKind::AddLimit: return "ADD_LIMIT";
    case ActionKind::Market: return "MARKET";
    case ActionKind::Cancel: return "CANCEL";
    case ActionKind::Replace: return "REPLACE";
  }
  return "UNKNOWN";
}

Action Action::normalized() const noexcept {
  Action a = *this;
  if (!uses_depth()) a.depth = 0;
  if (!uses_quantity()) a.quantity = 0;
  if (!uses_cancel()) {
    a.cancel_depth = 0;
    a.queue_position = 0;
  }
  return a;
}

std::optional<Ticks> depth_to_price(const Book& book, Side side, Ticks depth) noexcept {
  return book.depth_to_price(side, depth);
}

Nanos sample_interarrival(const GammaParams& params, Rng& rng) {
  if (!(params.shape > 0.0) || !(params.scale > 0.0))
    throw ValidationError("gamma parameters must be positive");
  std::gamma_distribution<double> dist(params.shape, params.scale);
  const double x = dist(rng);
  if (!(x >= 1.0)) return 1;
  if (x > 9.0e18) return static_cast<Nanos>(9.0e18);
  return static_cast<Nanos>(std::llround(x));
}

GammaParams fit_gamma(std::span<const double> samples) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double x : samples) {
    if (x > 0.0) {
      sum += x;
      ++n;
    }
  }
  if (n < 2) throw DegenerateDataError("gamma fit needs at least two positive samples");
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double x : samples)
    if (x > 0.0) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(n - 1);
  if (!(var > 0.0)) throw DegenerateDataError("gamma fit: zero variance");
  return {mean * mean / var, var / mean};
}

}  // namespace lobforge

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lobforge/rng.hpp"

namespace lobforge {

/// Failures before the r-th success, success probability p:
/// mean r(1-p)/p, variance r(1-p)/p^2. When the data is not overdispersed the
/// fit falls back to a Poisson with the empirical mean.
struct NegativeBinomialParams {
  double r{1.0};
  double p{0.5};
  bool poisson{false};
  double poisson_mean{0.0};

  double mean() const noexcept { return poisson ? poisson_mean : r * (1.0 - p) / p; }
  double variance() const noexcept { return poisson ? poisson_mean : r * (1.0 - p) / (p * p); }
};

NegativeBinomialParams fit_negative_binomial(std::span<const double> samples);
std::int64_t sample(const NegativeBinomialParams& params, Rng& rng);
double pmf(const NegativeBinomialParams& params, std::int64_t k);

/// Beta-binomial mixing law. The number of trials is supplied at sampling
/// time so one fit can serve queues of different lengths.
struct BetaBinomialParams {
  enum class Fit : std::uint8_t { MomentMatched, BinomialLimit, Uniform };

  double alpha{1.0};
  double beta{1.0};
  Fit fit{Fit::Uniform};

  double mean_fraction() const noexcept { return alpha / (alpha + beta); }
  double mean(std::int64_t trials) const noexcept { return static_cast<double>(trials) * mean_fraction(); }
};

/// Samples in {0..trials}. Underdispersed data maps to a near-binomial law
/// (alpha + beta = 1e6); overdispersion beyond the beta-binomial range falls
/// back to alpha = beta = 1.
BetaBinomialParams fit_beta_binomial(std::span<const double> samples, std::int64_t trials);
/// Each observation i is successes[i] out of trials[i]; entries with zero
/// trials carry no information and are skipped.
BetaBinomialParams fit_beta_binomial(std::span<const double> successes, std::span<const double> trials);
std::int64_t sample(const BetaBinomialParams& params, std::int64_t trials, Rng& rng);
double pmf(const BetaBinomialParams& params, std::int64_t trials, std::int64_t k);

double sigmoid(double x) noexcept;

struct LogisticFit {
  std::vector<double> coefficients;  // intercept first
  bool capped{false};
  bool converged{false};
  int iterations{0};
};

constexpr double kLogisticCoefficientCap = 20.0;

/// Bernoulli maximum likelihood by damped Newton iterations. `features` is
/// row-major with `width` columns (no intercept column). Stops when the mean
/// gradient norm drops below 1e-8 or after 100 iterations. Coefficients are
/// capped at |20|. Throws DegenerateDataError unless both labels occur.
LogisticFit fit_logistic(std::span<const double> features, std::size_t width, std::span<const int> labels);

std::size_t sample_categorical(std::span<const double> probs, Rng& rng);

}  // namespace lobforge

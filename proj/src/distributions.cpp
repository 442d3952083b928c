#include "lobforge/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "lobforge/agent.hpp"

namespace lobforge {

namespace {

constexpr double kBinomialLimitConcentration = 1e6;

struct Moments {
  double mean{0.0};
  double variance{0.0};
  std::size_t n{0};
};

Moments moments(std::span<const double> xs) {
  Moments m;
  m.n = xs.size();
  if (m.n == 0) return m;
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / static_cast<double>(m.n);
  if (m.n < 2) return m;
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.variance = ss / static_cast<double>(m.n - 1);
  return m;
}

double draw_gamma(double shape, Rng& rng) {
  std::gamma_distribution<double> dist(shape, 1.0);
  return dist(rng);
}

std::int64_t draw_poisson(double mean, Rng& rng) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(rng);
}

BetaBinomialParams binomial_limit(double pi) {
  pi = std::clamp(pi, 1e-6, 1.0 - 1e-6);
  return {pi * kBinomialLimitConcentration, (1.0 - pi) * kBinomialLimitConcentration,
          BetaBinomialParams::Fit::BinomialLimit};
}

}  // namespace

NegativeBinomialParams fit_negative_binomial(std::span<const double> samples) {
  if (samples.size() < 2) throw DegenerateDataError("negative binomial fit needs at least two samples");
  const Moments m = moments(samples);
  NegativeBinomialParams out;
  if (m.variance <= m.mean || m.mean <= 0.0) {
    out.poisson = true;
    out.poisson_mean = std::max(m.mean, 0.0);
    return out;
  }
  out.p = m.mean / m.variance;
  out.r = m.mean * m.mean / (m.variance - m.mean);
  return out;
}

std::int64_t sample(const NegativeBinomialParams& params, Rng& rng) {
  if (params.poisson) return draw_poisson(params.poisson_mean, rng);
  const double lambda = draw_gamma(params.r, rng) * (1.0 - params.p) / params.p;
  return draw_poisson(lambda, rng);
}

double pmf(const NegativeBinomialParams& params, std::int64_t k) {
  if (k < 0) return 0.0;
  const double kd = static_cast<double>(k);
  if (params.poisson) {
    if (params.poisson_mean <= 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(kd * std::log(params.poisson_mean) - params.poisson_mean - std::lgamma(kd + 1.0));
  }
  return std::exp(std::lgamma(kd + params.r) - std::lgamma(params.r) - std::lgamma(kd + 1.0) +
                  params.r * std::log(params.p) + kd * std::log1p(-params.p));
}

BetaBinomialParams fit_beta_binomial(std::span<const double> samples, std::int64_t trials) {
  std::vector<double> n(samples.size(), static_cast<double>(trials));
  return fit_beta_binomial(samples, n);
}

BetaBinomialParams fit_beta_binomial(std::span<const double> successes, std::span<const double> trials) {
  std::vector<double> fractions;
  double inv_trials = 0.0;
  for (std::size_t i = 0; i < successes.size() && i < trials.size(); ++i) {
    if (trials[i] <= 0.0) continue;
    fractions.push_back(successes[i] / trials[i]);
    inv_trials += 1.0 / trials[i];
  }
  if (fractions.size() < 2) throw DegenerateDataError("beta-binomial fit needs at least two informative samples");
  const Moments m = moments(fractions);
  const double h = inv_trials / static_cast<double>(fractions.size());
  const double pi = m.mean;
  const double binom = pi * (1.0 - pi);
  if (binom <= 0.0 || h >= 1.0) return binomial_limit(pi);
  // Var(x/N) = pi(1-pi) [1/N + rho (1 - 1/N)], rho = 1 / (alpha + beta + 1).
  const double rho = (m.variance / binom - h) / (1.0 - h);
  if (rho <= 0.0) return binomial_limit(pi);
  if (rho >= 1.0) return {1.0, 1.0, BetaBinomialParams::Fit::Uniform};
  const double concentration = 1.0 / rho - 1.0;
  return {pi * concentration, (1.0 - pi) * concentration, BetaBinomialParams::Fit::MomentMatched};
}

std::int64_t sample(const BetaBinomialParams& params, std::int64_t trials, Rng& rng) {
  if (trials <= 0) return 0;
  const double x = draw_gamma(params.alpha, rng);
  const double y = draw_gamma(params.beta, rng);
  double p = x + y > 0.0 ? x / (x + y) : (rng.uniform() < params.mean_fraction() ? 1.0 : 0.0);
  p = std::clamp(p, 0.0, 1.0);
  std::binomial_distribution<std::int64_t> dist(trials, p);
  return dist(rng);
}

double pmf(const BetaBinomialParams& params, std::int64_t trials, std::int64_t k) {
  if (k < 0 || k > trials) return 0.0;
  const double n = static_cast<double>(trials);
  const double kd = static_cast<double>(k);
  const double a = params.alpha;
  const double b = params.beta;
  auto lbeta = [](double u, double v) { return std::lgamma(u) + std::lgamma(v) - std::lgamma(u + v); };
  const double log_choose = std::lgamma(n + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(n - kd + 1.0);
  return std::exp(log_choose + lbeta(kd + a, n - kd + b) - lbeta(a, b));
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

LogisticFit fit_logistic(std::span<const double> features, std::size_t width, std::span<const int> labels) {
  const std::size_t n = labels.size();
  if (features.size() != n * width) throw ValidationError("logistic fit: feature matrix shape mismatch");
  const auto positives = std::count_if(labels.begin(), labels.end(), [](int y) { return y != 0; });
  if (positives == 0 || static_cast<std::size_t>(positives) == n)
    throw DegenerateDataError("logistic fit needs both labels");

  const Eigen::Index dim = static_cast<Eigen::Index>(width + 1);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), dim);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    x(row, 0) = 1.0;
    for (std::size_t j = 0; j < width; ++j) x(row, static_cast<Eigen::Index>(j + 1)) = features[i * width + j];
    y(row) = labels[i] != 0 ? 1.0 : 0.0;
  }

  auto log_likelihood = [&](const Eigen::VectorXd& w) {
    const Eigen::VectorXd z = x * w;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      // log sigmoid(z) = -log1p(exp(-z)), computed stably.
      const double zi = z(i);
      const double log1pexp = zi > 0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi));
      ll += y(i) * zi - log1pexp;
    }
    return ll / static_cast<double>(n);
  };

  Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
  LogisticFit fit;
  double ll = log_likelihood(w);
  for (fit.iterations = 0; fit.iterations < 100; ++fit.iterations) {
    const Eigen::VectorXd z = x * w;
    Eigen::VectorXd mu(z.size());
    Eigen::VectorXd weight(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      mu(i) = sigmoid(z(i));
      weight(i) = mu(i) * (1.0 - mu(i));
    }
    const Eigen::VectorXd grad = x.transpose() * (y - mu) / static_cast<double>(n);
    // Free coordinates sitting at the cap with an outward gradient do not count.
    Eigen::VectorXd free_grad = grad;
    for (Eigen::Index j = 0; j < dim; ++j)
      if (std::abs(w(j)) >= kLogisticCoefficientCap && grad(j) * w(j) > 0.0) free_grad(j) = 0.0;
    if (free_grad.norm() < 1e-8) {
      fit.converged = true;
      break;
    }
    Eigen::MatrixXd hessian = x.transpose() * weight.asDiagonal() * x / static_cast<double>(n);
    hessian += 1e-12 * Eigen::MatrixXd::Identity(dim, dim);
    const Eigen::VectorXd step = hessian.ldlt().solve(grad);
    double t = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
      Eigen::VectorXd candidate = w + t * step;
      for (Eigen::Index j = 0; j < dim; ++j)
        candidate(j) = std::clamp(candidate(j), -kLogisticCoefficientCap, kLogisticCoefficientCap);
      const double candidate_ll = log_likelihood(candidate);
      if (candidate_ll >= ll) {
        improved = candidate_ll > ll || (candidate - w).norm() > 0.0;
        w = candidate;
        ll = candidate_ll;
        break;
      }
    }
    if (!improved) break;
  }
  fit.coefficients.assign(w.data(), w.data() + w.size());
  fit.capped = std::any_of(fit.coefficients.begin(), fit.coefficients.end(),
                           [](double c) { return std::abs(c) >= kLogisticCoefficientCap; });
  return fit;
}

std::size_t sample_categorical(std::span<const double> probs, Rng& rng) {
  double total = 0.0;
  for (double p : probs) total += p;
  const double u = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Rounding at the top end: return the last index with positive mass.
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return i;
  return 0;
}

}  // namespace lobforge

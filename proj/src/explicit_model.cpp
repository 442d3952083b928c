#include "lobforge/explicit_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <spdlog/spdlog.h>

namespace lobforge {

namespace {

constexpr double kRateClamp = 1e-6;

double logit(double p) {
  p = std::clamp(p, kRateClamp, 1.0 - kRateClamp);
  return std::log(p / (1.0 - p));
}

std::string branch_name(std::size_t t) {
  static constexpr const char* kNames[] = {"LO", "MO", "CAN", "REP"};
  return kNames[t];
}

/// Logistic fit that degrades to an intercept-only model when one label is
/// missing. Returns `width + 1` coefficients.
std::vector<double> fit_or_intercept(std::span<const double> features, std::size_t width, std::span<const int> labels,
                                     const std::string& what, std::vector<std::string>& warnings) {
  std::vector<double> coef(width + 1, 0.0);
  if (labels.empty()) {
    warnings.push_back(what + ": no data, using defaults");
    return coef;
  }
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(labels.size())) {
    warnings.push_back(what + ": single label, intercept only");
    coef[0] = logit(static_cast<double>(positives) / static_cast<double>(labels.size()));
    return coef;
  }
  LogisticFit fit = fit_logistic(features, width, labels);
  if (fit.capped) warnings.push_back(what + ": separable data, coefficients capped");
  if (!fit.converged) warnings.push_back(what + ": logistic fit did not converge");
  return fit.coefficients;
}

template <typename Fn>
auto fit_or_default(Fn&& fn, decltype(fn()) fallback, const std::string& what, std::vector<std::string>& warnings) {
  try {
    return fn();
  } catch (const DegenerateDataError& e) {
    warnings.push_back(what + ": " + e.what() + ", using defaults");
    return fallback;
  }
}

PositiveDepthModel fit_positive_depth(std::vector<Ticks> depths) {
  PositiveDepthModel m;
  if (depths.empty()) return m;
  std::sort(depths.begin(), depths.end());
  const std::size_t n = depths.size();
  const auto rank = static_cast<std::size_t>(std::ceil(0.999 * static_cast<double>(n)));
  const Ticks cutoff = depths[std::max<std::size_t>(rank, 1) - 1];
  std::map<Ticks, std::size_t> counts;
  std::size_t tail = 0;
  for (Ticks d : depths) {
    if (d <= cutoff) ++counts[d];
    else ++tail;
  }
  m.support.clear();
  m.probs.clear();
  for (const auto& [d, c] : counts) {
    m.support.push_back(d);
    m.probs.push_back(static_cast<double>(c) / static_cast<double>(n));
  }
  if (tail > 0) {
    m.tail_prob = static_cast<double>(tail) / static_cast<double>(n);
    m.tail_lo = cutoff + 1;
    m.tail_hi = depths.back();
  }
  return m;
}

}  // namespace

void ExplicitModelParams::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ValidationError("invalid model: " + what);
  };
  double total = 0.0;
  for (double p : type_probs) {
    require(p >= 0.0 && p <= 1.0, "type probability outside [0,1]");
    total += p;
  }
  require(std::abs(total - 1.0) < 1e-9, "type probabilities do not sum to 1");
  auto check_nb = [&](const NegativeBinomialParams& nb, const std::string& what) {
    if (nb.poisson) require(nb.poisson_mean >= 0.0, what + " poisson mean negative");
    else require(nb.r > 0.0 && nb.p > 0.0 && nb.p < 1.0, what + " needs r > 0 and 0 < p < 1");
  };
  auto check_bb = [&](const BetaBinomialParams& bb, const std::string& what) {
    require(bb.alpha > 0.0 && bb.beta > 0.0, what + " needs alpha, beta > 0");
  };
  check_nb(quantity.round_lot, "round-lot quantity");
  check_nb(quantity.odd_lot, "odd-lot quantity");
  require(quantity.round_lot_prob >= 0.0 && quantity.round_lot_prob <= 1.0, "round-lot probability");
  check_nb(cancel_depth[0], "cancel depth");
  check_nb(cancel_depth[1], "replace cancel depth");
  check_bb(queue_position[0], "cancel queue position");
  check_bb(queue_position[1], "replace queue position");
  check_bb(neg_depth.magnitude, "negative depth");
  require(neg_depth.max_magnitude >= 1, "negative depth support");
  require(!pos_depth.support.empty() && pos_depth.support.size() == pos_depth.probs.size(), "positive depth support");
  double pos_total = pos_depth.tail_prob;
  for (std::size_t i = 0; i < pos_depth.probs.size(); ++i) {
    require(pos_depth.probs[i] >= 0.0 && pos_depth.support[i] >= 0, "positive depth probabilities");
    pos_total += pos_depth.probs[i];
  }
  require(std::abs(pos_total - 1.0) < 1e-9, "positive depth probabilities do not sum to 1");
  require(pos_depth.tail_prob == 0.0 || pos_depth.tail_lo <= pos_depth.tail_hi, "positive depth tail");
  require(interarrival.shape > 0.0 && interarrival.scale > 0.0, "gamma parameters");
  require(bounds.valid(), "scaler bounds");
  require(window_depth >= 1, "window depth");
}

ExplicitModelParams fit_explicit_model(const Dataset& dataset) {
  if (dataset.pairs.empty()) throw ValidationError("cannot fit on an empty dataset");
  ExplicitModelParams m;
  FitMetadata& meta = m.metadata;
  auto& warnings = meta.warnings;
  meta.dataset_hash = dataset_hash(dataset);
  meta.pairs = dataset.pairs.size();
  m.window_depth = dataset.window_depth;
  m.bounds = fit_bounds(dataset);

  std::array<std::vector<double>, kTypeCount> side_x;
  std::array<std::vector<int>, kTypeCount> side_y;
  std::vector<double> depth_x;
  std::vector<int> depth_y;
  std::vector<double> neg_magnitudes;
  std::vector<Ticks> pos_depths;
  std::vector<double> round_lots, odd_lots;
  std::array<std::vector<double>, 2> cancel_depths, queue_positions, queue_trials;
  std::vector<double> dts;

  for (const StateActionPair& p : dataset.pairs) {
    const Action& a = p.action;
    const std::size_t t = type_index(a.kind);
    const MarketStateVector& s = p.window.back();
    ++meta.type_counts[t];
    side_x[t].push_back(s.imbalance5);
    side_y[t].push_back(a.side == Side::Ask ? 1 : 0);
    if (a.uses_depth() && p.depth_defined) {
      depth_x.push_back(s.spread);
      depth_x.push_back(s.imbalance5);
      depth_y.push_back(a.depth < 0 ? 1 : 0);
      if (a.depth < 0) neg_magnitudes.push_back(static_cast<double>(-a.depth));
      else pos_depths.push_back(a.depth);
    }
    if (a.uses_quantity()) {
      if (a.quantity % 100 == 0) round_lots.push_back(static_cast<double>(a.quantity / 100 - 1));
      else odd_lots.push_back(static_cast<double>(odd_lot_index(a.quantity)));
    }
    if (a.uses_cancel()) {
      const std::size_t b = a.kind == ActionKind::Cancel ? 0 : 1;
      cancel_depths[b].push_back(static_cast<double>(a.cancel_depth));
      if (p.queue_length >= 1) {
        queue_positions[b].push_back(static_cast<double>(a.queue_position));
        queue_trials[b].push_back(static_cast<double>(p.queue_length - 1));
      }
    }
    if (p.dt > 0) dts.push_back(static_cast<double>(p.dt));
  }

  const double n = static_cast<double>(dataset.pairs.size());
  for (std::size_t t = 0; t < kTypeCount; ++t) {
    m.type_probs[t] = static_cast<double>(meta.type_counts[t]) / n;
    if (meta.type_counts[t] == 0) warnings.push_back(branch_name(t) + ": no actions of this type, branch uses defaults");
    const auto coef = fit_or_intercept(side_x[t], 1, side_y[t], branch_name(t) + " side", warnings);
    m.side_logit[t] = {coef[0], coef[1]};
  }

  const auto depth_coef = fit_or_intercept(depth_x, 2, depth_y, "negative depth", warnings);
  if (!depth_y.empty()) m.neg_depth_logit = {depth_coef[0], depth_coef[1], depth_coef[2]};
  meta.negative_depths = neg_magnitudes.size();
  meta.positive_depths = pos_depths.size();

  if (!neg_magnitudes.empty()) {
    const double top = *std::max_element(neg_magnitudes.begin(), neg_magnitudes.end());
    m.neg_depth.max_magnitude = static_cast<Ticks>(top);
    if (m.neg_depth.max_magnitude > 1) {
      std::vector<double> shifted;
      shifted.reserve(neg_magnitudes.size());
      for (double v : neg_magnitudes) shifted.push_back(v - 1.0);
      m.neg_depth.magnitude = fit_or_default(
          [&] { return fit_beta_binomial(shifted, m.neg_depth.max_magnitude - 1); }, BetaBinomialParams{},
          "negative depth magnitude", warnings);
    }
  }
  if (pos_depths.empty()) warnings.push_back("positive depth: no data, using depth 0");
  m.pos_depth = fit_positive_depth(std::move(pos_depths));

  meta.round_lots = round_lots.size();
  meta.odd_lots = odd_lots.size();
  const double qty_total = static_cast<double>(round_lots.size() + odd_lots.size());
  if (qty_total > 0) m.quantity.round_lot_prob = static_cast<double>(round_lots.size()) / qty_total;
  m.quantity.round_lot = fit_or_default([&] { return fit_negative_binomial(round_lots); }, m.quantity.round_lot,
                                        "round-lot quantity", warnings);
  m.quantity.odd_lot = fit_or_default([&] { return fit_negative_binomial(odd_lots); }, m.quantity.odd_lot,
                                      "odd-lot quantity", warnings);

  for (std::size_t b = 0; b < 2; ++b) {
    const std::string what = b == 0 ? "CAN" : "REP";
    m.cancel_depth[b] = fit_or_default([&] { return fit_negative_binomial(cancel_depths[b]); },
                                       NegativeBinomialParams{}, what + " cancel depth", warnings);
    m.queue_position[b] = fit_or_default([&] { return fit_beta_binomial(queue_positions[b], queue_trials[b]); },
                                         BetaBinomialParams{}, what + " queue position", warnings);
  }

  meta.interarrivals = dts.size();
  try {
    m.interarrival = fit_gamma(dts);
  } catch (const DegenerateDataError& e) {
    warnings.push_back(std::string("inter-arrival: ") + e.what());
    if (!dts.empty()) m.interarrival = {1e6, dts.front() / 1e6};
  }

  for (const auto& w : warnings) spdlog::warn("fit: {}", w);
  m.validate();
  return m;
}

double sell_probability(const ExplicitModelParams& params, ActionKind kind, double imbalance5) noexcept {
  const auto& c = params.side_logit[type_index(kind)];
  return sigmoid(c[0] + c[1] * imbalance5);
}

double negative_depth_probability(const ExplicitModelParams& params, double spread, double imbalance5) noexcept {
  const auto& c = params.neg_depth_logit;
  return sigmoid(c[0] + c[1] * spread + c[2] * imbalance5);
}

Ticks sample_positive_depth(const PositiveDepthModel& model, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < model.probs.size(); ++i) {
    acc += model.probs[i];
    if (u < acc) return model.support[i];
  }
  if (model.tail_prob > 0.0) {
    std::uniform_int_distribution<Ticks> tail(model.tail_lo, model.tail_hi);
    return tail(rng);
  }
  return model.support.back();
}

Ticks sample_depth(const ExplicitModelParams& params, const MarketStateVector& state, Rng& rng) {
  if (rng.uniform() < negative_depth_probability(params, state.spread, state.imbalance5))
    return -(1 + sample(params.neg_depth.magnitude, params.neg_depth.max_magnitude - 1, rng));
  return sample_positive_depth(params.pos_depth, rng);
}

Shares sample_quantity(const QuantityModel& model, Rng& rng) {
  if (rng.uniform() < model.round_lot_prob) return 100 * (1 + sample(model.round_lot, rng));
  return odd_lot_from_index(sample(model.odd_lot, rng));
}

CancelTarget sample_cancel_target(const ExplicitModelParams& params, ActionKind kind, Side side, const Book& book,
                                  Rng& rng) {
  const std::size_t b = kind == ActionKind::Cancel ? 0 : 1;
  CancelTarget target;
  target.depth = sample(params.cancel_depth[b], rng);
  std::size_t length = 0;
  if (const auto price = book.depth_to_price(side, target.depth)) length = book.queue_length(side, *price);
  target.queue_position = draw_queue_position(params.queue_position[b], length, rng);
  return target;
}

TimedAction sample_action(const ExplicitModelParams& params, const MarketView& view, Rng& rng) {
  const MarketStateVector& s = view.window.latest();
  const auto kind = static_cast<ActionKind>(sample_categorical(params.type_probs, rng));
  const Side side = rng.uniform() < sell_probability(params, kind, s.imbalance5) ? Side::Ask : Side::Bid;

  TimedAction out;
  switch (kind) {
    case ActionKind::AddLimit: {
      const Ticks depth = sample_depth(params, s, rng);
      out.action = Action::add_limit(side, depth, sample_quantity(params.quantity, rng));
      break;
    }
    case ActionKind::Market:
      out.action = Action::market(side, sample_quantity(params.quantity, rng));
      break;
    case ActionKind::Cancel:
      out.action = Action::cancel(side, 0, 0);
      break;
    case ActionKind::Replace: {
      const Ticks depth = sample_depth(params, s, rng);
      out.action = Action::replace(side, 0, 0, depth, sample_quantity(params.quantity, rng));
      break;
    }
  }
  if (out.action.uses_cancel()) {
    const CancelTarget target = sample_cancel_target(params, kind, side, view.book, rng);
    out.action.cancel_depth = target.depth;
    out.action.queue_position = target.queue_position;
  }
  out.dt = sample_interarrival(params.interarrival, rng);
  return out;
}

namespace {

using nlohmann::json;

json nb_json(const NegativeBinomialParams& nb) {
  return {{"r", nb.r}, {"p", nb.p}, {"poisson", nb.poisson}, {"poisson_mean", nb.poisson_mean}};
}

NegativeBinomialParams nb_from(const json& j) {
  NegativeBinomialParams nb;
  nb.r = j.at("r").get<double>();
  nb.p = j.at("p").get<double>();
  nb.poisson = j.at("poisson").get<bool>();
  nb.poisson_mean = j.at("poisson_mean").get<double>();
  return nb;
}

std::string_view fit_name(BetaBinomialParams::Fit f) {
  switch (f) {
    case BetaBinomialParams::Fit::MomentMatched: return "moment";
    case BetaBinomialParams::Fit::BinomialLimit: return "binomial_limit";
    case BetaBinomialParams::Fit::Uniform: return "uniform";
  }
  return "uniform";
}

json bb_json(const BetaBinomialParams& bb) {
  return {{"alpha", bb.alpha}, {"beta", bb.beta}, {"fit", fit_name(bb.fit)}};
}

BetaBinomialParams bb_from(const json& j) {
  BetaBinomialParams bb;
  bb.alpha = j.at("alpha").get<double>();
  bb.beta = j.at("beta").get<double>();
  const auto fit = j.at("fit").get<std::string>();
  if (fit == "moment") bb.fit = BetaBinomialParams::Fit::MomentMatched;
  else if (fit == "binomial_limit") bb.fit = BetaBinomialParams::Fit::BinomialLimit;
  else if (fit == "uniform") bb.fit = BetaBinomialParams::Fit::Uniform;
  else throw ValidationError("unknown beta-binomial fit '" + fit + "'");
  return bb;
}

json range_json(const Range& r) { return json::array({r.min, r.max}); }

Range range_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("scaler bound must be [min, max]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

nlohmann::json to_json(const ScalerBounds& b) {
  return {{"depth", range_json(b.depth)},       {"cancel_depth", range_json(b.cancel_depth)},
          {"qty_x", range_json(b.qty_x)},       {"qty_100x", range_json(b.qty_100x)},
          {"volume1", range_json(b.volume1)},   {"volume5", range_json(b.volume5)},
          {"spread", range_json(b.spread)}};
}

ScalerBounds bounds_from_json(const nlohmann::json& j) {
  ScalerBounds b;
  b.depth = range_from(j.at("depth"));
  b.cancel_depth = range_from(j.at("cancel_depth"));
  b.qty_x = range_from(j.at("qty_x"));
  b.qty_100x = range_from(j.at("qty_100x"));
  b.volume1 = range_from(j.at("volume1"));
  b.volume5 = range_from(j.at("volume5"));
  b.spread = range_from(j.at("spread"));
  if (!b.valid()) throw ValidationError("scaler bounds need min < max");
  return b;
}

nlohmann::json to_json(const ExplicitModelParams& m) {
  json side = json::array();
  for (const auto& c : m.side_logit) side.push_back({c[0], c[1]});
  const FitMetadata& meta = m.metadata;
  return {
      {"format", "lobforge-explicit-model"},
      {"version", "v1"},
      {"types", {"LO", "MO", "CAN", "REP"}},
      {"type_probs", m.type_probs},
      {"side_logit", side},
      {"side_logit_feature", "i5"},
      {"neg_depth_logit", m.neg_depth_logit},
      {"neg_depth_logit_features", {"spread_ticks", "i5"}},
      {"neg_depth_betabinom",
       {{"n", m.neg_depth.max_magnitude}, {"alpha", m.neg_depth.magnitude.alpha},
        {"beta", m.neg_depth.magnitude.beta}, {"fit", fit_name(m.neg_depth.magnitude.fit)}}},
      {"pos_depth_multinomial",
       {{"support", m.pos_depth.support},
        {"probs", m.pos_depth.probs},
        {"tail_prob", m.pos_depth.tail_prob},
        {"tail_lo", m.pos_depth.tail_lo},
        {"tail_hi", m.pos_depth.tail_hi}}},
      {"qty_mult100_prob", m.quantity.round_lot_prob},
      {"qty_mult100_nb", nb_json(m.quantity.round_lot)},
      {"qty_other_nb", nb_json(m.quantity.odd_lot)},
      {"cancel_depth_nb", {{"CAN", nb_json(m.cancel_depth[0])}, {"REP", nb_json(m.cancel_depth[1])}}},
      {"queue_pos_betabinom", {{"CAN", bb_json(m.queue_position[0])}, {"REP", bb_json(m.queue_position[1])}}},
      {"gamma", {{"shape", m.interarrival.shape}, {"scale_ns", m.interarrival.scale}}},
      {"bounds", to_json(m.bounds)},
      {"window_depth", m.window_depth},
      {"metadata",
       {{"dataset_hash", meta.dataset_hash},
        {"pairs", meta.pairs},
        {"type_counts", meta.type_counts},
        {"negative_depths", meta.negative_depths},
        {"positive_depths", meta.positive_depths},
        {"round_lots", meta.round_lots},
        {"odd_lots", meta.odd_lots},
        {"interarrivals", meta.interarrivals},
        {"warnings", meta.warnings}}},
  };
}

ExplicitModelParams params_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "lobforge-explicit-model") throw ValidationError("not an explicit model file");
    if (j.value("version", "") != "v1") throw ValidationError("unsupported model version");
    ExplicitModelParams m;
    m.type_probs = j.at("type_probs").get<std::array<double, kTypeCount>>();
    const auto& side = j.at("side_logit");
    if (!side.is_array() || side.size() != kTypeCount) throw ValidationError("side_logit needs 4 entries");
    for (std::size_t t = 0; t < kTypeCount; ++t) m.side_logit[t] = side[t].get<std::array<double, 2>>();
    m.neg_depth_logit = j.at("neg_depth_logit").get<std::array<double, 3>>();
    const auto& nd = j.at("neg_depth_betabinom");
    m.neg_depth.max_magnitude = nd.at("n").get<Ticks>();
    m.neg_depth.magnitude = bb_from(nd);
    const auto& pd = j.at("pos_depth_multinomial");
    m.pos_depth.support = pd.at("support").get<std::vector<Ticks>>();
    m.pos_depth.probs = pd.at("probs").get<std::vector<double>>();
    m.pos_depth.tail_prob = pd.at("tail_prob").get<double>();
    m.pos_depth.tail_lo = pd.at("tail_lo").get<Ticks>();
    m.pos_depth.tail_hi = pd.at("tail_hi").get<Ticks>();
    m.quantity.round_lot_prob = j.at("qty_mult100_prob").get<double>();
    m.quantity.round_lot = nb_from(j.at("qty_mult100_nb"));
    m.quantity.odd_lot = nb_from(j.at("qty_other_nb"));
    m.cancel_depth = {nb_from(j.at("cancel_depth_nb").at("CAN")), nb_from(j.at("cancel_depth_nb").at("REP"))};
    m.queue_position = {bb_from(j.at("queue_pos_betabinom").at("CAN")),
                        bb_from(j.at("queue_pos_betabinom").at("REP"))};
    m.interarrival = {j.at("gamma").at("shape").get<double>(), j.at("gamma").at("scale_ns").get<double>()};
    m.bounds = bounds_from_json(j.at("bounds"));
    m.window_depth = j.at("window_depth").get<std::size_t>();
    if (j.contains("metadata")) {
      const auto& meta = j.at("metadata");
      m.metadata.dataset_hash = meta.value("dataset_hash", "");
      m.metadata.pairs = meta.value("pairs", std::size_t{0});
      if (meta.contains("type_counts"))
        m.metadata.type_counts = meta.at("type_counts").get<std::array<std::size_t, kTypeCount>>();
      m.metadata.negative_depths = meta.value("negative_depths", std::size_t{0});
      m.metadata.positive_depths = meta.value("positive_depths", std::size_t{0});
      m.metadata.round_lots = meta.value("round_lots", std::size_t{0});
      m.metadata.odd_lots = meta.value("odd_lots", std::size_t{0});
      m.metadata.interarrivals = meta.value("interarrivals", std::size_t{0});
      m.metadata.warnings = meta.value("warnings", std::vector<std::string>{});
    }
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const ExplicitModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write model " + path.string());
  out << to_json(params).dump(2) << '\n';
  if (!out) throw RuntimeError("error writing model " + path.string());
}

ExplicitModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open model " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad model file " + path.string() + ": " + e.what());
  }
  return params_from_json(j);
}

}  // namespace lobforge

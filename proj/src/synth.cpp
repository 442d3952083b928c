#include "lobforge/synth.hpp"

#include <fstream>
#include <limits>

#include "lobforge/sim_kernel.hpp"

namespace lobforge {

void SynthProfile::validate() const {
  params.validate();
  if (opening_bid <= 0 || opening_ask <= opening_bid) throw ValidationError("synth profile: bad opening quotes");
  if (opening_levels == 0 || orders_per_level == 0) throw ValidationError("synth profile: empty opening book");
  if (opening_bid < static_cast<Ticks>(opening_levels)) throw ValidationError("synth profile: opening book below 1 tick");
}

SynthProfile default_synth_profile() {
  SynthProfile p;
  ExplicitModelParams& m = p.params;
  m.type_probs = {0.46, 0.04, 0.38, 0.12};
  m.side_logit = {{{-2.0, 4.0}, {-1.0, 2.0}, {2.0, -4.0}, {1.0, -2.0}}};
  m.neg_depth_logit = {-3.5, 0.6, 0.0};
  m.neg_depth.max_magnitude = 3;
  m.neg_depth.magnitude = {1.0, 3.0, BetaBinomialParams::Fit::MomentMatched};
  m.pos_depth.support = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  // Geometric with ratio 0.6, truncated at depth 9.
  m.pos_depth.probs.clear();
  double weight = 1.0, total = 0.0;
  for (std::size_t d = 0; d < m.pos_depth.support.size(); ++d, weight *= 0.6) {
    m.pos_depth.probs.push_back(weight);
    total += weight;
  }
  for (double& p : m.pos_depth.probs) p /= total;
  m.quantity.round_lot_prob = 0.7;
  m.quantity.round_lot = {2.0, 0.6};
  m.quantity.odd_lot = {1.5, 0.02};
  m.cancel_depth = {NegativeBinomialParams{1.5, 0.5}, NegativeBinomialParams{1.5, 0.55}};
  m.queue_position = {BetaBinomialParams{2.0, 2.0, BetaBinomialParams::Fit::MomentMatched},
                      BetaBinomialParams{1.5, 3.0, BetaBinomialParams::Fit::MomentMatched}};
  m.interarrival = {0.6, 0.4e9};
  m.window_depth = 5;
  return p;
}

nlohmann::json to_json(const SynthProfile& p) {
  return {{"format", "lobforge-synth-profile"},
          {"version", "v1"},
          {"name", p.name},
          {"opening_bid", p.opening_bid},
          {"opening_ask", p.opening_ask},
          {"opening_levels", p.opening_levels},
          {"orders_per_level", p.orders_per_level},
          {"params", to_json(p.params)}};
}

SynthProfile synth_profile_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "lobforge-synth-profile") throw ValidationError("not a synth profile");
    SynthProfile p;
    p.name = j.value("name", "custom");
    p.opening_bid = j.at("opening_bid").get<Ticks>();
    p.opening_ask = j.at("opening_ask").get<Ticks>();
    p.opening_levels = j.at("opening_levels").get<std::size_t>();
    p.orders_per_level = j.at("orders_per_level").get<std::size_t>();
    p.params = params_from_json(j.at("params"));
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad synth profile: ") + e.what());
  }
}

SynthProfile load_synth_profile(const std::string& name_or_path) {
  if (name_or_path == "default") return default_synth_profile();
  std::ifstream in(name_or_path);
  if (!in) throw ValidationError("unknown synth profile '" + name_or_path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bad synth profile " + name_or_path + ": " + e.what());
  }
  return synth_profile_from_json(j);
}

namespace {

bool applicable(const Action& a, const Book& book) {
  switch (a.kind) {
    case ActionKind::AddLimit:
      return true;
    case ActionKind::Market:
      return !book.empty(opposite(a.side));
    case ActionKind::Cancel:
    case ActionKind::Replace: {
      const auto price = book.depth_to_price(a.side, a.cancel_depth);
      return price && book.level(a.side, *price) != nullptr;
    }
  }
  return false;
}

/// Redraws whole actions until one applies to the current book. The clock
/// only advances for the accepted draw.
class ResamplingAgent final : public WorldAgent {
 public:
  explicit ResamplingAgent(const ExplicitModelParams& params) : params_(params) {}

  TimedAction next(const MarketView& view, Rng& rng) override {
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      TimedAction t = sample_action(params_, view, rng);
      if (applicable(t.action, view.book)) return t;
      ++resampled_;
    }
    throw RuntimeError("synth: no applicable action after repeated draws");
  }
  std::string name() const override { return "synth"; }
  std::size_t resampled() const noexcept { return resampled_; }

 private:
  static constexpr int kMaxAttempts = 10000;
  const ExplicitModelParams& params_;
  std::size_t resampled_{0};
};

}  // namespace

SynthResult synth_seed(const SynthConfig& config) {
  const SynthProfile& profile = config.profile;
  profile.validate();
  SynthResult result;
  if (config.actions == 0) return result;

  std::vector<FlowRecord> opening;
  Rng rng = Rng(config.seed).split(streams::kSynth);
  OrderId id = 1;
  for (std::size_t level = 0; level < profile.opening_levels; ++level) {
    for (Side side : {Side::Bid, Side::Ask}) {
      const Ticks price = side == Side::Bid ? profile.opening_bid - static_cast<Ticks>(level)
                                            : profile.opening_ask + static_cast<Ticks>(level);
      for (std::size_t k = 0; k < profile.orders_per_level; ++k) {
        FlowRecord r;
        r.ts = config.start;
        r.msg = MsgType::Add;
        r.order_id = id++;
        r.side = side;
        r.price = price;
        r.qty = sample_quantity(profile.params.quantity, rng);
        opening.push_back(r);
      }
    }
  }
  result.opening_orders = opening.size();

  SimConfig sim;
  sim.seed = config.seed;
  sim.session_start = config.start;
  sim.warmup_until = config.start + 1;
  sim.session_end = std::numeric_limits<Nanos>::max() / 4;
  sim.window_depth = profile.params.window_depth;
  sim.fallback_reference = (profile.opening_bid + profile.opening_ask) / 2;
  ResamplingAgent agent(profile.params);
  Kernel kernel(sim, opening, agent);
  kernel.warm_up();
  std::size_t applied = 0;
  while (applied < config.actions && kernel.step()) ++applied;
  result.records = to_flow(kernel.log());
  result.resampled = agent.resampled();
  return result;
}

void write_synth(const std::filesystem::path& path, const SynthConfig& config, const SynthResult& result) {
  write_flow(path, result.records);
  std::filesystem::path params_path = path;
  params_path += ".params.json";
  std::ofstream out(params_path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write " + params_path.string());
  nlohmann::json j = to_json(config.profile);
  j["seed"] = config.seed;
  j["actions"] = config.actions;
  j["start"] = format_clock_time(config.start);
  j["opening_orders"] = result.opening_orders;
  j["resampled"] = result.resampled;
  out << j.dump(2) << '\n';
}

}  // namespace lobforge

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "lobforge/dataset.hpp"
#include "lobforge/explicit_model.hpp"
#include "lobforge/flow.hpp"
#include "lobforge/impact.hpp"
#include "lobforge/remote_agent.hpp"
#include "lobforge/sim_kernel.hpp"
#include "lobforge/stats.hpp"
#include "lobforge/synth.hpp"

using namespace lobforge;
namespace fs = std::filesystem;

namespace {

struct SessionFlags {
  std::string start{"09:30"};
  std::string warmup{"10:00"};
  std::string end{"16:00"};
  std::optional<Ticks> fallback;

  void add(CLI::App* app) {
    app->add_option("--session-start", start, "Session start (HH:MM[:SS])")->capture_default_str();
    app->add_option("--warmup-until", warmup, "End of historical replay")->capture_default_str();
    app->add_option("--session-end", end, "Session end")->capture_default_str();
    app->add_option("--fallback-reference", fallback, "Reference price (ticks) for adds on a never-quoted side");
  }
  SimConfig config(std::uint64_t seed) const {
    SimConfig c;
    c.seed = seed;
    c.session_start = parse_clock_time(start);
    c.warmup_until = parse_clock_time(warmup);
    c.session_end = parse_clock_time(end);
    c.fallback_reference = fallback;
    return c;
  }
};

std::ostream* report_stream = &std::cout;

void print_config(const std::string& command, const nlohmann::json& config) {
  nlohmann::json j{{"command", command}, {"config", config}};
  *report_stream << j.dump() << std::endl;
  const auto seed = config.find("seed");
  *report_stream << "seed: " << (seed != config.end() ? seed->dump() : "none") << std::endl;
}

FlowFile load_flow(const fs::path& path) {
  FlowFile f = read_flow(path);
  if (f.skipped_unresolved)
    spdlog::warn("{}: skipped {} records with unresolved references", path.string(), f.skipped_unresolved);
  return f;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

fs::path sibling(const fs::path& path, const std::string& suffix) {
  fs::path p = path;
  p += suffix;
  return p;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("lobforge");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("LOBFORGE_LOG_LEVEL");
  const std::string level = env && *env ? env : "warn";
  if (level == "error") spdlog::set_level(spdlog::level::err);
  else if (level == "warn") spdlog::set_level(spdlog::level::warn);
  else if (level == "info") spdlog::set_level(spdlog::level::info);
  else if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else throw ValidationError("LOBFORGE_LOG_LEVEL must be error, warn, info or debug, got '" + level + "'");
}

int run(int argc, char** argv) {
  CLI::App app{"Limit order book market simulator with an explicit-model world agent"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "lobforge 1.0");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit the explicit model on an order-flow file");
  fs::path fit_data, fit_out;
  std::size_t fit_T = 5;
  fit->add_option("--data", fit_data, "Order-flow CSV")->required();
  fit->add_option("--out", fit_out, "Model JSON to write")->required();
  fit->add_option("--T", fit_T, "State window depth")->capture_default_str()->check(CLI::PositiveNumber);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Warm up on historical data, then let a world agent run the session");
  fs::path sim_model, sim_data, sim_out;
  std::uint64_t sim_seed = 1;
  std::string agent_exec, agent_tcp;
  std::size_t max_steps = 0;
  long agent_timeout_ms = kDefaultAgentTimeout.count();
  SessionFlags sim_session;
  sim->add_option("--model", sim_model, "Model JSON")->required();
  sim->add_option("--data", sim_data, "Order-flow CSV for the warm-up replay")->required();
  sim->add_option("--seed", sim_seed, "Random seed")->capture_default_str();
  sim->add_option("--out", sim_out, "Event log to write")->required();
  auto* exec_opt = sim->add_option("--agent-exec", agent_exec, "Command of an external world agent (line JSON over stdio)");
  sim->add_option("--agent-tcp", agent_tcp, "host:port of an external world agent")->excludes(exec_opt);
  sim->add_option("--agent-timeout-ms", agent_timeout_ms, "Reply timeout for external agents")->capture_default_str();
  sim->add_option("--max-steps", max_steps, "Stop after this many world actions (0 = session end)")
      ->capture_default_str();
  sim_session.add(sim);

  // replay
  auto* rep = app.add_subcommand("replay", "Replay an order-flow file through the book");
  fs::path rep_data, rep_out;
  std::string rep_until = "23:59:59";
  rep->add_option("--data", rep_data, "Order-flow CSV")->required();
  rep->add_option("--out", rep_out, "Event log to write")->required();
  rep->add_option("--until", rep_until, "Replay records before this time")->capture_default_str();

  // impact
  auto* imp = app.add_subcommand("impact", "Market impact of a POV execution agent");
  fs::path imp_model, imp_data, imp_out;
  std::vector<double> lambdas;
  std::string direction = "buy", window_start = "10:30", window_end = "11:00";
  double slice_seconds = 60;
  std::optional<Shares> reference_volume;
  std::size_t runs = 25, threads = 1;
  std::uint64_t imp_seed = 1;
  SessionFlags imp_session;
  imp->add_option("--model", imp_model, "Model JSON")->required();
  imp->add_option("--data", imp_data, "Order-flow CSV")->required();
  imp->add_option("--lambda", lambdas, "Fraction of historical volume to trade (repeatable)")->required();
  imp->add_option("--direction", direction, "buy or sell")->capture_default_str();
  imp->add_option("--runs", runs, "Coupled run pairs")->capture_default_str()->check(CLI::PositiveNumber);
  imp->add_option("--out", imp_out, "Output directory")->required();
  imp->add_option("--seed", imp_seed, "Seed of the first run")->capture_default_str();
  imp->add_option("--threads", threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  imp->add_option("--window-start", window_start, "POV window start")->capture_default_str();
  imp->add_option("--window-end", window_end, "POV window end")->capture_default_str();
  imp->add_option("--slice-seconds", slice_seconds, "Seconds between POV orders")->capture_default_str();
  imp->add_option("--reference-volume", reference_volume, "Override the historical window volume (shares)");
  imp_session.add(imp);

  // stats
  auto* st = app.add_subcommand("stats", "Stylized facts of an event log");
  fs::path st_log, st_out;
  bool plot = false, replace_split = false;
  std::string st_from;
  StatsOptions st_opts;
  st->add_option("--log", st_log, "Event log (order-flow CSV)")->required();
  st->add_option("--out", st_out, "Output directory")->required();
  st->add_flag("--plot", plot, "Also write SVG charts");
  st->add_option("--from", st_from, "Ignore events before this time (they still build the book)");
  st->add_option("--max-lag", st_opts.max_lag, "Autocorrelation lags")->capture_default_str();
  st->add_option("--bins", st_opts.histogram_bins, "Return histogram bins")->capture_default_str();
  st->add_flag("--replace-as-cancel-add", replace_split, "Count a replace as one cancel and one add");

  // export-dataset
  auto* ex = app.add_subcommand("export-dataset", "Write the state-action training dataset");
  fs::path ex_data, ex_out, ex_model;
  std::size_t ex_T = 5;
  ex->add_option("--data", ex_data, "Order-flow CSV")->required();
  ex->add_option("--T", ex_T, "State window depth")->capture_default_str()->check(CLI::PositiveNumber);
  ex->add_option("--out", ex_out, "Dataset CSV to write")->required();
  ex->add_option("--bounds-from", ex_model, "Take scaler bounds from this model instead of the data");

  // synth-seed
  auto* sy = app.add_subcommand("synth-seed", "Generate synthetic order flow from a known explicit model");
  std::string profile = "default";
  fs::path sy_out;
  std::uint64_t sy_seed = 1;
  std::size_t sy_actions = 100000;
  sy->add_option("--profile", profile, "\"default\" or a profile JSON")->capture_default_str();
  sy->add_option("--out", sy_out, "Order-flow CSV to write")->required();
  sy->add_option("--seed", sy_seed, "Random seed")->capture_default_str();
  sy->add_option("--actions", sy_actions, "Generated actions after the opening book")->capture_default_str();

  // step-server
  auto* ss = app.add_subcommand("step-server", "Serve kernel steps over stdin/stdout for external trainers");
  fs::path ss_model, ss_data;
  std::uint64_t ss_seed = 1;
  SessionFlags ss_session;
  ss->add_option("--model", ss_model, "Model JSON (bounds, T, queue law)")->required();
  ss->add_option("--data", ss_data, "Order-flow CSV for the warm-up replay")->required();
  ss->add_option("--seed", ss_seed, "Default seed for reset")->capture_default_str();
  ss_session.add(ss);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  setup_logging();

  if (*fit) {
    print_config("fit", {{"data", fit_data.string()}, {"out", fit_out.string()}, {"T", fit_T}, {"seed", nullptr}});
    const FlowFile flow = load_flow(fit_data);
    const Dataset ds = extract_dataset(flow.records, fit_T);
    const ExplicitModelParams model = fit_explicit_model(ds);
    save_model(fit_out, model);
    std::cout << "fitted " << ds.pairs.size() << " actions, " << model.metadata.warnings.size() << " warnings -> "
              << fit_out.string() << '\n';
  } else if (*sim) {
    SimConfig config = sim_session.config(sim_seed);
    config.data_path = sim_data;
    config.model_path = sim_model;
    const ExplicitModelParams model = load_model(sim_model);
    config.window_depth = model.window_depth;
    config.validate();
    nlohmann::json shown = config.to_json();
    shown["agent"] = !agent_exec.empty() ? "exec:" + agent_exec : !agent_tcp.empty() ? "tcp:" + agent_tcp : "explicit";
    shown["max_steps"] = max_steps;
    print_config("simulate", shown);
    const FlowFile flow = load_flow(sim_data);
    std::unique_ptr<WorldAgent> agent;
    if (!agent_exec.empty() || !agent_tcp.empty()) {
      RemoteAgentConfig rc;
      rc.bounds = model.bounds;
      rc.window_depth = model.window_depth;
      rc.queue_model = model.queue_position[0];
      rc.timeout = std::chrono::milliseconds(agent_timeout_ms);
      agent = std::make_unique<RemoteWorldAgent>(
          !agent_exec.empty() ? spawn_agent(agent_exec) : connect_agent(agent_tcp), rc);
    } else {
      agent = std::make_unique<ExplicitAgent>(model);
    }
    Kernel kernel(config, flow.records, *agent);
    kernel.warm_up();
    std::size_t steps = 0;
    while ((max_steps == 0 || steps < max_steps) && kernel.step()) ++steps;
    write_event_log(sim_out, kernel.log());
    nlohmann::json summary = kernel.summary_json();
    summary["config"] = shown;
    summary["steps"] = steps;
    write_json(sibling(sim_out, ".summary.json"), summary);
    std::cout << "simulated " << steps << " world actions, " << kernel.log().size() << " events -> "
              << sim_out.string() << '\n';
  } else if (*rep) {
    SimConfig config;
    config.session_start = 0;
    config.warmup_until = parse_clock_time(rep_until);
    config.session_end = config.warmup_until;
    config.data_path = rep_data;
    config.validate();
    print_config("replay", config.to_json());
    const FlowFile flow = load_flow(rep_data);
    struct NoWorld final : WorldAgent {
      TimedAction next(const MarketView&, Rng&) override { throw RuntimeError("replay has no world agent"); }
      std::string name() const override { return "none"; }
    } none;
    Kernel kernel(config, flow.records, none);
    kernel.warm_up();
    write_event_log(rep_out, kernel.log());
    write_json(sibling(rep_out, ".summary.json"), kernel.summary_json());
    const KernelSummary s = kernel.summary();
    std::cout << "replayed " << s.replayed << " records, " << s.replay_rejected << " rejected, "
              << s.execution_mismatches << " execution mismatches -> " << rep_out.string() << '\n';
  } else if (*imp) {
    SimConfig config = imp_session.config(imp_seed);
    config.data_path = imp_data;
    config.model_path = imp_model;
    const ExplicitModelParams model = load_model(imp_model);
    config.window_depth = model.window_depth;
    std::vector<PovSpec> specs;
    for (double l : lambdas) {
      PovSpec s;
      s.lambda = l;
      s.direction = parse_direction(direction);
      s.window_start = parse_clock_time(window_start);
      s.window_end = parse_clock_time(window_end);
      s.slice = static_cast<Nanos>(slice_seconds * kNanosPerSecond);
      s.reference_volume = reference_volume;
      s.validate(config);
      specs.push_back(s);
    }
    ImpactOptions opts;
    opts.runs = runs;
    opts.threads = threads;
    nlohmann::json shown = config.to_json();
    shown["runs"] = runs;
    shown["threads"] = threads;
    shown["pov"] = nlohmann::json::array();
    for (const auto& s : specs) shown["pov"].push_back(s.to_json());
    print_config("impact", shown);
    const FlowFile flow = load_flow(imp_data);
    const auto reports = run_impact_sweep(config, flow.records, model, specs, opts);
    fs::create_directories(imp_out);
    nlohmann::json index = {{"config", shown}, {"reports", nlohmann::json::array()}};
    for (const auto& r : reports) {
      char stem[64];
      std::snprintf(stem, sizeof stem, "impact_%s_lambda%g", std::string(to_string(r.spec.direction)).c_str(),
                    r.spec.lambda);
      std::ofstream csv(imp_out / (std::string(stem) + ".csv"), std::ios::binary);
      if (!csv) throw RuntimeError("cannot write " + (imp_out / stem).string() + ".csv");
      r.write_csv(csv);
      write_json(imp_out / (std::string(stem) + ".json"), r.to_json());
      index["reports"].push_back({{"lambda", r.spec.lambda},
                                  {"direction", to_string(r.spec.direction)},
                                  {"csv", std::string(stem) + ".csv"},
                                  {"peak_mean", r.peak_mean()},
                                  {"window_mean", r.window_mean()}});
      std::cout << "lambda " << r.spec.lambda << ' ' << to_string(r.spec.direction) << ": peak mean impact "
                << r.peak_mean() << ", window mean " << r.window_mean() << '\n';
    }
    write_json(imp_out / "impact.json", index);
  } else if (*st) {
    if (!st_from.empty()) st_opts.from = parse_clock_time(st_from);
    st_opts.replace_as_cancel_add = replace_split;
    print_config("stats", {{"log", st_log.string()},
                           {"out", st_out.string()},
                           {"plot", plot},
                           {"from", st_from},
                           {"max_lag", st_opts.max_lag},
                           {"bins", st_opts.histogram_bins},
                           {"replace_as_cancel_add", replace_split},
                           {"seed", nullptr}});
    const FlowFile flow = load_flow(st_log);
    if (flow.records.empty()) throw ValidationError("event log " + st_log.string() + " is empty");
    const StatsReport report = compute_stats(flow.records, st_opts);
    report.write(st_out);
    if (plot) report.write_plots(st_out);
    for (const auto& w : report.warnings) spdlog::warn("stats: {}", w);
    std::cout << "stats over " << report.events << " events -> " << st_out.string() << '\n';
  } else if (*ex) {
    print_config("export-dataset", {{"data", ex_data.string()},
                                    {"T", ex_T},
                                    {"out", ex_out.string()},
                                    {"bounds_from", ex_model.string()},
                                    {"seed", nullptr}});
    const FlowFile flow = load_flow(ex_data);
    const Dataset ds = extract_dataset(flow.records, ex_T);
    const ScalerBounds bounds = ex_model.empty() ? fit_bounds(ds) : load_model(ex_model).bounds;
    write_codec_dataset(ex_out, ds, bounds);
    write_json(sibling(ex_out, ".bounds.json"),
               {{"T", ex_T}, {"bounds", to_json(bounds)}, {"dataset_hash", dataset_hash(ds)}, {"pairs", ds.pairs.size()}});
    std::cout << "exported " << ds.pairs.size() << " pairs -> " << ex_out.string() << '\n';
  } else if (*sy) {
    SynthConfig sc;
    sc.seed = sy_seed;
    sc.actions = sy_actions;
    sc.profile = load_synth_profile(profile);
    print_config("synth-seed", {{"profile", sc.profile.name},
                                {"out", sy_out.string()},
                                {"seed", sy_seed},
                                {"actions", sy_actions},
                                {"start", format_clock_time(sc.start)}});
    const SynthResult result = synth_seed(sc);
    write_synth(sy_out, sc, result);
    std::cout << "generated " << result.records.size() << " records -> " << sy_out.string() << '\n';
  } else if (*ss) {
    report_stream = &std::cerr;
    SimConfig config = ss_session.config(ss_seed);
    config.data_path = ss_data;
    config.model_path = ss_model;
    const ExplicitModelParams model = load_model(ss_model);
    config.window_depth = model.window_depth;
    print_config("step-server", config.to_json());
    const FlowFile flow = load_flow(ss_data);
    StepServer server(config, flow.records, model);
    const std::size_t steps = server.serve(std::cin, std::cout);
    spdlog::info("step server done after {} steps", steps);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

// uavbc command line: train, eval, sweep, baseline, export-plotdata.
//
// Errors are reported on stderr as a single line "error: <class>: <message>".

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uavbc/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace uavbc;

namespace {

struct CommonOpts {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* app, CommonOpts& o, const char* seed_help) {
  app->add_option("--config", o.config, "flat JSON config file (defaults used when omitted)");
  app->add_option("--override", o.overrides, "key=value, repeatable")->take_all();
  app->add_option("--seed", o.seed, seed_help);
  app->add_option("--out", o.out, "output directory");
}

ExperimentConfig resolve_config(const CommonOpts& o) {
  ExperimentConfig c = load_config(o.config, o.overrides);
  if (!o.out.empty()) c.output_dir = o.out;
  return c;
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw IoError("cannot write " + p.string());
  return os;
}

void write_json(const fs::path& p, const json& j) { open_out(p) << j.dump(2) << '\n'; }

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw IoError(p.string() + " is not valid JSON");
  return j;
}

json summary_json(const EpisodeSummary& s) {
  return {{"total_time_s", s.total_time_s},
          {"flight_time_s", s.flight_time_s},
          {"collection_time_s", s.collection_time_s},
          {"reorientation_time_s", s.reorientation_time_s},
          {"energy_J", s.total_energy_j},
          {"flight_m", s.flight_distance_m},
          {"return", s.episode_return},
          {"steps", s.steps},
          {"collected", s.collected},
          {"success", s.success}};
}

void write_episode_files(const fs::path& dir, const std::vector<EvalEpisode>& eps) {
  auto traj = open_out(dir / "trajectory.csv");
  traj << kTrajectoryCsvHeader << '\n';
  auto trace = open_out(dir / "trace.jsonl");
  auto table = open_out(dir / "eval_episodes.csv");
  table << "episode,total_time_s,flight_time_s,collection_time_s,reorientation_time_s,energy_J,flight_m,steps,"
           "collected,success\n";
  for (std::size_t e = 0; e < eps.size(); ++e) {
    write_trajectory_rows(traj, e, eps[e].history);
    write_trace_jsonl(trace, eps[e].history);
    const EpisodeSummary& s = eps[e].summary;
    table << e << ',' << fmt_num(s.total_time_s) << ',' << fmt_num(s.flight_time_s) << ','
          << fmt_num(s.collection_time_s) << ',' << fmt_num(s.reorientation_time_s) << ','
          << fmt_num(s.total_energy_j) << ',' << fmt_num(s.flight_distance_m) << ',' << s.steps << ','
          << s.collected << ',' << (s.success ? 1 : 0) << '\n';
  }
}

json metrics_json(const EvalMetrics& m) {
  return {{"episodes", m.episodes.size()},
          {"mean_total_time_s", m.mean_total_time_s},
          {"mean_energy_J", m.mean_energy_j},
          {"mean_flight_m", m.mean_flight_distance_m},
          {"success_rate", m.success_rate}};
}

std::vector<Scenario> eval_scenarios(const ExperimentConfig& c, std::size_t episodes) {
  std::vector<Scenario> out;
  const std::size_t n = c.multi_scenario ? std::max<std::size_t>(episodes, 1) : 1;
  for (std::size_t i = 0; i < n; ++i) out.push_back(c.make_scenario(i));
  return out;
}

int run_train(const CommonOpts& o) {
  ExperimentConfig c = resolve_config(o);
  if (o.seed) c.agent_seed = *o.seed;
  const fs::path dir = prepare_dir(c.output_dir);
  write_json(dir / "config.json", to_json(c));
  write_json(dir / "scenario.json", to_json(c.make_scenario()));
  prepare_dir((dir / "checkpoints").string());

  auto log = open_out(dir / "training_log.csv");
  log << kTrainingLogHeader << '\n';
  TrainHooks hooks;
  hooks.on_episode = [&log](const EpisodeLog& e) { log << training_log_row(e) << '\n'; };
  hooks.on_checkpoint = [&](std::size_t step, const Agent& a) {
    write_json(dir / "checkpoints" / ("step_" + std::to_string(step) + ".json"), checkpoint_json(a, c.env.mode));
  };

  DenseNet actor;
  if (c.algorithm == Algorithm::sac) {
    TrainResult r = train(c.env_factory(), c.sac, c.agent_seed, hooks);
    write_json(dir / "checkpoint_final.json", checkpoint_json(r.agent, c.env.mode));
    actor = r.agent.actor;
  } else {
    AcTrainResult r = train_ac_baseline(c.env_factory(), c.ac, c.agent_seed, hooks);
    write_json(dir / "checkpoint_final.json", checkpoint_json(r.agent, c.env.mode));
    actor = r.agent.actor;
  }
  log.close();

  const EvalMetrics m = evaluate(actor, eval_scenarios(c, c.eval_episodes), c.env, c.eval_episodes);
  write_episode_files(dir, m.episodes);
  json summary = {{"command", "train"},
                  {"algorithm", c.algorithm == Algorithm::sac ? "sac" : "ac"},
                  {"mode", to_string(c.env.mode)},
                  {"scenario_seed", c.scenario.seed},
                  {"agent_seed", c.agent_seed},
                  {"evaluation", metrics_json(m)}};
  if (!m.episodes.empty()) summary["final_episode"] = summary_json(m.episodes.front().summary);
  write_json(dir / "summary.json", summary);
  std::cout << summary.dump() << '\n';
  return 0;
}

int run_eval(const CommonOpts& o, const std::string& checkpoint, const std::string& scenario_file,
             std::optional<std::size_t> episodes) {
  ExperimentConfig c = resolve_config(o);
  if (o.seed) c.scenario.seed = *o.seed;
  const json ck = read_json(checkpoint);
  const std::string ck_mode = ck.value("mode", "");
  if (ck_mode != to_string(c.env.mode))
    throw UsageError("checkpoint was trained in " + ck_mode + " mode but the environment is configured for " +
                     to_string(c.env.mode));
  const DenseNet actor = actor_from_checkpoint(ck);
  const std::size_t n = episodes.value_or(c.eval_episodes);
  std::vector<Scenario> scenarios =
      scenario_file.empty() ? eval_scenarios(c, n) : std::vector<Scenario>{scenario_from_json(read_json(scenario_file))};
  const EvalMetrics m = evaluate(actor, scenarios, c.env, n);
  const fs::path dir = prepare_dir(c.output_dir);
  write_json(dir / "config.json", to_json(c));
  write_episode_files(dir, m.episodes);
  const json summary = {{"command", "eval"},
                        {"checkpoint", checkpoint},
                        {"mode", to_string(c.env.mode)},
                        {"scenario_seed", c.scenario.seed},
                        {"agent_seed", c.agent_seed},
                        {"evaluation", metrics_json(m)}};
  write_json(dir / "eval_summary.json", summary);
  std::cout << summary.dump() << '\n';
  return 0;
}

int run_baseline(const CommonOpts& o, const std::string& scenario_file) {
  ExperimentConfig c = resolve_config(o);
  if (o.seed) c.scenario.seed = *o.seed;
  const Scenario sc = scenario_file.empty() ? c.make_scenario() : scenario_from_json(read_json(scenario_file));
  const BaselineResult r = greedy_baseline(sc, c.env);
  const fs::path dir = prepare_dir(c.output_dir);
  write_json(dir / "config.json", to_json(c));
  write_json(dir / "scenario.json", to_json(sc));
  json summary = {{"command", "baseline"},
                  {"mode", to_string(c.env.mode)},
                  {"scenario_seed", sc.seed},
                  {"agent_seed", nullptr},
                  {"feasible", r.feasible},
                  {"unreachable_bds", r.unreachable_bds},
                  {"message", r.message}};
  if (!r.episode.history.empty() || r.feasible) {
    summary["episode"] = summary_json(r.episode.summary);
    write_episode_files(dir, {r.episode});
  }
  write_json(dir / "baseline_summary.json", summary);
  std::cout << summary.dump() << '\n';
  if (!r.feasible) throw InfeasibleLinkError(r.message);
  return 0;
}

std::vector<double> parse_values(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError("--values: '" + tok + "' is not a number");
    }
  }
  return out;
}

int run_sweep_cmd(const CommonOpts& o, const std::string& variable, const std::string& values, std::size_t trials,
                  const std::string& method) {
  SweepSpec spec;
  spec.base = resolve_config(o);
  if (o.seed) spec.base.scenario.seed = *o.seed;
  if (variable == "K") spec.variable = SweepVariable::num_bds;
  else if (variable == "L") spec.variable = SweepVariable::area_side;
  else throw UsageError("--variable must be K or L");
  if (method == "greedy") spec.method = SweepMethod::greedy;
  else if (method == "sac") spec.method = SweepMethod::sac;
  else if (method == "ac") spec.method = SweepMethod::ac;
  else throw UsageError("--method must be greedy, sac or ac");
  spec.values = parse_values(values);
  spec.trials_per_value = trials;

  const SweepResult r = run_sweep(spec);
  const fs::path dir = prepare_dir(spec.base.output_dir);
  write_json(dir / "config.json", to_json(spec.base));
  auto os = open_out(dir / "sweep.csv");
  write_sweep_csv(os, spec, r);
  os.close();
  std::size_t failed = 0;
  for (const SweepRow& row : r.rows) failed += row.error.empty() ? 0 : 1;
  const json summary = {{"command", "sweep"},
                        {"variable", variable},
                        {"method", method},
                        {"values", spec.values},
                        {"trials", trials},
                        {"scenario_seed", spec.base.scenario.seed},
                        {"agent_seed", spec.base.agent_seed},
                        {"failed_trials", failed}};
  write_json(dir / "sweep_summary.json", summary);
  std::cout << summary.dump() << '\n';
  return 0;
}

int run_export(const std::string& run_dir, const std::string& out, std::size_t window) {
  const fs::path target = out.empty() ? fs::path(run_dir) / "plotdata" : fs::path(out);
  const auto files = export_plotdata(run_dir, target, window);
  json written = json::array();
  for (const auto& f : files) written.push_back(f.string());
  std::cout << json{{"command", "export-plotdata"}, {"written", written}}.dump() << '\n';
  return 0;
}

int fail(const std::string& cls, const std::string& msg) {
  std::string line = msg;
  for (char& ch : line)
    if (ch == '\n' || ch == '\r') ch = ' ';
  std::cerr << "error: " << cls << ": " << line << std::endl;
  return cls == "usage_error" ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV backscatter data collection: training, evaluation and baselines"};
  app.require_subcommand(1);

  CommonOpts train_o, eval_o, base_o, sweep_o;
  auto* train_cmd = app.add_subcommand("train", "train an agent and evaluate the final policy");
  add_common(train_cmd, train_o, "agent seed");

  std::string checkpoint, eval_scenario;
  std::optional<std::size_t> episodes;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint's deterministic policy");
  add_common(eval_cmd, eval_o, "scenario seed");
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint JSON")->required();
  eval_cmd->add_option("--scenario", eval_scenario, "scenario JSON (overrides the configured generator)");
  eval_cmd->add_option("--episodes", episodes, "number of evaluation episodes");

  std::string base_scenario;
  auto* base_cmd = app.add_subcommand("baseline", "run the greedy nearest-BD planner");
  add_common(base_cmd, base_o, "scenario seed");
  base_cmd->add_option("--scenario", base_scenario, "scenario JSON");

  std::string variable = "K", values, method = "greedy";
  std::size_t trials = 5;
  auto* sweep_cmd = app.add_subcommand("sweep", "sweep K or L and aggregate mission metrics");
  add_common(sweep_cmd, sweep_o, "base scenario seed");
  sweep_cmd->add_option("--variable", variable, "K or L");
  sweep_cmd->add_option("--values", values, "comma-separated increasing values")->required();
  sweep_cmd->add_option("--trials", trials, "trials per value");
  sweep_cmd->add_option("--method", method, "greedy, sac or ac");

  std::string run_dir, export_out;
  std::size_t window = 100;
  auto* export_cmd = app.add_subcommand("export-plotdata", "write plot-ready CSV series from run outputs");
  export_cmd->add_option("--run", run_dir, "run directory")->required();
  export_cmd->add_option("--out", export_out, "output directory (default <run>/plotdata)");
  export_cmd->add_option("--window", window, "moving-average window in episodes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage_error", e.what());
  }

  try {
    if (*train_cmd) return run_train(train_o);
    if (*eval_cmd) return run_eval(eval_o, checkpoint, eval_scenario, episodes);
    if (*base_cmd) return run_baseline(base_o, base_scenario);
    if (*sweep_cmd) return run_sweep_cmd(sweep_o, variable, values, trials, method);
    if (*export_cmd) return run_export(run_dir, export_out, window);
  } catch (const Error& e) {
    return fail(e.error_class(), e.what());
  } catch (const std::exception& e) {
    return fail("internal_error", e.what());
  }
  return 0;
}

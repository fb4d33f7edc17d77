#pragma once

// Experiment configuration (flat keyed JSON with unit-suffixed names), the
// scripted greedy planner, parameter sweeps and plot-data export.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "env.hpp"
#include "errors.hpp"
#include "sac.hpp"
#include "world.hpp"

namespace uavbc {

enum class Algorithm { sac, ac };

struct ExperimentConfig {
  ScenarioSpec scenario;
  EnvConfig env;
  SacConfig sac;
  AcConfig ac;
  Algorithm algorithm = Algorithm::sac;
  std::uint64_t agent_seed = 1;
  bool multi_scenario = false;
  std::size_t eval_episodes = 20;
  std::string output_dir = "runs/default";

  Scenario make_scenario(std::uint64_t seed_offset = 0) const {
    ScenarioSpec s = scenario;
    s.seed += seed_offset;
    return generate_scenario(s);
  }

  EnvFactory env_factory() const {
    const ExperimentConfig cfg = *this;
    if (!multi_scenario) {
      const Scenario fixed = make_scenario();
      return [fixed, cfg](std::size_t) { return Environment(fixed, cfg.env); };
    }
    return [cfg](std::size_t episode) { return Environment(cfg.make_scenario(episode), cfg.env); };
  }
};

namespace detail {

enum class Kind { number, integer, boolean, text, integer_list };

struct Field {
  std::string key;
  Kind kind;
  std::function<nlohmann::json(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const nlohmann::json&)> set;
};

inline const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    using C = ExperimentConfig;
    std::vector<Field> f;
    auto num = [&f](std::string key, std::function<double&(C&)> ref) {
      f.push_back({std::move(key), Kind::number,
                   [ref](const C& c) { return nlohmann::json(ref(const_cast<C&>(c))); },
                   [ref](C& c, const nlohmann::json& j) { ref(c) = j.get<double>(); }});
    };
    auto count = [&f](std::string key, std::function<std::size_t&(C&)> ref) {
      f.push_back({std::move(key), Kind::integer,
                   [ref](const C& c) { return nlohmann::json(ref(const_cast<C&>(c))); },
                   [ref](C& c, const nlohmann::json& j) { ref(c) = j.get<std::size_t>(); }});
    };
    auto seed = [&f](std::string key, std::function<std::uint64_t&(C&)> ref) {
      f.push_back({std::move(key), Kind::integer,
                   [ref](const C& c) { return nlohmann::json(ref(const_cast<C&>(c))); },
                   [ref](C& c, const nlohmann::json& j) { ref(c) = j.get<std::uint64_t>(); }});
    };

    count("scenario.num_bds", [](C& c) -> std::size_t& { return c.scenario.num_bds; });
    num("scenario.area_side_m", [](C& c) -> double& { return c.scenario.area_side_m; });
    num("scenario.altitude_m", [](C& c) -> double& { return c.scenario.altitude_m; });
    seed("scenario.seed", [](C& c) -> std::uint64_t& { return c.scenario.seed; });
    num("scenario.volume_min_bits", [](C& c) -> double& { return c.scenario.volume_min_bits; });
    num("scenario.volume_max_bits", [](C& c) -> double& { return c.scenario.volume_max_bits; });
    num("scenario.bd_gain_dbi", [](C& c) -> double& { return c.scenario.bd_gain_dbi; });
    num("scenario.start_x_m", [](C& c) -> double& { return c.scenario.uav_start.x; });
    num("scenario.start_y_m", [](C& c) -> double& { return c.scenario.uav_start.y; });

    num("channel.carrier_freq_hz", [](C& c) -> double& { return c.env.channel.carrier_freq_hz; });
    num("channel.env_rho", [](C& c) -> double& { return c.env.channel.env_rho; });
    num("channel.env_beta", [](C& c) -> double& { return c.env.channel.env_beta; });
    num("channel.eta_los_db", [](C& c) -> double& { return c.env.channel.eta_los_db; });
    num("channel.eta_nlos_db", [](C& c) -> double& { return c.env.channel.eta_nlos_db; });
    num("channel.noise_dbm", [](C& c) -> double& { return c.env.channel.noise_dbm; });
    num("channel.bandwidth_hz", [](C& c) -> double& { return c.env.channel.bandwidth_hz; });
    num("channel.carrier_power_w", [](C& c) -> double& { return c.env.channel.carrier_power_w; });
    num("channel.reader_sens_dbm", [](C& c) -> double& { return c.env.channel.reader_sens_dbm; });
    num("channel.bd_sens_dbm", [](C& c) -> double& { return c.env.channel.bd_sens_dbm; });
    num("channel.reader_gain_dbi", [](C& c) -> double& { return c.env.channel.reader_gain_dbi; });
    num("channel.fpa_reader_gain_dbi", [](C& c) -> double& { return c.env.channel.fpa_reader_gain_dbi; });

    num("backscatter.chi", [](C& c) -> double& { return c.env.backscatter.chi; });
    num("backscatter.modulation_factor", [](C& c) -> double& { return c.env.backscatter.modulation_m; });
    num("backscatter.on_object_penalty_db", [](C& c) -> double& { return c.env.backscatter.theta_db; });

    num("propulsion.tip_speed_mps", [](C& c) -> double& { return c.env.propulsion.tip_speed_mps; });
    num("propulsion.hover_induced_velocity_mps",
        [](C& c) -> double& { return c.env.propulsion.hover_induced_velocity_mps; });
    num("propulsion.air_density_kgpm3", [](C& c) -> double& { return c.env.propulsion.air_density_kgpm3; });
    num("propulsion.rotor_solidity", [](C& c) -> double& { return c.env.propulsion.rotor_solidity; });
    num("propulsion.disc_area_m2", [](C& c) -> double& { return c.env.propulsion.disc_area_m2; });
    num("propulsion.fuselage_drag_ratio", [](C& c) -> double& { return c.env.propulsion.fuselage_drag_ratio; });
    num("propulsion.profile_drag_coeff", [](C& c) -> double& { return c.env.propulsion.profile_drag_coeff; });
    num("propulsion.blade_angular_velocity_radps",
        [](C& c) -> double& { return c.env.propulsion.blade_angular_velocity_radps; });
    num("propulsion.rotor_radius_m", [](C& c) -> double& { return c.env.propulsion.rotor_radius_m; });
    num("propulsion.induced_power_correction",
        [](C& c) -> double& { return c.env.propulsion.induced_power_correction; });
    num("propulsion.weight_n", [](C& c) -> double& { return c.env.propulsion.weight_n; });
    num("propulsion.uav_speed_mps", [](C& c) -> double& { return c.env.propulsion.uav_speed_mps; });

    num("ma.base_power_w", [](C& c) -> double& { return c.env.ma.base_power_w; });
    num("ma.zeta_w_per_rad", [](C& c) -> double& { return c.env.ma.zeta_w_per_rad; });
    num("ma.kappa_w_per_rad", [](C& c) -> double& { return c.env.ma.kappa_w_per_rad; });
    num("ma.v_theta_radps", [](C& c) -> double& { return c.env.ma.v_theta_radps; });
    num("ma.v_phi_radps", [](C& c) -> double& { return c.env.ma.v_phi_radps; });

    num("energy.capacity_j", [](C& c) -> double& { return c.env.energy_capacity_j; });
    num("energy.comm_power_w", [](C& c) -> double& { return c.env.comm_power_w; });

    count("env.step_cap", [](C& c) -> std::size_t& { return c.env.step_cap; });
    num("env.reward_per_bd", [](C& c) -> double& { return c.env.reward_per_bd; });
    num("env.reward_finish", [](C& c) -> double& { return c.env.reward_finish; });
    f.push_back({"env.mode", Kind::text, [](const C& c) { return nlohmann::json(to_string(c.env.mode)); },
                 [](C& c, const nlohmann::json& j) {
                   const auto s = j.get<std::string>();
                   if (s == "MA") c.env.mode = AntennaMode::ma;
                   else if (s == "FPA") c.env.mode = AntennaMode::fpa;
                   else throw ConfigError("env.mode (must be \"MA\" or \"FPA\")");
                 }});

    f.push_back({"agent.algorithm", Kind::text,
                 [](const C& c) { return nlohmann::json(c.algorithm == Algorithm::sac ? "sac" : "ac"); },
                 [](C& c, const nlohmann::json& j) {
                   const auto s = j.get<std::string>();
                   if (s == "sac") c.algorithm = Algorithm::sac;
                   else if (s == "ac") c.algorithm = Algorithm::ac;
                   else throw ConfigError("agent.algorithm (must be \"sac\" or \"ac\")");
                 }});
    seed("agent.seed", [](C& c) -> std::uint64_t& { return c.agent_seed; });
    f.push_back({"agent.gamma", Kind::number, [](const C& c) { return nlohmann::json(c.sac.gamma); },
                 [](C& c, const nlohmann::json& j) { c.sac.gamma = c.ac.gamma = j.get<double>(); }});
    num("agent.tau", [](C& c) -> double& { return c.sac.tau; });
    num("agent.alpha_init", [](C& c) -> double& { return c.sac.alpha_init; });
    f.push_back({"agent.target_entropy", Kind::number,
                 [](const C& c) {
                   return std::isnan(c.sac.target_entropy) ? nlohmann::json("auto") : nlohmann::json(c.sac.target_entropy);
                 },
                 [](C& c, const nlohmann::json& j) {
                   if (j.is_string() && j.get<std::string>() == "auto")
                     c.sac.target_entropy = std::numeric_limits<double>::quiet_NaN();
                   else
                     c.sac.target_entropy = j.get<double>();
                 }});
    count("agent.batch_size", [](C& c) -> std::size_t& { return c.sac.batch_size; });
    count("agent.buffer_capacity", [](C& c) -> std::size_t& { return c.sac.buffer_capacity; });
    f.push_back({"agent.lr_actor", Kind::number, [](const C& c) { return nlohmann::json(c.sac.lr_actor); },
                 [](C& c, const nlohmann::json& j) { c.sac.lr_actor = c.ac.lr_actor = j.get<double>(); }});
    f.push_back({"agent.lr_critic", Kind::number, [](const C& c) { return nlohmann::json(c.sac.lr_critic); },
                 [](C& c, const nlohmann::json& j) { c.sac.lr_critic = c.ac.lr_critic = j.get<double>(); }});
    num("agent.lr_alpha", [](C& c) -> double& { return c.sac.lr_alpha; });
    count("agent.warmup_steps", [](C& c) -> std::size_t& { return c.sac.warmup_steps; });
    count("agent.updates_per_step", [](C& c) -> std::size_t& { return c.sac.updates_per_step; });
    f.push_back({"agent.total_steps", Kind::integer, [](const C& c) { return nlohmann::json(c.sac.total_steps); },
                 [](C& c, const nlohmann::json& j) { c.sac.total_steps = c.ac.total_steps = j.get<std::size_t>(); }});
    count("agent.eval_interval", [](C& c) -> std::size_t& { return c.sac.eval_interval; });
    f.push_back({"agent.hidden_units", Kind::integer_list, [](const C& c) { return nlohmann::json(c.sac.hidden); },
                 [](C& c, const nlohmann::json& j) { c.sac.hidden = c.ac.hidden = j.get<std::vector<std::size_t>>(); }});
    f.push_back({"agent.multi_scenario", Kind::boolean, [](const C& c) { return nlohmann::json(c.multi_scenario); },
                 [](C& c, const nlohmann::json& j) { c.multi_scenario = j.get<bool>(); }});
    count("agent.eval_episodes", [](C& c) -> std::size_t& { return c.eval_episodes; });
    f.push_back({"output.dir", Kind::text, [](const C& c) { return nlohmann::json(c.output_dir); },
                 [](C& c, const nlohmann::json& j) { c.output_dir = j.get<std::string>(); }});
    return f;
  }();
  return table;
}

inline bool kind_matches(Kind k, const nlohmann::json& j) {
  switch (k) {
    case Kind::number: return j.is_number() || (j.is_string() && j.get<std::string>() == "auto");
    case Kind::integer: return j.is_number_unsigned() || (j.is_number_integer() && j.get<long long>() >= 0);
    case Kind::boolean: return j.is_boolean();
    case Kind::text: return j.is_string();
    case Kind::integer_list:
      return j.is_array() && std::all_of(j.begin(), j.end(), [](const nlohmann::json& e) { return e.is_number_unsigned(); });
  }
  return false;
}

}  // namespace detail

/// Every range violation as "key (reason)"; empty when the config is valid.
inline std::vector<std::string> config_violations(const ExperimentConfig& c) {
  std::vector<std::string> v;
  auto need = [&v](bool ok, const char* key, const std::string& why) {
    if (!ok) v.push_back(std::string(key) + " (" + why + ")");
  };
  const ScenarioSpec& s = c.scenario;
  need(s.num_bds >= 1, "scenario.num_bds", "must be >= 1");
  need(s.area_side_m > 0.0, "scenario.area_side_m", "must be > 0");
  need(s.altitude_m > 0.0, "scenario.altitude_m", "must be > 0");
  need(s.volume_min_bits > 0.0, "scenario.volume_min_bits", "must be > 0");
  need(s.volume_max_bits > s.volume_min_bits, "scenario.volume_max_bits", "must exceed volume_min_bits");
  need(s.uav_start.x >= 0.0 && s.uav_start.x <= s.area_side_m, "scenario.start_x_m", "must lie in [0, L]");
  need(s.uav_start.y >= 0.0 && s.uav_start.y <= s.area_side_m, "scenario.start_y_m", "must lie in [0, L]");

  const ChannelParams& ch = c.env.channel;
  need(ch.carrier_freq_hz > 0.0, "channel.carrier_freq_hz", "must be > 0");
  need(ch.env_rho > 0.0, "channel.env_rho", "must be > 0");
  need(ch.env_beta > 0.0, "channel.env_beta", "must be > 0");
  need(ch.eta_nlos_db >= ch.eta_los_db, "channel.eta_nlos_db", "must be >= eta_los_db");
  need(ch.bandwidth_hz > 0.0, "channel.bandwidth_hz", "must be > 0");
  need(ch.carrier_power_w > 0.0, "channel.carrier_power_w", "must be > 0");

  const BackscatterCoeff& bc = c.env.backscatter;
  need(bc.chi > 0.0 && bc.chi <= 1.0, "backscatter.chi", "must lie in (0, 1]");
  need(bc.modulation_m > 0.0 && bc.modulation_m <= 1.0, "backscatter.modulation_factor", "must lie in (0, 1]");
  need(bc.theta_db >= 0.0, "backscatter.on_object_penalty_db", "must be >= 0");

  for (const detail::Field& f : detail::fields()) {
    if (f.key.rfind("propulsion.", 0) == 0 || f.key.rfind("ma.", 0) == 0)
      need(f.get(c).get<double>() > 0.0, f.key.c_str(), "must be > 0");
  }
  need(c.env.energy_capacity_j > 0.0, "energy.capacity_j", "must be > 0");
  need(c.env.comm_power_w >= 0.0, "energy.comm_power_w", "must be >= 0");

  need(c.env.step_cap >= 1, "env.step_cap", "must be >= 1");
  if (c.env.propulsion.uav_speed_mps > 0.0) {
    const double bound = max_step_distance(s.area_side_m) / c.env.propulsion.uav_speed_mps;
    char buf[160];
    std::snprintf(buf, sizeof buf, "r_bs >= d_max / v_u = %.4g required so distant BDs are not ignored", bound);
    need(c.env.reward_per_bd >= bound, "env.reward_per_bd", buf);
  }
  need(c.env.reward_finish >= 0.0, "env.reward_finish", "must be >= 0");

  need(c.sac.gamma > 0.0 && c.sac.gamma < 1.0, "agent.gamma", "must lie in (0, 1)");
  need(c.sac.tau > 0.0 && c.sac.tau <= 1.0, "agent.tau", "must lie in (0, 1]");
  need(c.sac.alpha_init > 0.0, "agent.alpha_init", "must be > 0");
  need(c.sac.batch_size >= 1, "agent.batch_size", "must be >= 1");
  need(c.sac.batch_size <= c.sac.buffer_capacity, "agent.buffer_capacity", "must be >= batch_size");
  need(c.sac.lr_actor > 0.0, "agent.lr_actor", "must be > 0");
  need(c.sac.lr_critic > 0.0, "agent.lr_critic", "must be > 0");
  need(c.sac.lr_alpha > 0.0, "agent.lr_alpha", "must be > 0");
  need(c.sac.updates_per_step >= 1, "agent.updates_per_step", "must be >= 1");
  need(!c.sac.hidden.empty() && std::all_of(c.sac.hidden.begin(), c.sac.hidden.end(), [](std::size_t h) { return h > 0; }),
       "agent.hidden_units", "must be a non-empty list of positive widths");
  return v;
}

inline std::string join_violations(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "; " : "") + v[i];
  return s;
}

/// Applies flat keyed values onto `base`. Unknown keys and type mismatches are
/// collected together with range violations into one ConfigError.
inline ExperimentConfig apply_config(ExperimentConfig base, const nlohmann::json& flat) {
  if (!flat.is_object()) throw ConfigError("invalid configuration: top level must be an object of flat keys");
  std::vector<std::string> errors;
  for (const auto& [key, value] : flat.items()) {
    const auto& table = detail::fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const detail::Field& f) { return f.key == key; });
    if (it == table.end()) {
      errors.push_back(key + " (unknown key)");
      continue;
    }
    if (!detail::kind_matches(it->kind, value)) {
      errors.push_back(key + " (wrong type)");
      continue;
    }
    try {
      it->set(base, value);
    } catch (const ConfigError& e) {
      errors.push_back(e.what());
    }
  }
  for (std::string& v : config_violations(base)) errors.push_back(std::move(v));
  if (!errors.empty()) throw ConfigError("invalid configuration: " + join_violations(errors));
  return base;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const detail::Field& f : detail::fields()) j[f.key] = f.get(c);
  return j;
}

/// "key=value"; the value is parsed as JSON when possible, otherwise taken as a string.
inline std::pair<std::string, nlohmann::json> parse_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("invalid override '" + kv + "' (expected key=value)");
  const std::string key = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  return {key, value};
}

inline ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  nlohmann::json flat = nlohmann::json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    flat = nlohmann::json::parse(in, nullptr, false);
    if (flat.is_discarded()) throw ConfigError("invalid configuration: " + path + " is not valid JSON");
  }
  for (const std::string& o : overrides) {
    auto [k, v] = parse_override(o);
    flat[k] = v;
  }
  return apply_config(ExperimentConfig{}, flat);
}

// --- greedy planner ------------------------------------------------------------

inline bool qualifies_from(Vec2 pose, const BdSpec& bd, const Scenario& sc, const EnvConfig& cfg) {
  return qualifies(link_budget(pose, sc.altitude_m, bd, cfg.channel, cfg.backscatter.xi(), cfg.reader_gain_dbi()),
                   cfg.channel);
}

inline constexpr double kHoverSearchResolutionM = 0.1;

/// Shortest flight along the straight leg from `from` towards `bd` after which
/// the BD qualifies, to within the search resolution. Positions are produced by
/// apply_move so they match what the environment will fly. nullopt if the BD
/// does not qualify even at the end of the leg.
inline std::optional<double> hover_stop_distance(Vec2 from, const BdSpec& bd, const Scenario& sc,
                                                 const EnvConfig& cfg) {
  if (qualifies_from(from, bd, sc, cfg)) return 0.0;
  const double leg = distance(from, bd.position);
  const double heading = azimuth(from, bd.position);
  const double d_max = max_step_distance(sc.area_side_m);
  auto point = [&](double s) {
    return apply_move(from, s / d_max, heading, sc.area_side_m, cfg.propulsion.uav_speed_mps).position;
  };
  if (!qualifies_from(point(leg), bd, sc, cfg)) return std::nullopt;
  double lo = 0.0, hi = leg;
  while (hi - lo > kHoverSearchResolutionM) {
    const double mid = 0.5 * (lo + hi);
    (qualifies_from(point(mid), bd, sc, cfg) ? hi : lo) = mid;
  }
  return hi;
}

struct BaselineResult {
  EvalEpisode episode;
  bool feasible = true;
  std::vector<std::size_t> unreachable_bds;
  std::string message;
  std::vector<Vec2> hover_points;
};

/// Fly towards the nearest uncollected BD, stop as soon as it qualifies,
/// serve everything that qualifies there, repeat.
inline BaselineResult greedy_baseline(const Scenario& sc, const EnvConfig& cfg) {
  BaselineResult res;
  for (const BdSpec& bd : sc.bds)
    if (!qualifies_from(bd.position, bd, sc, cfg)) res.unreachable_bds.push_back(bd.id);
  if (!res.unreachable_bds.empty()) {
    res.feasible = false;
    res.message = "BD " + std::to_string(res.unreachable_bds.front()) + " never qualifies, even from directly overhead (" +
                  std::to_string(res.unreachable_bds.size()) + " unreachable BDs in " + to_string(cfg.mode) + " mode)";
    return res;
  }

  Environment env(sc, cfg);
  res.episode.start = env.state().uav;
  const double d_max = max_step_distance(sc.area_side_m);
  while (!env.done()) {
    const EnvState& st = env.state();
    std::size_t target = sc.num_bds();
    for (std::size_t k = 0; k < sc.num_bds(); ++k)
      if (!st.collected[k] && (target == sc.num_bds() || st.distances_m[k] < st.distances_m[target])) target = k;

    const BdSpec& bd = sc.bds[target];
    const double stop = hover_stop_distance(st.uav, bd, sc, cfg).value();
    EnvAction a;
    a.a_f = stop / d_max;
    a.a_r = azimuth(st.uav, bd.position);
    const Vec2 hover = apply_move(st.uav, a.a_f, a.a_r, sc.area_side_m, cfg.propulsion.uav_speed_mps).position;
    if (cfg.mode == AntennaMode::ma) {
      const std::vector<std::size_t> q = qualified_bds(hover, sc, st.collected, cfg);
      std::size_t aim = target;
      for (std::size_t k : q)
        if (distance(hover, sc.bds[k].position) < distance(hover, sc.bds[aim].position)) aim = k;
      const Orientation o = aim_angles(hover, sc.altitude_m, sc.bds[aim].position);
      a.theta_init = o.theta;
      a.phi_init = o.phi;
    }
    env.step(a);
    res.hover_points.push_back(hover);
  }
  res.episode.summary = env.summarize();
  res.episode.history = env.history();
  res.feasible = res.episode.summary.success;
  if (!res.feasible) res.message = "episode ended before all BDs were collected";
  return res;
}

// --- sweeps ----------------------------------------------------------------------

enum class SweepVariable { num_bds, area_side };
enum class SweepMethod { greedy, sac, ac };

struct SweepSpec {
  SweepVariable variable = SweepVariable::num_bds;
  std::vector<double> values;
  std::size_t trials_per_value = 5;
  SweepMethod method = SweepMethod::greedy;
  ExperimentConfig base;

  void validate() const {
    if (values.empty()) throw ConfigError("invalid sweep: values (must not be empty)");
    if (trials_per_value == 0) throw ConfigError("invalid sweep: trials (must be >= 1)");
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] > 0.0)) throw ConfigError("invalid sweep: values (must be positive)");
      if (i && !(values[i] > values[i - 1])) throw ConfigError("invalid sweep: values (must be strictly increasing)");
      if (variable == SweepVariable::num_bds && values[i] != std::floor(values[i]))
        throw ConfigError("invalid sweep: values (K must be integral)");
    }
  }
};

struct SweepRow {
  double value = 0.0;
  std::size_t trial = 0;
  double total_time_s = 0.0;
  double energy_j = 0.0;
  double flight_m = 0.0;
  bool success = false;
  std::string error;
};

struct SweepAggregate {
  double value = 0.0;
  double mean_time_s = 0.0;
  double std_time_s = 0.0;
  double mean_energy_j = 0.0;
  double std_energy_j = 0.0;
  double mean_flight_m = 0.0;
  double std_flight_m = 0.0;
  double success_rate = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepAggregate> aggregates;
};

inline ExperimentConfig sweep_point_config(const SweepSpec& spec, double value, std::size_t trial) {
  ExperimentConfig c = spec.base;
  if (spec.variable == SweepVariable::num_bds)
    c.scenario.num_bds = static_cast<std::size_t>(value);
  else
    c.scenario.area_side_m = value;
  c.scenario.seed = spec.base.scenario.seed + trial;
  c.agent_seed = spec.base.agent_seed + trial;
  return c;
}

/// One trial of a sweep point. Learned methods train on the trial's layout and
/// report the deterministic policy's first evaluation episode.
inline SweepRow run_sweep_trial(const SweepSpec& spec, double value, std::size_t trial) {
  SweepRow row;
  row.value = value;
  row.trial = trial;
  const ExperimentConfig c = sweep_point_config(spec, value, trial);
  const Scenario sc = c.make_scenario();
  EpisodeSummary s;
  if (spec.method == SweepMethod::greedy) {
    const BaselineResult r = greedy_baseline(sc, c.env);
    if (!r.feasible) throw InfeasibleLinkError(r.message);
    s = r.episode.summary;
  } else {
    ExperimentConfig fixed = c;
    fixed.multi_scenario = false;
    const DenseNet actor = spec.method == SweepMethod::sac
                               ? train(fixed.env_factory(), fixed.sac, fixed.agent_seed).agent.actor
                               : train_ac_baseline(fixed.env_factory(), fixed.ac, fixed.agent_seed).agent.actor;
    s = run_policy_episode(actor, Environment(sc, c.env)).summary;
  }
  row.total_time_s = s.total_time_s;
  row.energy_j = s.total_energy_j;
  row.flight_m = s.flight_distance_m;
  row.success = s.success;
  return row;
}

inline SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  SweepResult res;
  for (double value : spec.values) {
    std::vector<SweepRow> point;
    for (std::size_t t = 0; t < spec.trials_per_value; ++t) {
      try {
        point.push_back(run_sweep_trial(spec, value, t));
      } catch (const Error& e) {
        SweepRow r;
        r.value = value;
        r.trial = t;
        r.total_time_s = r.energy_j = r.flight_m = std::numeric_limits<double>::quiet_NaN();
        r.error = e.error_class();
        point.push_back(r);
      }
    }
    SweepAggregate agg;
    agg.value = value;
    auto stats = [&](auto proj, double& mean, double& sd) {
      std::vector<double> xs;
      for (const SweepRow& r : point)
        if (r.error.empty()) xs.push_back(proj(r));
      if (xs.empty()) {
        mean = sd = std::numeric_limits<double>::quiet_NaN();
        return;
      }
      mean = 0.0;
      for (double x : xs) mean += x / static_cast<double>(xs.size());
      sd = 0.0;
      if (xs.size() > 1) {
        for (double x : xs) sd += (x - mean) * (x - mean);
        sd = std::sqrt(sd / static_cast<double>(xs.size() - 1));
      }
    };
    stats([](const SweepRow& r) { return r.total_time_s; }, agg.mean_time_s, agg.std_time_s);
    stats([](const SweepRow& r) { return r.energy_j; }, agg.mean_energy_j, agg.std_energy_j);
    stats([](const SweepRow& r) { return r.flight_m; }, agg.mean_flight_m, agg.std_flight_m);
    for (const SweepRow& r : point) agg.success_rate += r.success ? 1.0 / static_cast<double>(point.size()) : 0.0;
    res.aggregates.push_back(agg);
    res.rows.insert(res.rows.end(), point.begin(), point.end());
  }
  return res;
}

inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Per-trial rows, then a "mean" row per value and, with more than one trial,
/// a "stddev" row.
inline void write_sweep_csv(std::ostream& os, const SweepSpec& spec, const SweepResult& res) {
  os << "value,trial,total_time_s,energy_J,flight_m,success\n";
  for (const SweepRow& r : res.rows)
    os << fmt_num(r.value) << ',' << r.trial << ',' << fmt_num(r.total_time_s) << ',' << fmt_num(r.energy_j) << ','
       << fmt_num(r.flight_m) << ',' << (r.success ? 1 : 0) << '\n';
  for (const SweepAggregate& a : res.aggregates) {
    os << fmt_num(a.value) << ",mean," << fmt_num(a.mean_time_s) << ',' << fmt_num(a.mean_energy_j) << ','
       << fmt_num(a.mean_flight_m) << ',' << fmt_num(a.success_rate) << '\n';
    if (spec.trials_per_value > 1)
      os << fmt_num(a.value) << ",stddev," << fmt_num(a.std_time_s) << ',' << fmt_num(a.std_energy_j) << ','
         << fmt_num(a.std_flight_m) << ",\n";
  }
}

// --- CSV helpers and plot-data export --------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw IoError("csv: missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
  t.header = split_csv_line(line);
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(split_csv_line(line));
  return t;
}

/// Trailing mean over the last min(window, i + 1) values.
inline std::vector<double> moving_average(const std::vector<double>& xs, std::size_t window) {
  if (window == 0) throw ParameterError("moving_average: window must be >= 1");
  std::vector<double> out(xs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sum += xs[i];
    if (i >= window) sum -= xs[i - window];
    out[i] = sum / static_cast<double>(std::min(window, i + 1));
  }
  return out;
}

inline const std::vector<std::string>& plotdata_inputs() {
  static const std::vector<std::string> names{"training_log.csv", "sweep.csv", "trajectory.csv"};
  return names;
}

/// Writes tidy plot series for whichever run artifacts exist; returns the files written.
inline std::vector<std::filesystem::path> export_plotdata(const std::filesystem::path& run_dir,
                                                          const std::filesystem::path& out_dir, std::size_t window) {
  namespace fs = std::filesystem;
  std::vector<fs::path> written;
  const bool any = std::any_of(plotdata_inputs().begin(), plotdata_inputs().end(),
                               [&](const std::string& n) { return fs::exists(run_dir / n); });
  if (!any) {
    std::string expected;
    for (const std::string& n : plotdata_inputs()) expected += (expected.empty() ? "" : ", ") + n;
    throw IoError("no plot inputs in " + run_dir.string() + " (expected at least one of: " + expected + ")");
  }
  fs::create_directories(out_dir);

  if (fs::exists(run_dir / "training_log.csv")) {
    const CsvTable t = read_csv(run_dir / "training_log.csv");
    const std::size_t c_step = t.column("env_step"), c_ep = t.column("episode"), c_ret = t.column("return");
    std::vector<double> returns;
    for (const auto& r : t.rows) returns.push_back(std::stod(r.at(c_ret)));
    const std::vector<double> smooth = moving_average(returns, window);
    std::ofstream os(out_dir / "training_curve.csv");
    os << "env_step,episode,return,smoothed_return\n";
    for (std::size_t i = 0; i < t.rows.size(); ++i)
      os << t.rows[i].at(c_step) << ',' << t.rows[i].at(c_ep) << ',' << fmt_num(returns[i]) << ','
         << fmt_num(smooth[i]) << '\n';
    written.push_back(out_dir / "training_curve.csv");
  }

  if (fs::exists(run_dir / "sweep.csv")) {
    const CsvTable t = read_csv(run_dir / "sweep.csv");
    const std::size_t c_val = t.column("value"), c_trial = t.column("trial");
    std::map<double, std::vector<std::string>> mean, sd;
    for (const auto& r : t.rows) {
      if (r.at(c_trial) == "mean") mean[std::stod(r.at(c_val))] = r;
      if (r.at(c_trial) == "stddev") sd[std::stod(r.at(c_val))] = r;
    }
    std::ofstream os(out_dir / "sweep_curve.csv");
    os << "value,mean_time_s,std_time_s,mean_energy_J,std_energy_J,mean_flight_m,std_flight_m,success_rate\n";
    for (const auto& [v, r] : mean) {
      const auto s = sd.count(v) ? sd.at(v) : std::vector<std::string>{"", "", "0", "0", "0", ""};
      os << fmt_num(v) << ',' << r.at(2) << ',' << s.at(2) << ',' << r.at(3) << ',' << s.at(3) << ',' << r.at(4)
         << ',' << s.at(4) << ',' << r.at(5) << '\n';
    }
    written.push_back(out_dir / "sweep_curve.csv");
  }

  if (fs::exists(run_dir / "trajectory.csv")) {
    const CsvTable t = read_csv(run_dir / "trajectory.csv");
    const std::size_t c_ep = t.column("episode"), c_step = t.column("step"), c_fx = t.column("from_x"),
                      c_fy = t.column("from_y"), c_tx = t.column("to_x"), c_ty = t.column("to_y"),
                      c_ns = t.column("n_s");
    std::ofstream os(out_dir / "trajectory_overlay.csv");
    os << "episode,point,x,y,kind,n_s\n";
    std::string last_ep;
    std::size_t point = 0;
    for (const auto& r : t.rows) {
      if (r.at(c_ep) != last_ep) {
        last_ep = r.at(c_ep);
        point = 0;
        os << last_ep << ',' << point++ << ',' << r.at(c_fx) << ',' << r.at(c_fy) << ",start,0\n";
      }
      (void)c_step;
      os << last_ep << ',' << point++ << ',' << r.at(c_tx) << ',' << r.at(c_ty) << ",hover," << r.at(c_ns) << '\n';
    }
    written.push_back(out_dir / "trajectory_overlay.csv");
  }
  return written;
}

}  // namespace uavbc

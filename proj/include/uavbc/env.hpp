#pragma once

// Episodic data-collection MDP: the UAV flies a leg, hovers, reorients the MA
// and collects every qualified BD, then receives a time-penalised reward.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "energy.hpp"
#include "errors.hpp"
#include "link.hpp"
#include "world.hpp"

namespace uavbc {

enum class AntennaMode { ma, fpa };

inline const char* to_string(AntennaMode m) noexcept { return m == AntennaMode::ma ? "MA" : "FPA"; }

struct EnvConfig {
  ChannelParams channel;
  BackscatterCoeff backscatter;
  PropulsionParams propulsion;
  MaParams ma;
  double energy_capacity_j = 200e3;
  double comm_power_w = 1.0;
  std::size_t step_cap = 60;
  double reward_per_bd = 50.0;
  double reward_finish = 500.0;
  AntennaMode mode = AntennaMode::ma;

  double reader_gain_dbi() const noexcept {
    return mode == AntennaMode::ma ? channel.reader_gain_dbi : channel.fpa_reader_gain_dbi;
  }
  std::size_t action_dim() const noexcept { return mode == AntennaMode::ma ? 4 : 2; }
};

struct EnvAction {
  double a_f = 0.0;         // fraction of d_max, [0, 1]
  double a_r = 0.0;         // heading, [0, 2pi]
  double theta_init = 0.0;  // [0, pi/2)
  double phi_init = 0.0;    // [0, 2pi)
};

/// Affine map from the agent's [-1, 1]^n box to the physical action ranges.
/// FPA mode reads only the first two components.
inline EnvAction map_action(std::span<const double> normalized, AntennaMode mode) {
  const std::size_t need = mode == AntennaMode::ma ? 4 : 2;
  if (normalized.size() != need)
    throw UsageError("map_action: expected " + std::to_string(need) + " action components, got " +
                     std::to_string(normalized.size()));
  auto unit = [](double v) { return std::clamp((v + 1.0) * 0.5, 0.0, 1.0); };
  EnvAction a;
  a.a_f = unit(normalized[0]);
  a.a_r = unit(normalized[1]) * kTwoPi;
  if (mode == AntennaMode::ma) {
    a.theta_init = std::min(unit(normalized[2]) * (kPi / 2.0), std::nextafter(kPi / 2.0, 0.0));
    a.phi_init = wrap_two_pi(unit(normalized[3]) * kTwoPi);
  }
  return a;
}

struct EnvState {
  Vec2 uav;
  std::vector<bool> collected;
  std::vector<double> azimuths_rad;
  std::vector<double> distances_m;

  std::size_t num_bds() const noexcept { return collected.size(); }
  bool all_collected() const noexcept {
    return std::all_of(collected.begin(), collected.end(), [](bool c) { return c; });
  }

  /// Agent features in [0, 1]: [x/L, y/L, o..., phi/2pi..., d/L...].
  std::vector<double> features(double area_side_m) const {
    std::vector<double> f;
    f.reserve(2 + 3 * num_bds());
    f.push_back(uav.x / area_side_m);
    f.push_back(uav.y / area_side_m);
    for (bool c : collected) f.push_back(c ? 1.0 : 0.0);
    for (double a : azimuths_rad) f.push_back(a / kTwoPi);
    for (double d : distances_m) f.push_back(d / area_side_m);
    return f;
  }
};

inline std::size_t state_dim(std::size_t num_bds) noexcept { return 2 + 3 * num_bds; }

struct MoveResult {
  Vec2 position;
  double distance_m = 0.0;
  double time_s = 0.0;
};

inline double max_step_distance(double area_side_m) noexcept { return std::sqrt(2.0) * area_side_m; }

/// Candidate point along heading a_r, clipped into [0,L]^2. The flown
/// distance is the actual displacement after clipping.
inline MoveResult apply_move(Vec2 from, double a_f, double a_r, double area_side_m, double speed_mps) {
  const double d = a_f * max_step_distance(area_side_m);
  Vec2 to{from.x + d * std::cos(a_r), from.y + d * std::sin(a_r)};
  to.x = std::clamp(to.x, 0.0, area_side_m);
  to.y = std::clamp(to.y, 0.0, area_side_m);
  MoveResult m;
  m.position = to;
  m.distance_m = distance(from, to);
  m.time_s = m.distance_m / speed_mps;
  return m;
}

struct ServiceReport {
  std::vector<std::size_t> served_ids;  // in service order
  std::vector<Orientation> ma_targets;
  std::vector<double> collection_times_s;
  std::vector<double> rates_bps;
  std::vector<MaMove> ma_moves;  // initial move first
  double init_move_time_s = 0.0;
  double t_ma_s = 0.0;
  double t_bc_s = 0.0;
  double e_ma_j = 0.0;
  double e_comm_j = 0.0;
  double e_hover_j = 0.0;
  Orientation final_orientation;

  std::size_t n_served() const noexcept { return served_ids.size(); }
};

/// BDs that pass both sensitivity tests from `pose` with the reader aimed at them.
inline std::vector<std::size_t> qualified_bds(Vec2 pose, const Scenario& sc, const std::vector<bool>& collected,
                                              const EnvConfig& cfg) {
  const double xi = cfg.backscatter.xi();
  std::vector<std::size_t> q;
  for (const BdSpec& bd : sc.bds) {
    if (collected[bd.id]) continue;
    if (qualifies(link_budget(pose, sc.altitude_m, bd, cfg.channel, xi, cfg.reader_gain_dbi()), cfg.channel))
      q.push_back(bd.id);
  }
  return q;
}

/// Hover-point service. MA: move to the initial orientation, then visit the
/// qualified BDs greedily by shortest next reorientation (ties: lower id).
/// FPA: no reorientation, service in id order.
inline ServiceReport serve_hover_point(Vec2 pose, Orientation current, Orientation init, const Scenario& sc,
                                       const std::vector<bool>& collected, const EnvConfig& cfg) {
  ServiceReport rep;
  const double xi = cfg.backscatter.xi();
  const bool use_ma = cfg.mode == AntennaMode::ma;

  if (use_ma) {
    const MaMove m = ma_move(current, init, cfg.ma);
    rep.ma_moves.push_back(m);
    rep.init_move_time_s = m.time_s;
    rep.t_ma_s += m.time_s;
    rep.e_ma_j += m.energy_j;
    current = init;
  }

  std::vector<std::size_t> pending = qualified_bds(pose, sc, collected, cfg);
  while (!pending.empty()) {
    std::size_t pick = 0;
    if (use_ma) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < pending.size(); ++i) {
        const double t = ma_move(current, aim_angles(pose, sc.altitude_m, sc.bds[pending[i]].position), cfg.ma).time_s;
        if (t < best) {  // pending is id-ordered, so strict < keeps the lower id on ties
          best = t;
          pick = i;
        }
      }
    }
    const BdSpec& bd = sc.bds[pending[pick]];
    pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(pick));

    const Orientation target = aim_angles(pose, sc.altitude_m, bd.position);
    if (use_ma) {
      const MaMove m = ma_move(current, target, cfg.ma);
      rep.ma_moves.push_back(m);
      rep.t_ma_s += m.time_s;
      rep.e_ma_j += m.energy_j;
      current = target;
    }
    const LinkBudget b = link_budget(pose, sc.altitude_m, bd, cfg.channel, xi, cfg.reader_gain_dbi());
    const double t_bc = collection_time(bd.data_volume_bits, b.rate_bps);
    rep.served_ids.push_back(bd.id);
    rep.ma_targets.push_back(target);
    rep.collection_times_s.push_back(t_bc);
    rep.rates_bps.push_back(b.rate_bps);
    rep.t_bc_s += t_bc;
    rep.e_comm_j += cfg.comm_power_w * t_bc;
  }
  rep.e_hover_j = hover_power(cfg.propulsion) * (rep.t_ma_s + rep.t_bc_s);
  rep.final_orientation = current;
  return rep;
}

struct RewardBreakdown {
  double collect = 0.0;      // r_b
  double finish = 0.0;       // r_f
  double flight = 0.0;       // p_f
  double reorient = 0.0;     // p_MA
  double communicate = 0.0;  // p_c

  double total() const noexcept { return collect + finish + flight + reorient + communicate; }
};

inline RewardBreakdown compute_reward(const ServiceReport& rep, double flown_m, bool completes_mission,
                                      const EnvConfig& cfg) {
  RewardBreakdown r;
  r.collect = static_cast<double>(rep.n_served()) * cfg.reward_per_bd;
  r.finish = completes_mission ? cfg.reward_finish : 0.0;
  r.flight = -flown_m / cfg.propulsion.uav_speed_mps;
  r.reorient = -rep.t_ma_s;
  r.communicate = -rep.t_bc_s;
  return r;
}

struct StepEnergies {
  double flight_j = 0.0;
  double hover_j = 0.0;
  double comm_j = 0.0;
  double ma_j = 0.0;
  double total() const noexcept { return flight_j + hover_j + comm_j + ma_j; }
};

struct StepInfo {
  std::size_t step = 0;
  EnvAction action;
  Vec2 from;
  Vec2 to;
  double flown_m = 0.0;
  double t_fly_s = 0.0;
  double t_ma_s = 0.0;
  double t_bc_s = 0.0;
  StepEnergies energies;
  std::vector<std::size_t> served_ids;
  std::vector<Orientation> ma_targets;
  RewardBreakdown reward;
  bool terminal = false;   // mission complete or energy exhausted
  bool truncated = false;  // step cap reached
  bool success = false;

  std::size_t n_served() const noexcept { return served_ids.size(); }
};

struct StepOutcome {
  EnvState next_state;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

struct EpisodeSummary {
  double flight_time_s = 0.0;
  double collection_time_s = 0.0;
  double reorientation_time_s = 0.0;
  double total_time_s = 0.0;
  double total_energy_j = 0.0;
  double flight_distance_m = 0.0;
  double episode_return = 0.0;
  std::size_t steps = 0;
  std::size_t collected = 0;
  bool success = false;
};

class Environment {
 public:
  Environment(Scenario scenario, EnvConfig cfg) : scenario_(std::move(scenario)), cfg_(std::move(cfg)), ledger_(cfg_.energy_capacity_j) {
    validate(scenario_);
    cfg_.channel.validate();
    cfg_.propulsion.validate();
    cfg_.ma.validate();
    (void)cfg_.backscatter.xi();
    if (cfg_.step_cap < 1) throw ParameterError("env: step cap must be >= 1");
    if (!(cfg_.comm_power_w >= 0.0)) throw ParameterError("env: communication power must be >= 0");
    reset();
  }

  const EnvState& reset() {
    state_.uav = scenario_.uav_start;
    state_.collected.assign(scenario_.num_bds(), false);
    refresh_observation();
    ledger_ = EnergyLedger(cfg_.energy_capacity_j);
    orientation_ = {0.0, 0.0};
    history_.clear();
    done_ = false;
    return state_;
  }

  StepOutcome step_normalized(std::span<const double> action) { return step(map_action(action, cfg_.mode)); }

  StepOutcome step(const EnvAction& action) {
    if (done_) throw UsageError("env: step called on a finished episode");
    StepInfo info;
    info.step = history_.size();
    info.action = action;
    info.from = state_.uav;

    const MoveResult mv = apply_move(state_.uav, action.a_f, action.a_r, scenario_.area_side_m,
                                     cfg_.propulsion.uav_speed_mps);
    info.to = mv.position;
    info.flown_m = mv.distance_m;
    info.t_fly_s = mv.time_s;
    const double cruise_w = propulsion_power(cfg_.propulsion, cfg_.propulsion.uav_speed_mps);
    info.energies.flight_j = cruise_w * mv.time_s;
    ledger_.charge(EnergyComponent::flight, cruise_w, mv.time_s);
    state_.uav = mv.position;

    const Orientation init{action.theta_init, action.phi_init};
    const ServiceReport rep = serve_hover_point(state_.uav, orientation_, init, scenario_, state_.collected, cfg_);
    orientation_ = rep.final_orientation;
    info.t_ma_s = rep.t_ma_s;
    info.t_bc_s = rep.t_bc_s;
    info.served_ids = rep.served_ids;
    info.ma_targets = rep.ma_targets;
    info.energies.hover_j = rep.e_hover_j;
    info.energies.comm_j = rep.e_comm_j;
    info.energies.ma_j = rep.e_ma_j;
    ledger_.charge(EnergyComponent::hover, hover_power(cfg_.propulsion), rep.t_ma_s + rep.t_bc_s);
    ledger_.charge(EnergyComponent::comm, cfg_.comm_power_w, rep.t_bc_s);
    for (const MaMove& m : rep.ma_moves) ledger_.charge(EnergyComponent::ma, m.power_w, m.time_s);
    for (std::size_t id : rep.served_ids) state_.collected[id] = true;
    refresh_observation();

    const bool feasible = ledger_.feasible();
    const bool complete = state_.all_collected();
    info.success = complete && feasible;
    info.terminal = complete || !feasible;
    info.truncated = !info.terminal && history_.size() + 1 >= cfg_.step_cap;
    info.reward = compute_reward(rep, mv.distance_m, info.success && rep.n_served() > 0, cfg_);
    done_ = info.terminal || info.truncated;

    history_.push_back(info);
    StepOutcome out;
    out.next_state = state_;
    out.reward = info.reward.total();
    out.done = done_;
    out.info = std::move(info);
    return out;
  }

  EpisodeSummary summarize() const {
    if (!done_) throw UsageError("env: summarize called before the episode finished");
    EpisodeSummary s;
    for (const StepInfo& i : history_) {
      s.flight_time_s += i.t_fly_s;
      s.collection_time_s += i.t_bc_s;
      s.reorientation_time_s += i.t_ma_s;
      s.flight_distance_m += i.flown_m;
      s.episode_return += i.reward.total();
    }
    s.total_time_s = s.flight_time_s + s.collection_time_s + s.reorientation_time_s;
    s.total_energy_j = ledger_.total_j();
    s.steps = history_.size();
    s.collected = static_cast<std::size_t>(std::count(state_.collected.begin(), state_.collected.end(), true));
    s.success = !history_.empty() && history_.back().success;
    return s;
  }

  std::vector<double> observation() const { return state_.features(scenario_.area_side_m); }
  const EnvState& state() const noexcept { return state_; }
  const Scenario& scenario() const noexcept { return scenario_; }
  const EnvConfig& config() const noexcept { return cfg_; }
  const EnergyLedger& ledger() const noexcept { return ledger_; }
  const std::vector<StepInfo>& history() const noexcept { return history_; }
  Orientation ma_orientation() const noexcept { return orientation_; }
  bool done() const noexcept { return done_; }
  std::size_t action_dim() const noexcept { return cfg_.action_dim(); }
  std::size_t state_dim() const noexcept { return uavbc::state_dim(scenario_.num_bds()); }

 private:
  void refresh_observation() {
    BdObservation obs = observe_bds(state_.uav, scenario_.bds);
    state_.distances_m = std::move(obs.distance_m);
    state_.azimuths_rad = std::move(obs.azimuth_rad);
  }

  Scenario scenario_;
  EnvConfig cfg_;
  EnergyLedger ledger_;
  EnvState state_;
  Orientation orientation_;
  std::vector<StepInfo> history_;
  bool done_ = false;
};

// --- trace export ---------------------------------------------------------

inline nlohmann::json to_json(const StepInfo& i) {
  nlohmann::json targets = nlohmann::json::array();
  for (const Orientation& o : i.ma_targets) targets.push_back({o.theta, o.phi});
  return {{"step", i.step},
          {"xy", {i.to.x, i.to.y}},
          {"action", {i.action.a_f, i.action.a_r, i.action.theta_init, i.action.phi_init}},
          {"reward", i.reward.total()},
          {"n_s", i.n_served()},
          {"t_fly", i.t_fly_s},
          {"t_ma", i.t_ma_s},
          {"t_bc", i.t_bc_s},
          {"served_ids", i.served_ids},
          {"ma_targets", std::move(targets)},
          {"energies",
           {{"flight", i.energies.flight_j},
            {"hover", i.energies.hover_j},
            {"comm", i.energies.comm_j},
            {"ma", i.energies.ma_j}}}};
}

/// One JSON object per line, one line per step.
inline void write_trace_jsonl(std::ostream& os, const std::vector<StepInfo>& history) {
  for (const StepInfo& i : history) os << to_json(i).dump() << '\n';
}

inline const char* kTrajectoryCsvHeader =
    "episode,step,from_x,from_y,to_x,to_y,leg_m,n_s,served_ids,ma_theta,ma_phi";

/// Legs and hover points. Multi-valued cells (ids, MA targets) are ';'-joined.
inline void write_trajectory_rows(std::ostream& os, std::size_t episode, const std::vector<StepInfo>& history) {
  auto join = [](const auto& xs, auto proj) {
    std::string s;
    for (std::size_t n = 0; n < xs.size(); ++n) {
      if (n) s += ';';
      s += proj(xs[n]);
    }
    return s;
  };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const StepInfo& i : history) {
    os << episode << ',' << i.step << ',' << num(i.from.x) << ',' << num(i.from.y) << ',' << num(i.to.x) << ','
       << num(i.to.y) << ',' << num(i.flown_m) << ',' << i.n_served() << ','
       << join(i.served_ids, [](std::size_t id) { return std::to_string(id); }) << ','
       << join(i.ma_targets, [&](const Orientation& o) { return num(o.theta); }) << ','
       << join(i.ma_targets, [&](const Orientation& o) { return num(o.phi); }) << '\n';
  }
}

}  // namespace uavbc

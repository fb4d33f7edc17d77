#pragma once

// Scenario description and the geometric primitives shared by every module:
// MA aiming angles, slant range, and the per-BD observation vectors.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace uavbc {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double distance(Vec2 a, Vec2 b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

/// Maps any finite angle into [0, 2pi).
inline double wrap_two_pi(double angle) noexcept {
  double w = std::fmod(angle, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;  // fmod of values just below a multiple can round up
  return w;
}

struct BdSpec {
  std::size_t id = 0;
  Vec2 position;
  double data_volume_bits = 0.0;
  double gain_dbi = 0.0;
  friend bool operator==(const BdSpec&, const BdSpec&) = default;
};

struct Scenario {
  double area_side_m = 200.0;
  double altitude_m = 30.0;
  Vec2 uav_start{0.0, 0.0};
  std::vector<BdSpec> bds;
  std::uint64_t seed = 0;

  std::size_t num_bds() const noexcept { return bds.size(); }
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Throws ParameterError unless the scenario satisfies its invariants.
inline void validate(const Scenario& s) {
  if (!(s.area_side_m > 0.0)) throw ParameterError("scenario: area side L must be > 0");
  if (!(s.altitude_m > 0.0)) throw ParameterError("scenario: altitude H must be > 0");
  if (s.bds.empty()) throw ParameterError("scenario: at least one BD required");
  auto inside = [&](Vec2 p) {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= s.area_side_m && p.y <= s.area_side_m;
  };
  if (!inside(s.uav_start)) throw ParameterError("scenario: UAV start outside the area");
  for (std::size_t k = 0; k < s.bds.size(); ++k) {
    const BdSpec& bd = s.bds[k];
    if (bd.id != k) throw ParameterError("scenario: BD ids must be contiguous 0..K-1");
    if (!inside(bd.position)) throw ParameterError("scenario: BD " + std::to_string(k) + " outside the area");
    if (!(bd.data_volume_bits > 0.0)) throw ParameterError("scenario: BD " + std::to_string(k) + " has non-positive volume");
  }
}

struct ScenarioSpec {
  std::uint64_t seed = 0;
  std::size_t num_bds = 20;
  double area_side_m = 200.0;
  double altitude_m = 30.0;
  double volume_min_bits = 0.1e6;
  double volume_max_bits = 0.5e6;
  double bd_gain_dbi = 0.0;
  Vec2 uav_start{0.0, 0.0};
};

/// BDs uniform in [0,L]^2, volumes uniform in [vmin, vmax). Deterministic in seed.
inline Scenario generate_scenario(const ScenarioSpec& spec) {
  if (spec.num_bds < 1) throw ParameterError("generate_scenario: K must be >= 1");
  if (!(spec.area_side_m > 0.0)) throw ParameterError("generate_scenario: L must be > 0");
  if (!(spec.altitude_m > 0.0)) throw ParameterError("generate_scenario: H must be > 0");
  if (!(spec.volume_min_bits > 0.0) || !(spec.volume_min_bits < spec.volume_max_bits))
    throw ParameterError("generate_scenario: volume range must satisfy 0 < low < high");

  CounterRng rng(spec.seed);
  Scenario s;
  s.area_side_m = spec.area_side_m;
  s.altitude_m = spec.altitude_m;
  s.uav_start = spec.uav_start;
  s.seed = spec.seed;
  s.bds.reserve(spec.num_bds);
  for (std::size_t k = 0; k < spec.num_bds; ++k) {
    BdSpec bd;
    bd.id = k;
    bd.position.x = rng.uniform(0.0, spec.area_side_m);
    bd.position.y = rng.uniform(0.0, spec.area_side_m);
    bd.data_volume_bits = rng.uniform(spec.volume_min_bits, spec.volume_max_bits);
    bd.gain_dbi = spec.bd_gain_dbi;
    s.bds.push_back(bd);
  }
  validate(s);
  return s;
}

inline Scenario generate_scenario(std::uint64_t seed, std::size_t num_bds, double area_side_m, double altitude_m,
                                  std::pair<double, double> volume_range_bits) {
  ScenarioSpec spec;
  spec.seed = seed;
  spec.num_bds = num_bds;
  spec.area_side_m = area_side_m;
  spec.altitude_m = altitude_m;
  spec.volume_min_bits = volume_range_bits.first;
  spec.volume_max_bits = volume_range_bits.second;
  return generate_scenario(spec);
}

/// Main-lobe orientation for a BD.
struct Orientation {
  double theta = 0.0;  // elevation, [0, pi/2]
  double phi = 0.0;    // azimuth, [0, 2pi)
  friend bool operator==(const Orientation&, const Orientation&) = default;
};

/// Azimuth of `to` seen from `from`, in [0, 2pi); 0 when the points coincide.
inline double azimuth(Vec2 from, Vec2 to) noexcept {
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  if (dx == 0.0 && dy == 0.0) return 0.0;
  return wrap_two_pi(std::atan2(dy, dx));
}

/// Optimal MA orientation from a UAV at (uav, h) towards a ground BD.
/// Directly overhead is clamped to theta = pi/2, phi = 0.
inline Orientation aim_angles(Vec2 uav, double h, Vec2 bd) noexcept {
  const double horizontal = distance(uav, bd);
  if (horizontal == 0.0) return {kPi / 2.0, 0.0};
  return {std::atan(h / horizontal), azimuth(uav, bd)};
}

inline double slant_range(Vec2 uav, double h, Vec2 bd) noexcept {
  const double dx = uav.x - bd.x;
  const double dy = uav.y - bd.y;
  return std::sqrt(dx * dx + dy * dy + h * h);
}

struct BdObservation {
  std::vector<double> distance_m;
  std::vector<double> azimuth_rad;
};

/// Horizontal distance and azimuth to every BD, ordered by id.
inline BdObservation observe_bds(Vec2 uav, const std::vector<BdSpec>& bds) {
  BdObservation obs;
  obs.distance_m.reserve(bds.size());
  obs.azimuth_rad.reserve(bds.size());
  for (const BdSpec& bd : bds) {
    obs.distance_m.push_back(distance(uav, bd.position));
    obs.azimuth_rad.push_back(azimuth(uav, bd.position));
  }
  return obs;
}

// JSON layout: {L, H, start:[x,y], seed, bds:[{id, x, y, volume_bits, gain_dbi}]}

inline nlohmann::json to_json(const Scenario& s) {
  nlohmann::json bds = nlohmann::json::array();
  for (const BdSpec& bd : s.bds) {
    bds.push_back({{"id", bd.id},
                   {"x", bd.position.x},
                   {"y", bd.position.y},
                   {"volume_bits", bd.data_volume_bits},
                   {"gain_dbi", bd.gain_dbi}});
  }
  return {{"L", s.area_side_m},
          {"H", s.altitude_m},
          {"start", {s.uav_start.x, s.uav_start.y}},
          {"seed", s.seed},
          {"bds", std::move(bds)}};
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  try {
    Scenario s;
    s.area_side_m = j.at("L").get<double>();
    s.altitude_m = j.at("H").get<double>();
    const auto& start = j.at("start");
    if (!start.is_array() || start.size() != 2) throw ParameterError("scenario json: start must be [x, y]");
    s.uav_start = {start[0].get<double>(), start[1].get<double>()};
    s.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& b : j.at("bds")) {
      BdSpec bd;
      bd.id = b.at("id").get<std::size_t>();
      bd.position = {b.at("x").get<double>(), b.at("y").get<double>()};
      bd.data_volume_bits = b.at("volume_bits").get<double>();
      bd.gain_dbi = b.at("gain_dbi").get<double>();
      s.bds.push_back(bd);
    }
    validate(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("scenario json: ") + e.what());
  }
}

}  // namespace uavbc

#pragma once

// Rotary-wing propulsion power, MA actuation cost and the mission energy
// ledger.

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "world.hpp"

namespace uavbc {

struct PropulsionParams {
  double tip_speed_mps = 80.0;
  double hover_induced_velocity_mps = 5.0463;
  double air_density_kgpm3 = 1.225;
  double rotor_solidity = 0.1248;
  double disc_area_m2 = 0.1256;
  double fuselage_drag_ratio = 0.5009;
  double profile_drag_coeff = 0.012;
  double blade_angular_velocity_radps = 400.0;
  double rotor_radius_m = 0.2;
  double induced_power_correction = 0.05;
  double weight_n = 7.84;
  double uav_speed_mps = 10.0;

  void validate() const {
    for (double v : {tip_speed_mps, hover_induced_velocity_mps, air_density_kgpm3, rotor_solidity, disc_area_m2,
                     fuselage_drag_ratio, profile_drag_coeff, blade_angular_velocity_radps, rotor_radius_m,
                     induced_power_correction, weight_n, uav_speed_mps}) {
      if (!(v > 0.0)) throw ParameterError("propulsion: all parameters must be > 0");
    }
  }
};

struct RotorConstants {
  double blade_profile_w;  // P0
  double induced_w;        // P1
};

inline RotorConstants rotor_constants(const PropulsionParams& p) noexcept {
  const double omega_r = p.blade_angular_velocity_radps * p.rotor_radius_m;
  const double p0 = p.profile_drag_coeff * p.air_density_kgpm3 * omega_r * omega_r * omega_r * p.disc_area_m2 / 8.0;
  const double p1 = (1.0 + p.induced_power_correction) * std::pow(p.weight_n, 1.5) /
                    std::sqrt(2.0 * p.air_density_kgpm3 * p.disc_area_m2);
  return {p0, p1};
}

/// Propulsion power at forward speed v; v = 0 gives the hover power P0 + P1.
inline double propulsion_power(const PropulsionParams& p, double v) {
  if (v < 0.0) throw ParameterError("propulsion_power: speed must be >= 0");
  const auto [p0, p1] = rotor_constants(p);
  const double v2 = v * v;
  const double v0 = p.hover_induced_velocity_mps;
  const double v0_2 = v0 * v0;
  const double blade = p0 * (1.0 + 3.0 * v2 / (p.tip_speed_mps * p.tip_speed_mps));
  const double induced = p1 * std::sqrt(std::sqrt(1.0 + v2 * v2 / (4.0 * v0_2 * v0_2)) - v2 / (2.0 * v0_2));
  const double parasite =
      0.5 * p.air_density_kgpm3 * p.fuselage_drag_ratio * p.rotor_solidity * p.disc_area_m2 * v2 * v;
  return blade + induced + parasite;
}

inline double hover_power(const PropulsionParams& p) { return propulsion_power(p, 0.0); }

struct MaParams {
  double base_power_w = 2.0;
  double zeta_w_per_rad = 0.05;
  double kappa_w_per_rad = 0.03;
  double v_theta_radps = kPi;
  double v_phi_radps = kPi;

  void validate() const {
    if (!(base_power_w > 0.0 && zeta_w_per_rad > 0.0 && kappa_w_per_rad > 0.0 && v_theta_radps > 0.0 &&
          v_phi_radps > 0.0))
      throw ParameterError("ma: all parameters must be > 0");
  }
};

struct MaMove {
  double dtheta = 0.0;
  double dphi = 0.0;
  double time_s = 0.0;
  double power_w = 0.0;
  double energy_j = 0.0;
};

/// Shortest rotation between two azimuths, in [0, pi].
inline double azimuth_gap(double a, double b) noexcept {
  const double d = std::fabs(wrap_two_pi(a) - wrap_two_pi(b));
  return std::min(d, kTwoPi - d);
}

/// Reorientation cost; both axes turn concurrently, so the slower one sets the time.
inline MaMove ma_move(Orientation from, Orientation to, const MaParams& ma) noexcept {
  MaMove m;
  m.dtheta = std::fabs(to.theta - from.theta);
  m.dphi = azimuth_gap(from.phi, to.phi);
  m.time_s = std::max(m.dtheta / ma.v_theta_radps, m.dphi / ma.v_phi_radps);
  m.power_w = ma.base_power_w + ma.zeta_w_per_rad * m.dtheta + ma.kappa_w_per_rad * m.dphi;
  m.energy_j = m.power_w * m.time_s;
  return m;
}

enum class EnergyComponent { flight, hover, comm, ma };

class EnergyLedger {
 public:
  explicit EnergyLedger(double capacity_j = 200e3) : capacity_j_(capacity_j) {
    if (!(capacity_j > 0.0)) throw ParameterError("energy ledger: capacity must be > 0");
  }

  /// Adds power * duration to one component. Returns false once the total
  /// exceeds capacity; the charge is recorded either way.
  bool charge(EnergyComponent c, double power_w, double duration_s) {
    if (power_w < 0.0 || duration_s < 0.0) throw ParameterError("energy ledger: negative power or duration");
    const double e = power_w * duration_s;
    switch (c) {
      case EnergyComponent::flight: flight_j_ += e; break;
      case EnergyComponent::hover: hover_j_ += e; break;
      case EnergyComponent::comm: comm_j_ += e; break;
      case EnergyComponent::ma: ma_j_ += e; break;
    }
    return feasible();
  }

  double flight_j() const noexcept { return flight_j_; }
  double hover_j() const noexcept { return hover_j_; }
  double comm_j() const noexcept { return comm_j_; }
  double ma_j() const noexcept { return ma_j_; }
  double capacity_j() const noexcept { return capacity_j_; }
  double total_j() const noexcept { return flight_j_ + hover_j_ + comm_j_ + ma_j_; }
  bool feasible() const noexcept { return total_j() <= capacity_j_; }

 private:
  double capacity_j_;
  double flight_j_ = 0.0;
  double hover_j_ = 0.0;
  double comm_j_ = 0.0;
  double ma_j_ = 0.0;
};

}  // namespace uavbc

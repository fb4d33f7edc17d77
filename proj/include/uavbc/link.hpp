#pragma once

// Probabilistic air-to-ground channel and the monostatic backscatter link
// budget: LoS probability, mean path loss, received powers at both ends,
// sensitivity qualification and the achievable collection rate.

#include <cmath>
#include <numbers>
#include <utility>

#include "errors.hpp"
#include "world.hpp"

namespace uavbc {

inline constexpr double kSpeedOfLight = 299792458.0;

inline double db_to_linear(double db) noexcept { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) noexcept { return 10.0 * std::log10(lin); }
inline double watts_to_dbm(double w) noexcept { return 10.0 * std::log10(w * 1e3); }
inline double dbm_to_milliwatts(double dbm) noexcept { return std::pow(10.0, dbm / 10.0); }

struct ChannelParams {
  double carrier_freq_hz = 2e9;
  double env_rho = 9.61;
  double env_beta = 0.16;
  double eta_los_db = 1.0;
  double eta_nlos_db = 20.0;
  double noise_dbm = -100.0;
  double bandwidth_hz = 20e6;
  double carrier_power_w = 1.0;
  double reader_sens_dbm = -100.0;
  double bd_sens_dbm = -50.0;
  double reader_gain_dbi = 10.0;      // MA main lobe
  double fpa_reader_gain_dbi = 5.0;   // omni-directional fixed antenna

  double wavelength_m() const noexcept { return kSpeedOfLight / carrier_freq_hz; }

  void validate() const {
    if (!(carrier_freq_hz > 0.0)) throw ParameterError("channel: carrier frequency must be > 0");
    if (!(bandwidth_hz > 0.0)) throw ParameterError("channel: bandwidth must be > 0");
    if (!(carrier_power_w > 0.0)) throw ParameterError("channel: carrier power must be > 0");
    if (!(eta_nlos_db >= eta_los_db)) throw ParameterError("channel: eta_nlos must be >= eta_los");
    if (!(env_rho > 0.0) || !(env_beta > 0.0)) throw ParameterError("channel: rho and beta must be > 0");
  }
};

/// Backscatter efficiency inputs; Theta is an on-object penalty in dB.
struct BackscatterCoeff {
  double chi = 0.5;
  double modulation_m = 0.5;
  double theta_db = 0.0;

  double xi() const {
    if (!(chi > 0.0 && chi <= 1.0)) throw ParameterError("backscatter: chi must lie in (0, 1]");
    if (!(modulation_m > 0.0 && modulation_m <= 1.0)) throw ParameterError("backscatter: M must lie in (0, 1]");
    if (!(theta_db >= 0.0)) throw ParameterError("backscatter: on-object penalty must be >= 0 dB");
    const double penalty = db_to_linear(theta_db);
    return chi * chi * modulation_m / (penalty * penalty);
  }
};

/// Logistic LoS probability with the elevation expressed in degrees.
inline double los_probability(double elevation_rad, double rho, double beta) noexcept {
  const double deg = elevation_rad * 180.0 / std::numbers::pi;
  return 1.0 / (1.0 + rho * std::exp(-beta * (deg - rho)));
}

/// Friis-style loss with linear gains inside the square root, plus excess loss eta.
inline double path_loss(double r_m, double wavelength_m, double g_tr_dbi, double g_bd_dbi, double eta_db) {
  if (!(r_m > 0.0)) throw ParameterError("path_loss: range must be > 0");
  const double gains = std::sqrt(db_to_linear(g_tr_dbi) * db_to_linear(g_bd_dbi));
  return 20.0 * std::log10(4.0 * std::numbers::pi * r_m / (wavelength_m * gains)) + eta_db;
}

/// LoS/NLoS weighted loss, averaged in the dB domain.
inline double mean_path_loss(double r_m, double elevation_rad, const ChannelParams& p, double g_bd_dbi,
                             double g_tr_dbi) {
  const double p_los = los_probability(elevation_rad, p.env_rho, p.env_beta);
  const double los = path_loss(r_m, p.wavelength_m(), g_tr_dbi, g_bd_dbi, p.eta_los_db);
  const double nlos = path_loss(r_m, p.wavelength_m(), g_tr_dbi, g_bd_dbi, p.eta_nlos_db);
  return p_los * los + (1.0 - p_los) * nlos;
}

inline double mean_path_loss(double r_m, double elevation_rad, const ChannelParams& p, double g_bd_dbi) {
  return mean_path_loss(r_m, elevation_rad, p, g_bd_dbi, p.reader_gain_dbi);
}

struct ReceivedPowers {
  double at_bd_dbm;
  double at_reader_dbm;
};

/// Carrier at the BD and the backscattered return at the reader; the
/// monostatic round trip applies the mean loss twice.
inline ReceivedPowers received_powers(const ChannelParams& p, double xi, double mean_loss_db) noexcept {
  const double at_bd = watts_to_dbm(p.carrier_power_w) - mean_loss_db;
  return {at_bd, at_bd + linear_to_db(xi) - mean_loss_db};
}

/// Shannon rate of the backscatter link [bit/s].
inline double data_rate(const ChannelParams& p, double xi, double mean_loss_db) noexcept {
  const double carrier_mw = p.carrier_power_w * 1e3;
  const double loss = db_to_linear(mean_loss_db);
  const double snr = carrier_mw * xi / (loss * loss * dbm_to_milliwatts(p.noise_dbm));
  return p.bandwidth_hz * std::log1p(snr) / std::numbers::ln2;
}

inline double collection_time(double volume_bits, double rate_bps) {
  if (volume_bits < 0.0) throw ParameterError("collection_time: negative data volume");
  if (!(rate_bps > 0.0)) throw InfeasibleLinkError("collection_time: link rate is zero");
  return volume_bits / rate_bps;
}

struct LinkBudget {
  std::size_t bd_id = 0;
  double elevation_rad = 0.0;
  double slant_range_m = 0.0;
  double p_los = 0.0;
  double mean_loss_db = 0.0;
  double rx_bd_dbm = 0.0;
  double rx_reader_dbm = 0.0;
  double rate_bps = 0.0;
};

/// Budget for a BD with the reader antenna (gain g_tr_dbi) aimed straight at it.
inline LinkBudget link_budget(Vec2 uav, double h, const BdSpec& bd, const ChannelParams& p, double xi,
                              double g_tr_dbi) {
  LinkBudget b;
  b.bd_id = bd.id;
  b.elevation_rad = aim_angles(uav, h, bd.position).theta;
  b.slant_range_m = slant_range(uav, h, bd.position);
  b.p_los = los_probability(b.elevation_rad, p.env_rho, p.env_beta);
  b.mean_loss_db = mean_path_loss(b.slant_range_m, b.elevation_rad, p, bd.gain_dbi, g_tr_dbi);
  const ReceivedPowers rx = received_powers(p, xi, b.mean_loss_db);
  b.rx_bd_dbm = rx.at_bd_dbm;
  b.rx_reader_dbm = rx.at_reader_dbm;
  b.rate_bps = data_rate(p, xi, b.mean_loss_db);
  return b;
}

/// Both sensitivity constraints, inclusive.
inline bool qualifies(const LinkBudget& b, const ChannelParams& p) noexcept {
  return b.rx_reader_dbm >= p.reader_sens_dbm && b.rx_bd_dbm >= p.bd_sens_dbm;
}

}  // namespace uavbc

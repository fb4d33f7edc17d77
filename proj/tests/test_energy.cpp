#include <gtest/gtest.h>

#include <cmath>

#include "uavbc/energy.hpp"
#include "uavbc/rng.hpp"

using namespace uavbc;

namespace {

// Term-by-term oracle with the table values typed in directly.
struct Terms {
  double blade, induced, parasite;
};

Terms oracle_terms(double v) {
  const double delta = 0.012, rho = 1.225, s = 0.1248, a = 0.1256, omega = 400.0, r = 0.2, iota = 0.05, w = 7.84,
               d0 = 0.5009, utip = 80.0, v0 = 5.0463;
  const double p0 = delta / 8.0 * rho * s * a * std::pow(omega * r, 3) / s;  // sigma cancels in this form
  const double p1 = (1.0 + iota) * std::pow(w, 1.5) / std::sqrt(2.0 * rho * a);
  Terms t;
  t.blade = p0 * (1.0 + 3.0 * v * v / (utip * utip));
  t.induced = p1 * std::sqrt(std::sqrt(1.0 + std::pow(v, 4) / (4.0 * std::pow(v0, 4))) - v * v / (2.0 * v0 * v0));
  t.parasite = 0.5 * d0 * rho * s * a * v * v * v;
  return t;
}

}  // namespace

TEST(Propulsion, RotorConstants) {
  const RotorConstants c = rotor_constants(PropulsionParams{});
  EXPECT_NEAR(c.blade_profile_w, 0.012 / 8.0 * 1.225 * 0.1256 * std::pow(80.0, 3), 1e-9);
  EXPECT_NEAR(c.blade_profile_w, 118.17, 0.01);
  EXPECT_NEAR(c.induced_w, 41.55, 0.01);
}

TEST(Propulsion, HoverPowerGolden) {
  const Terms t = oracle_terms(0.0);
  EXPECT_NEAR(hover_power(PropulsionParams{}), t.blade + t.induced, 1e-9);
  EXPECT_NEAR(hover_power(PropulsionParams{}), 159.71, 0.5);
}

TEST(Propulsion, CruisePowerTermByTerm) {
  const Terms t = oracle_terms(10.0);
  EXPECT_NEAR(t.blade, 123.71, 0.01);
  EXPECT_NEAR(t.induced, 20.35, 0.01);
  EXPECT_NEAR(t.parasite, 4.81, 0.01);
  EXPECT_NEAR(propulsion_power(PropulsionParams{}, 10.0), t.blade + t.induced + t.parasite, 1e-9);
  EXPECT_NEAR(propulsion_power(PropulsionParams{}, 10.0), 148.87, 0.5);
  EXPECT_LT(propulsion_power(PropulsionParams{}, 10.0), hover_power(PropulsionParams{}));
}

TEST(Propulsion, MatchesOracleOnGrid) {
  for (int i = 0; i <= 400; ++i) {
    const double v = 0.1 * i;
    const Terms t = oracle_terms(v);
    ASSERT_NEAR(propulsion_power(PropulsionParams{}, v), t.blade + t.induced + t.parasite, 1e-9) << v;
  }
}

TEST(Propulsion, PositiveAndEventuallyIncreasing) {
  const PropulsionParams p;
  for (int i = 0; i <= 600; ++i) ASSERT_GT(propulsion_power(p, 0.1 * i), 0.0);
  EXPECT_GT(propulsion_power(p, 40.0), propulsion_power(p, 30.0));
  EXPECT_THROW(propulsion_power(p, -1.0), ParameterError);
}

TEST(MovableAntenna, GoldenMove) {
  // 90 degree elevation change with no azimuth change at pi rad/s.
  const MaMove m = ma_move({0.0, 0.0}, {kPi / 2, 0.0}, MaParams{});
  EXPECT_NEAR(m.time_s, 0.5, 1e-12);
  EXPECT_NEAR(m.power_w, 2.0 + 0.05 * kPi / 2, 1e-12);
  EXPECT_NEAR(m.energy_j, 0.5 * (2.0 + 0.05 * kPi / 2), 1e-12);
  EXPECT_NEAR(m.power_w, 2.0785, 1e-4);
}

TEST(MovableAntenna, AzimuthTakesShortWay) {
  const MaMove m = ma_move({0.3, 0.1}, {0.3, kTwoPi - 0.1}, MaParams{});
  EXPECT_NEAR(m.dphi, 0.2, 1e-12);
  EXPECT_NEAR(m.time_s, 0.2 / kPi, 1e-12);
  EXPECT_EQ(m.dtheta, 0.0);
}

TEST(MovableAntenna, ZeroMoveCostsNothing) {
  const MaMove m = ma_move({0.4, 1.0}, {0.4, 1.0}, MaParams{});
  EXPECT_EQ(m.time_s, 0.0);
  EXPECT_EQ(m.energy_j, 0.0);
}

TEST(MovableAntenna, TimeIsSlowerAxis) {
  CounterRng r(5);
  MaParams ma;
  ma.v_theta_radps = 1.0;
  ma.v_phi_radps = 2.0;
  for (int i = 0; i < 1000; ++i) {
    const Orientation a{r.uniform(0, kPi / 2), r.uniform(0, kTwoPi)}, b{r.uniform(0, kPi / 2), r.uniform(0, kTwoPi)};
    const MaMove m = ma_move(a, b, ma);
    ASSERT_LE(m.dphi, kPi + 1e-12);
    ASSERT_NEAR(m.time_s, std::max(m.dtheta / 1.0, m.dphi / 2.0), 1e-12);
    ASSERT_NEAR(m.energy_j, m.time_s * (2.0 + 0.05 * m.dtheta + 0.03 * m.dphi), 1e-12);
  }
}

TEST(Ledger, AccumulatesByComponent) {
  EnergyLedger l(2000.0);
  EXPECT_TRUE(l.charge(EnergyComponent::flight, 148.87, 10.0));
  EXPECT_NEAR(l.flight_j(), 1488.7, 1e-9);
  EXPECT_TRUE(l.charge(EnergyComponent::ma, 2.0785, 0.5));
  EXPECT_TRUE(l.charge(EnergyComponent::comm, 1.0, 0.1));
  EXPECT_TRUE(l.charge(EnergyComponent::hover, 159.71, 0.6));
  EXPECT_NEAR(l.total_j(), 1488.7 + 1.03925 + 0.1 + 95.826, 1e-9);
  EXPECT_FALSE(l.charge(EnergyComponent::flight, 148.87, 10.0));
  EXPECT_FALSE(l.feasible());
}

TEST(Ledger, CapacityBoundaryIsFeasible) {
  EnergyLedger l(100.0);
  EXPECT_TRUE(l.charge(EnergyComponent::hover, 10.0, 10.0));
  EXPECT_TRUE(l.feasible());
  EXPECT_THROW(l.charge(EnergyComponent::hover, -1.0, 1.0), ParameterError);
  EXPECT_THROW(EnergyLedger(0.0), ParameterError);
}

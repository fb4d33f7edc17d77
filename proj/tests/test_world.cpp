#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "uavbc/rng.hpp"
#include "uavbc/world.hpp"

using namespace uavbc;

TEST(Rng, SameSeedSameStream) {
  CounterRng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformStaysInRange) {
  CounterRng r(7);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 20000.0, 0.5, 0.01);
}

TEST(Rng, NormalMoments) {
  CounterRng r(9);
  double s = 0.0, s2 = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(s2 / n, 1.0, 0.03);
}

TEST(Rng, ForksAreIndependentOfParentUse) {
  CounterRng a(5), b(5);
  (void)a.next_u64();
  EXPECT_EQ(a.fork(3).next_u64(), b.fork(3).next_u64());
  EXPECT_NE(b.fork(3).next_u64(), b.fork(4).next_u64());
}

TEST(Rng, BelowCoversRange) {
  CounterRng r(11);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = r.below(8);
    ASSERT_LT(v, 8u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 8u);
}

TEST(Geometry, WrapTwoPi) {
  EXPECT_DOUBLE_EQ(wrap_two_pi(0.0), 0.0);
  EXPECT_NEAR(wrap_two_pi(-kPi / 2), 1.5 * kPi, 1e-15);
  EXPECT_NEAR(wrap_two_pi(5 * kPi), kPi, 1e-12);
  CounterRng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double w = wrap_two_pi(r.uniform(-100.0, 100.0));
    ASSERT_GE(w, 0.0);
    ASSERT_LT(w, kTwoPi);
  }
}

TEST(Geometry, AimAnglesMatchHandValues) {
  // BD 30 m east of the UAV at H = 30: 45 degree elevation, azimuth 0.
  Orientation o = aim_angles({0, 0}, 30.0, {30, 0});
  EXPECT_NEAR(o.theta, kPi / 4, 1e-12);
  EXPECT_NEAR(o.phi, 0.0, 1e-12);
  o = aim_angles({10, 10}, 30.0, {10, 0});
  EXPECT_NEAR(o.theta, std::atan(3.0), 1e-12);
  EXPECT_NEAR(o.phi, 1.5 * kPi, 1e-12);
}

TEST(Geometry, OverheadIsClamped) {
  const Orientation o = aim_angles({12, 7}, 30.0, {12, 7});
  EXPECT_EQ(o.theta, kPi / 2);
  EXPECT_EQ(o.phi, 0.0);
  EXPECT_TRUE(std::isfinite(o.theta));
}

TEST(Geometry, SlantRangeIsPythagorean) {
  EXPECT_NEAR(slant_range({0, 0}, 30.0, {40, 0}), 50.0, 1e-12);
  EXPECT_NEAR(slant_range({3, 4}, 12.0, {3, 4}), 12.0, 1e-12);
}

TEST(Geometry, AimAnglesStayInDomain) {
  CounterRng r(3);
  for (int i = 0; i < 5000; ++i) {
    const Vec2 u{r.uniform(0, 200), r.uniform(0, 200)};
    const Vec2 b{r.uniform(0, 200), r.uniform(0, 200)};
    const Orientation o = aim_angles(u, 30.0, b);
    ASSERT_GE(o.theta, 0.0);
    ASSERT_LE(o.theta, kPi / 2);
    ASSERT_GE(o.phi, 0.0);
    ASSERT_LT(o.phi, kTwoPi);
  }
}

TEST(Scenario, GenerationIsDeterministicInSeed) {
  const Scenario a = generate_scenario(17, 20, 200.0, 30.0, {0.1e6, 0.5e6});
  const Scenario b = generate_scenario(17, 20, 200.0, 30.0, {0.1e6, 0.5e6});
  const Scenario c = generate_scenario(18, 20, 200.0, 30.0, {0.1e6, 0.5e6});
  EXPECT_EQ(a, b);
  EXPECT_NE(a.bds, c.bds);
}

TEST(Scenario, BdsInsideAreaWithVolumesInRange) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scenario s = generate_scenario(seed, 20, 200.0, 30.0, {0.1e6, 0.5e6});
    ASSERT_EQ(s.num_bds(), 20u);
    for (std::size_t k = 0; k < s.num_bds(); ++k) {
      const BdSpec& bd = s.bds[k];
      EXPECT_EQ(bd.id, k);
      EXPECT_GE(bd.position.x, 0.0);
      EXPECT_LE(bd.position.x, 200.0);
      EXPECT_GE(bd.position.y, 0.0);
      EXPECT_LE(bd.position.y, 200.0);
      EXPECT_GE(bd.data_volume_bits, 0.1e6);
      EXPECT_LT(bd.data_volume_bits, 0.5e6);
    }
  }
}

TEST(Scenario, RejectsBadParameters) {
  EXPECT_THROW(generate_scenario(1, 0, 200.0, 30.0, {0.1e6, 0.5e6}), ParameterError);
  EXPECT_THROW(generate_scenario(1, 5, -1.0, 30.0, {0.1e6, 0.5e6}), ParameterError);
  EXPECT_THROW(generate_scenario(1, 5, 200.0, 0.0, {0.1e6, 0.5e6}), ParameterError);
  EXPECT_THROW(generate_scenario(1, 5, 200.0, 30.0, {0.5e6, 0.1e6}), ParameterError);
  Scenario s = generate_scenario(1, 3, 50.0, 30.0, {0.1e6, 0.5e6});
  s.bds[1].position.x = 60.0;
  EXPECT_THROW(validate(s), ParameterError);
}

TEST(Scenario, JsonRoundTripIsExact) {
  const Scenario s = generate_scenario(99, 7, 123.0, 25.0, {0.1e6, 0.5e6});
  const Scenario t = scenario_from_json(nlohmann::json::parse(to_json(s).dump()));
  EXPECT_EQ(s, t);
}

TEST(Scenario, ObservationOrderedById) {
  const Scenario s = generate_scenario(4, 5, 100.0, 30.0, {0.1e6, 0.5e6});
  const BdObservation o = observe_bds({10, 20}, s.bds);
  ASSERT_EQ(o.distance_m.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_DOUBLE_EQ(o.distance_m[k], distance({10, 20}, s.bds[k].position));
    EXPECT_DOUBLE_EQ(o.azimuth_rad[k], azimuth({10, 20}, s.bds[k].position));
  }
}

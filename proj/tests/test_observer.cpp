/*
 Copyright 2026 The sgrl Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "sgrl/observer.hpp"
#include "sgrl/scenarios.hpp"
#include "sgrl/simkit.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sgrl;

namespace {

Mat pendulum_gain() {
  Mat C(1, 2);
  C << 0.0, 20.0;
  return C;
}

} // namespace

TEST(Observer, EstimateIsZPlusOmega) {
  ObserverState obs;
  obs.gain = Mat::Identity(1, 1);
  obs.z = Vec::Constant(1, -3.0);
  EXPECT_DOUBLE_EQ(observer_estimate(obs, Vec::Constant(1, 2.0))(0), -1.0);
}

TEST(Observer, ColdStartEstimateIsZero) {
  const Vec x0 = Eigen::Vector2d(0.5, 10.0);
  const auto obs = ObserverState::cold_start(pendulum_gain(), x0);
  EXPECT_EQ(observer_estimate(obs, x0), Vec::Zero(1));
  EXPECT_THROW(ObserverState::cold_start(pendulum_gain(), Vec::Zero(3)), ConstructionError);
}

TEST(Observer, StationaryAtOriginWithoutInput) {
  const auto sys = make_pendulum(2.0, 1.0, 10.0);
  const auto obs = ObserverState::cold_start(pendulum_gain(), Vec::Zero(2));
  const auto rate = observer_derivative(obs, Vec::Zero(2), Vec::Zero(1), sys);
  EXPECT_EQ(rate.zdot, Vec::Zero(1));
  EXPECT_TRUE(rate.lg_positive_definite);
}

TEST(Observer, PendulumGainProductAndDecayRate) {
  const auto sys = make_pendulum(2.0, 1.0, 10.0);
  const auto obs = ObserverState::cold_start(pendulum_gain(), Vec::Zero(2));
  const Vec x = Eigen::Vector2d(0.3, -1.0);
  const Mat Lg = obs.L(x) * sys.input_map(x);
  EXPECT_DOUBLE_EQ(Lg(0, 0), 10.0);
  EXPECT_DOUBLE_EQ(observer_decay_rate(obs, sys, x), 10.0);
  EXPECT_NEAR(std::log(2.0) / observer_decay_rate(obs, sys, x), 0.0693, 5e-5);
}

TEST(Observer, DetectsIndefiniteGainProduct) {
  Mat Lg(2, 2);
  Lg << 1.0, 0.0, 0.0, -1.0;
  EXPECT_FALSE(observer_gain_positive_definite(Lg));
  Lg << 1.0, 5.0, -5.0, 1.0; // skew part does not matter
  EXPECT_TRUE(observer_gain_positive_definite(Lg));
}

TEST(Observer, EstimateErrorRateMatchesLinearLaw) {
  // d/dt (z + C x) = L g (u_f - uhat) for any input and state.
  const auto sys = make_pendulum(2.0, 1.0, 10.0);
  ObserverState obs = ObserverState::cold_start(pendulum_gain(), Eigen::Vector2d(0.1, 0.2));
  obs.z(0) = 1.3;
  const Vec x = Eigen::Vector2d(-0.4, 1.1), u = Vec::Constant(1, 0.7), uf = Vec::Constant(1, -2.0);
  const Vec xdot = sys.rhs(x, u + uf);
  const Vec dhat = observer_derivative(obs, x, u, sys).zdot + obs.gain * xdot;
  const Vec expected = obs.gain * sys.input_map(x) * (uf - observer_estimate(obs, x));
  EXPECT_NEAR(dhat(0), expected(0), 1e-12);
}

TEST(Observer, ClosedLoopErrorDecaysExponentially) {
  ScenarioConfig cfg = find_scenario("pendulum-horcbf")->build();
  cfg.fault = FaultSignal::constant(Vec::Constant(1, 5.0));
  cfg.horizon = 0.5;
  const Trajectory traj = run_scenario(cfg);
  ASSERT_FALSE(traj.failure.has_value());
  const auto ct = traj.column("t"), cf = traj.column("uf1"), ch = traj.column("ufhat1");
  ASSERT_GT(traj.rows(), 100u);
  for (std::size_t r = 0; r < traj.rows(); ++r) {
    const double t = traj.at(r, ct);
    const double expected = -5.0 * std::exp(-10.0 * t);
    const double err = traj.at(r, ch) - traj.at(r, cf);
    EXPECT_NEAR(err, expected, 0.05 * std::abs(expected) + 1e-9) << "t = " << t;
  }
}

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

#include "oracles.hpp"
#include "sgrl/dynamics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace sgrl;

TEST(Pendulum, DriftAtRestingVelocity) {
  const auto sys = make_pendulum(2.0, 1.0, 10.0);
  const Vec f = sys.drift(Eigen::Vector2d(0.0, 5.0));
  EXPECT_DOUBLE_EQ(f(0), 5.0);
  EXPECT_DOUBLE_EQ(f(1), 0.0);
}

TEST(Pendulum, InputMapIsConstant) {
  const auto sys = make_pendulum(2.0, 1.0, 10.0);
  for (double th : {-1.0, 0.0, 0.7}) {
    const Mat g = sys.input_map(Eigen::Vector2d(th, 3.0));
    ASSERT_EQ(g.rows(), 2);
    ASSERT_EQ(g.cols(), 1);
    EXPECT_DOUBLE_EQ(g(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(g(1, 0), 0.5);
  }
}

TEST(Pendulum, DriftAtQuarterTurn) {
  const auto sys = make_pendulum(2.0, 1.0, 10.0);
  const Vec f = sys.drift(Eigen::Vector2d(std::numbers::pi / 2, 0.0));
  EXPECT_NEAR(f(0), 0.0, 1e-15);
  EXPECT_NEAR(f(1), 10.0, 1e-12);
}

TEST(Pendulum, RejectsNonPositiveParameters) {
  EXPECT_THROW(make_pendulum(0.0, 1.0, 10.0), ConstructionError);
  EXPECT_THROW(make_pendulum(2.0, -1.0, 10.0), ConstructionError);
}

TEST(DoubleIntegrator, DriftCarriesVelocity) {
  const auto sys = make_double_integrator(1);
  const Vec f = sys.drift(Eigen::Vector2d(3.0, -2.0));
  EXPECT_DOUBLE_EQ(f(0), -2.0);
  EXPECT_DOUBLE_EQ(f(1), 0.0);
}

TEST(DoubleIntegrator, PlanarInputMap) {
  const auto sys = make_double_integrator(2);
  const Mat g = sys.input_map(Vec::Zero(4));
  Mat expected = Mat::Zero(4, 2);
  expected.bottomRows(2).setIdentity();
  EXPECT_EQ(g, expected);
}

TEST(DoubleIntegrator, FullPlant) {
  const auto sys = make_double_integrator(1);
  const Vec xdot = sys.rhs(Eigen::Vector2d(1.0, 4.0), Vec::Constant(1, -3.0));
  EXPECT_DOUBLE_EQ(xdot(0), 4.0);
  EXPECT_DOUBLE_EQ(xdot(1), -3.0);
}

TEST(SystemModel, RejectsDriftThatDoesNotVanish) {
  auto f = [](const Vec &x) -> Vec { return x.array() + 1.0; };
  auto g = [](const Vec &) -> Mat { return Mat::Identity(2, 1); };
  EXPECT_THROW(make_system("bad", 2, 1, f, g), ConstructionError);
}

TEST(SystemModel, RejectsWrongInputShape) {
  auto f = [](const Vec &x) -> Vec { return x; };
  auto g = [](const Vec &) -> Mat { return Mat::Identity(3, 1); };
  EXPECT_THROW(make_system("bad", 2, 1, f, g), ConstructionError);
}

TEST(SystemModel, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  for (const auto &sys : {make_pendulum(2.0, 1.0, 10.0), make_double_integrator(2)}) {
    for (int k = 0; k < 100; ++k) {
      Vec x(sys.state_dim());
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = d(rng);
      const Mat fd = oracle::jacobian([&](const Vec &y) { return sys.drift(y); }, x);
      EXPECT_LT(oracle::relative_error(sys.drift_jacobian(x), fd), 1e-5) << sys.name();
    }
  }
}

TEST(SystemModel, NumericJacobianWithoutAnalyticOne) {
  auto f = [](const Vec &x) -> Vec { return Eigen::Vector2d(x(1), -std::sin(x(0)) * x(1)); };
  auto g = [](const Vec &) -> Mat { return Eigen::Vector2d(0.0, 1.0); };
  const auto sys = make_system("damped", 2, 1, f, g);
  EXPECT_FALSE(sys.has_analytic_jacobian());
  const Vec x = Eigen::Vector2d(0.3, -1.2);
  EXPECT_LT(oracle::relative_error(sys.drift_jacobian(x), oracle::jacobian(f, x)), 1e-5);
}

TEST(Fault, ZeroSignal) {
  const auto s = FaultSignal::zero(2);
  for (double t : {0.0, 1.0, 37.5}) {
    const auto v = eval_fault(s, t);
    EXPECT_EQ(v.value, Vec::Zero(2));
    EXPECT_EQ(v.derivative, Vec::Zero(2));
  }
  EXPECT_EQ(s.eta1(), 0.0);
}

TEST(Fault, SinusoidAtTimeZero) {
  // Offset plus the cosine amplitudes of both harmonics.
  const auto v = eval_fault(FaultSignal::paper_sinusoid(), 0.0);
  EXPECT_NEAR(v.value(0), -5.0 + 0.03 + 0.04, 1e-15);
}

TEST(Fault, SinusoidDerivativeMatchesFiniteDifference) {
  const auto s = FaultSignal::paper_sinusoid();
  for (double t : {0.1, 1.3, 4.0, 9.9}) {
    const double h = 1e-5;
    const double fd = (eval_fault(s, t + h).value(0) - eval_fault(s, t - h).value(0)) / (2 * h);
    EXPECT_NEAR(eval_fault(s, t).derivative(0), fd, 1e-8);
  }
}

TEST(Fault, BoundsHoldOnDenseGrid) {
  const auto s = FaultSignal::paper_sinusoid();
  for (int k = 0; k <= 20000; ++k) {
    const auto v = eval_fault(s, 1e-3 * k);
    EXPECT_LE(std::abs(v.value(0)), s.eta1() + 1e-12);
    EXPECT_LE(std::abs(v.derivative(0)), s.eta2() + 1e-12);
  }
}

TEST(Fault, ConstantHasZeroDerivative) {
  const auto s = FaultSignal::constant(Eigen::Vector2d(1.5, -2.0));
  for (double t : {0.0, 2.0, 100.0}) {
    const auto v = eval_fault(s, t);
    EXPECT_EQ(v.value, Eigen::Vector2d(1.5, -2.0));
    EXPECT_EQ(v.derivative, Vec::Zero(2));
  }
  EXPECT_EQ(s.eta2(), 0.0);
}

TEST(Fault, TableInterpolatesLinearly) {
  FaultTable t;
  t.times = {0.0, 1.0, 3.0};
  t.values = {Vec::Constant(1, 0.0), Vec::Constant(1, 2.0), Vec::Constant(1, -2.0)};
  const auto s = FaultSignal::from_table(t);
  EXPECT_DOUBLE_EQ(eval_fault(s, 0.5).value(0), 1.0);
  EXPECT_DOUBLE_EQ(eval_fault(s, 2.0).value(0), 0.0);
  EXPECT_DOUBLE_EQ(eval_fault(s, 2.0).derivative(0), -2.0);
  EXPECT_DOUBLE_EQ(s.eta2(), 2.0);
  EXPECT_THROW(eval_fault(s, 3.5), Error);
}

TEST(Fault, RejectsBadTablesAndNegativeTime) {
  FaultTable t;
  t.times = {0.0, 0.0};
  t.values = {Vec::Zero(1), Vec::Zero(1)};
  EXPECT_THROW(FaultSignal::from_table(t), ConstructionError);
  EXPECT_THROW(eval_fault(FaultSignal::zero(1), -1.0), Error);
}

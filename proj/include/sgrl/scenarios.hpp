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

#ifndef SGRL_SCENARIOS_HPP
#define SGRL_SCENARIOS_HPP

#include "sgrl/simkit.hpp"

#include <functional>
#include <string>
#include <vector>

namespace sgrl {

struct ScenarioRegistryEntry {
  std::string name;
  std::string description;
  std::string provenance;
  std::function<ScenarioConfig()> build;
};

namespace scenarios {

inline ConstraintDecl halfspace(std::string label, Vec a, double b, int m,
                                std::vector<double> alphas, double gain) {
  ConstraintDecl d;
  d.label = std::move(label);
  d.kind = ConstraintKind::halfspace;
  d.normal = std::move(a);
  d.offset = b;
  d.relative_degree = m;
  d.alphas = std::move(alphas);
  d.gain = gain;
  return d;
}

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline LearnerGains reference_gains() { return {0.1, 1.0, 100.0, 1.0, 0.1}; }

/// Inverted pendulum with theta <= 0.8 (relative degree 2) and theta' >= -2.
inline ScenarioConfig pendulum(ControllerMode mode) {
  ScenarioConfig c;
  c.system.kind = "pendulum";
  c.system.mass = 2.0;
  c.system.length = 1.0;
  c.system.gravity = 10.0;
  c.constraints.push_back(halfspace("theta", vec({-1.0, 0.0}), 0.8, 2, {100.0}, 1.0));
  c.constraints.push_back(halfspace("omega", vec({0.0, 1.0}), 2.0, 1, {}, 1.0));
  c.mode = mode;
  c.observer.enabled = mode == ControllerMode::fixed_safeguard ||
                       mode == ControllerMode::adaptive_safeguard;
  c.observer.gain = Mat(1, 2);
  c.observer.gain << 0.0, 20.0;
  c.learner.gains = reference_gains();
  c.learner.initial_weights = vec({40.0, 120.0, 30.0});
  c.learner.gamma0 = 1000.0;
  c.learner.box_lo = vec({-1.0, -3.0});
  c.learner.box_hi = vec({1.0, 3.0});
  c.learner.grid = {5, 5};
  c.x0 = vec({0.5, 10.0});
  c.horizon = 10.0;
  c.dt = 1e-5;
  c.control_frequency = 1e5;
  c.record_stride = 100;
  return c;
}

/// Basis order p1^2, p2^2, v1^2, v2^2, p1p2, p1v1, p1v2, p2v1, p2v2, v1v2.
inline std::vector<std::pair<int, int>> robot_monomials() {
  return {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
}

/// Planar double integrator in a disc of radius 4 with obstacles and
/// per-axis speed limits of 0.8.
inline ScenarioConfig robot(ControllerMode mode, const Vec &x0) {
  ScenarioConfig c;
  c.system.kind = "double-integrator";
  c.system.axes = 2;
  ConstraintDecl area;
  area.label = "area";
  area.kind = ConstraintKind::ball_inclusion;
  area.coords = {0, 1};
  area.center = Vec::Zero(2);
  area.radius = 4.0;
  area.relative_degree = 2;
  area.alphas = {1.0};
  area.gain = 10.0;
  c.constraints.push_back(area);
  const double vmax = 0.8;
  const double kv = 0.01;
  c.constraints.push_back(halfspace("vx_max", vec({0, 0, -1, 0}), vmax, 1, {}, kv));
  c.constraints.push_back(halfspace("vx_min", vec({0, 0, 1, 0}), vmax, 1, {}, kv));
  c.constraints.push_back(halfspace("vy_max", vec({0, 0, 0, -1}), vmax, 1, {}, kv));
  c.constraints.push_back(halfspace("vy_min", vec({0, 0, 0, 1}), vmax, 1, {}, kv));
  c.obstacles.count = 3;
  c.obstacles.radius = 0.5;
  c.obstacles.lo = vec({-3.0, -3.0});
  c.obstacles.hi = vec({3.0, 3.0});
  c.obstacles.clearance = 0.3;
  c.obstacles.gain = 10.0;
  c.mode = mode;
  c.learner.gains = reference_gains();
  c.learner.monomials = robot_monomials();
  c.learner.initial_weights = vec({40.0, 120.0, 30.0});
  c.learner.gamma0 = 1000.0;
  c.learner.box_lo = vec({-1.0, -1.0, -1.0, -1.0});
  c.learner.box_hi = vec({1.0, 1.0, 1.0, 1.0});
  c.learner.grid = {5, 5, 5, 5};
  c.x0 = x0;
  c.horizon = 20.0;
  c.dt = 1e-3;
  c.control_frequency = 1000.0;
  c.record_stride = 10;
  return c;
}

inline ScenarioConfig robot_case1(ControllerMode mode, bool position_enforced) {
  ScenarioConfig c = robot(mode, vec({-0.4, -3.8, 0.0, 0.0}));
  if (!position_enforced) {
    for (auto &d : c.constraints) d.enforced = d.relative_degree == 1;
    c.obstacles.enforced = false;
  }
  return c;
}

inline ScenarioConfig robot_case2(double mu, bool adaptive) {
  ScenarioConfig c =
      robot(adaptive ? ControllerMode::adaptive_safeguard : ControllerMode::fixed_safeguard,
            vec({-3.0, -2.0, 0.0, 0.0}));
  c.safeguard.mu = mu;
  if (adaptive) {
    c.safeguard.decay = 500.0;
    c.safeguard.growth = 0.001;
    for (auto &d : c.constraints) d.adaptive = d.relative_degree == 2;
    c.obstacles.adaptive = true;
  }
  return c;
}

/// Velocity-limited double integrator tracking a ramp at 100 Hz.
inline ScenarioConfig example1() {
  ScenarioConfig c;
  c.system.kind = "double-integrator";
  c.system.axes = 1;
  c.constraints.push_back(halfspace("v_max", vec({0.0, -1.0}), 15.0, 1, {}, 0.1));
  c.mode = ControllerMode::handcrafted;
  c.tracking.kp = 100.0;
  c.tracking.kd = 1.0;
  c.tracking.target = vec({0.0});
  c.tracking.rate = vec({11.0});
  c.x0 = vec({0.0, 0.0});
  c.horizon = 5.0;
  c.dt = 1e-3;
  c.control_frequency = 100.0;
  return c;
}

/// One-axis double integrator with an exact quadratic value function.
inline ScenarioConfig lqr_double_integrator() {
  ScenarioConfig c;
  c.system.kind = "double-integrator";
  c.system.axes = 1;
  c.mode = ControllerMode::classical_rl;
  c.learner.gains = reference_gains();
  c.learner.initial_weights = vec({4.0, 4.0, 4.0});
  c.learner.gamma0 = 100.0;
  c.learner.box_lo = vec({-1.0, -1.0});
  c.learner.box_hi = vec({1.0, 1.0});
  c.learner.grid = {5, 5};
  c.x0 = vec({1.0, 0.0});
  c.horizon = 20.0;
  c.dt = 1e-3;
  c.control_frequency = 1000.0;
  c.record_stride = 10;
  return c;
}

} // namespace scenarios

inline const std::vector<ScenarioRegistryEntry> &scenario_registry() {
  using namespace scenarios;
  using M = ControllerMode;
  static const std::vector<ScenarioRegistryEntry> registry = [] {
    std::vector<ScenarioRegistryEntry> r;
    auto named = [](ScenarioConfig c, const std::string &name) {
      c.name = name;
      return c;
    };
    r.push_back({"example1-ks", "velocity-limited ramp tracking under a 100 Hz ZOH; sweep Ks",
                 "control-frequency example", [=] { return named(example1(), "example1-ks"); }});
    r.push_back({"pendulum-classical", "actor-critic without safety terms",
                 "pendulum study, classical baseline",
                 [=] { return named(pendulum(M::classical_rl), "pendulum-classical"); }});
    r.push_back({"pendulum-penalty", "actor-critic with a barrier penalty in the stage cost",
                 "pendulum study, penalty baseline", [=] {
                   ScenarioConfig c = pendulum(M::classical_rl);
                   c.learner.penalty_weight = 1.0;
                   return named(c, "pendulum-penalty");
                 }});
    r.push_back({"pendulum-qpfilter", "actor-critic behind a CBF-QP filter, no observer",
                 "pendulum study, QP baseline", [=] {
                   ScenarioConfig c = pendulum(M::qp_filter);
                   for (auto &d : c.constraints) d.gamma3 = 100.0;
                   return named(c, "pendulum-qpfilter");
                 }});
    r.push_back({"pendulum-horcbf", "safeguarded actor-critic with fault observer",
                 "pendulum study, proposed method",
                 [=] { return named(pendulum(M::fixed_safeguard), "pendulum-horcbf"); }});
    r.push_back({"pendulum-kkt", "closed-form KKT safe policy with the true fault",
                 "pendulum study, KKT reference", [=] {
                   ScenarioConfig c = pendulum(M::kkt_exact);
                   c.fault = FaultSignal::paper_sinusoid();
                   return named(c, "pendulum-kkt");
                 }});
    r.push_back({"robot-case1-classical", "actor-critic without safety terms",
                 "robot study case 1, classical baseline",
                 [=] { return named(robot_case1(M::classical_rl, true), "robot-case1-classical"); }});
    r.push_back({"robot-case1-rcbf", "safeguard on the relative-degree-one speed limits only",
                 "robot study case 1, RCBF baseline",
                 [=] { return named(robot_case1(M::fixed_safeguard, false), "robot-case1-rcbf"); }});
    r.push_back({"robot-case1-horcbf", "safeguard on every constraint",
                 "robot study case 1, proposed method",
                 [=] { return named(robot_case1(M::fixed_safeguard, true), "robot-case1-horcbf"); }});
    r.push_back({"robot-case2-fixed", "fixed safeguarding gains, no manipulation",
                 "robot study case 2", [=] { return named(robot_case2(0.0, false), "robot-case2-fixed"); }});
    r.push_back({"robot-case2-adaptive", "adaptive position gains with gradient manipulation",
                 "robot study case 2",
                 [=] { return named(robot_case2(0.5, true), "robot-case2-adaptive"); }});
    r.push_back({"robot-case2-adaptive-mu", "gradient manipulation with fixed gains",
                 "robot study case 2",
                 [=] { return named(robot_case2(0.5, false), "robot-case2-adaptive-mu"); }});
    r.push_back({"lqr-double-integrator", "actor-critic on a problem with a known Riccati solution",
                 "convergence check", [=] { return named(lqr_double_integrator(), "lqr-double-integrator"); }});
    return r;
  }();
  return registry;
}

inline const ScenarioRegistryEntry *find_scenario(std::string_view name) {
  for (const auto &e : scenario_registry())
    if (e.name == name) return &e;
  return nullptr;
}

} // namespace sgrl

#endif // SGRL_SCENARIOS_HPP

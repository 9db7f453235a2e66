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

// Acceptance driver: runs every end-to-end check and prints one PASS/FAIL
// line per criterion. Exits non-zero when any criterion fails.

#include "oracles.hpp"
#include "sgrl/sgrl.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace sgrl;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string &what) {
    if (!ok) {
      pass = false;
      detail << "  failed: " << what << '\n';
    }
  }
};

ScenarioConfig scenario(const std::string &name) {
  const auto *entry = find_scenario(name);
  if (!entry) throw Error("missing scenario " + name);
  return entry->build();
}

ScenarioConfig at_start(ScenarioConfig cfg, double px, double py) {
  cfg.x0(0) = px;
  cfg.x0(1) = py;
  return cfg;
}

struct Run {
  ScenarioConfig cfg;
  Trajectory traj;
  MetricReport report;

  const ConstraintStats &stats(const std::string &label) const {
    for (const auto &c : traj.constraints)
      if (c.label == label) return c;
    throw Error("no constraint " + label);
  }
  bool is_violated(const std::string &label) const { return stats(label).violated; }
  bool all_hold() const {
    for (const auto &c : traj.constraints)
      if (!(c.min_psi0 > 0.0)) return false;
    return !traj.failure.has_value();
  }
};

Run simulate(const ScenarioConfig &cfg) {
  Run r;
  r.cfg = resolve(cfg);
  r.traj = run_scenario(r.cfg);
  r.report = metrics(r.traj, r.cfg);
  return r;
}

bool velocity_held(const Run &r) {
  for (const auto &c : r.traj.constraints)
    if (c.label.rfind("v", 0) == 0 && !(c.min_psi0 > 0.0)) return false;
  return true;
}

bool position_violated(const Run &r) {
  for (const auto &c : r.traj.constraints)
    if ((c.label == "area" || c.label.rfind("obstacle", 0) == 0) && c.violated) return true;
  return false;
}

std::string violated_labels(const Run &r) {
  std::string s;
  for (const auto &c : r.traj.constraints)
    if (c.violated) s += (s.empty() ? "" : ",") + c.label;
  return s.empty() ? "none" : s;
}

// ---------------------------------------------------------------------------

Outcome ks_sweep() {
  Outcome o;
  for (double ks : {0.1, 50.0, 500.0}) {
    ScenarioConfig cfg = scenario("example1-ks");
    for (auto &c : cfg.constraints) c.gain = ks;
    const Run r = simulate(cfg);
    const auto &v = r.stats("v_max");
    o.detail << "  Ks=" << ks << ": max v = " << 15.0 - v.min_psi0
             << ", oscillations = " << r.report.oscillation_count
             << ", wall = " << r.traj.wall_seconds << " s\n";
    o.require(r.traj.wall_seconds < 5.0, "runtime under 5 s");
    if (ks == 0.1) o.require(v.violated, "Ks=0.1 exceeds v_max");
    if (ks == 500.0) o.require(v.min_psi0 > 0.0, "Ks=500 keeps v <= 15");
    if (ks == 50.0) {
      o.require(v.min_psi0 > 0.0, "Ks=50 keeps v <= 15");
      o.require(r.report.oscillation_count >= 5, "Ks=50 oscillates near the boundary");
    }
  }
  return o;
}

Outcome pendulum_nominal() {
  Outcome o;
  const Run classical = simulate(scenario("pendulum-classical"));
  const Run safe = simulate(scenario("pendulum-horcbf"));
  o.detail << "  classical violates: " << violated_labels(classical) << '\n'
           << "  horcbf min psi0: theta " << safe.stats("theta").min_psi0 << ", omega "
           << safe.stats("omega").min_psi0 << ", |x(T)| = " << safe.report.final_state_norm << '\n';
  o.require(classical.is_violated("theta"), "classical run crosses theta = 0.8");
  o.require(safe.all_hold(), "horcbf holds both constraints");
  o.require(safe.report.final_state_norm < 0.05, "horcbf reaches |x(T)| < 0.05");
  return o;
}

Outcome pendulum_fault() {
  Outcome o;
  ScenarioConfig hc = scenario("pendulum-horcbf");
  hc.fault = FaultSignal::paper_sinusoid();
  ScenarioConfig qc = scenario("pendulum-qpfilter");
  qc.fault = FaultSignal::paper_sinusoid();
  const Run safe = simulate(hc);
  const Run qp = simulate(qc);
  const double obs_err = safe.report.observer_terminal_error.value_or(
      std::numeric_limits<double>::infinity());
  o.detail << "  horcbf min psi0: theta " << safe.stats("theta").min_psi0 << ", omega "
           << safe.stats("omega").min_psi0 << ", observer error " << obs_err << '\n'
           << "  qp filter violates: " << violated_labels(qp) << '\n';
  o.require(safe.all_hold(), "horcbf with observer holds both constraints");
  o.require(obs_err < 0.05, "observer terminal error < 0.05");
  o.require(qp.is_violated("omega"), "QP filter without observer violates omega >= -2");
  return o;
}

Outcome robot_case1() {
  Outcome o;
  const std::vector<std::pair<double, double>> starts{{-0.4, -3.8}, {-1.25, 3.5}, {0.3, -3.7}};
  for (const auto &[px, py] : starts) {
    const Run cl = simulate(at_start(scenario("robot-case1-classical"), px, py));
    const Run rc = simulate(at_start(scenario("robot-case1-rcbf"), px, py));
    const Run ho = simulate(at_start(scenario("robot-case1-horcbf"), px, py));
    o.detail << "  x0=(" << px << ", " << py << "): classical violates " << violated_labels(cl)
             << "; rcbf violates " << violated_labels(rc) << "; horcbf violates "
             << violated_labels(ho) << '\n';
    o.require(position_violated(cl), "classical violates the area or an obstacle");
    o.require(velocity_held(rc), "rcbf holds the speed limits");
    o.require(position_violated(rc), "rcbf violates a position constraint");
    o.require(ho.all_hold(), "horcbf holds every constraint");
  }
  return o;
}

Outcome robot_case2() {
  Outcome o;
  const std::vector<std::pair<double, double>> starts{{-3, -2}, {2, 3}, {2.5, -3}, {-3, -1.5}};
  for (const auto &[px, py] : starts) {
    const Run fixed = simulate(at_start(scenario("robot-case2-fixed"), px, py));
    const Run adaptive = simulate(at_start(scenario("robot-case2-adaptive"), px, py));
    const double jf = fixed.report.cost, ja = adaptive.report.cost;
    o.detail << "  x0=(" << px << ", " << py << "): J_fixed " << jf << ", J_adaptive " << ja
             << ", margin " << 100.0 * (jf - ja) / jf << "%\n";
    o.require(!fixed.traj.failure && !adaptive.traj.failure, "both runs complete");
    o.require(ja <= 0.95 * jf, "J_adaptive at least 5% below J_fixed");
  }
  return o;
}

Outcome lqr() {
  Outcome o;
  Mat A(2, 2), B(2, 1);
  A << 0, 1, 0, 0;
  B << 0, 1;
  const Mat Q = Mat::Identity(2, 2), R = Mat::Identity(1, 1);
  const Mat P = oracle::care(A, B, Q, R);
  const double residual = oracle::care_residual(A, B, Q, R, P);
  const Vec target = Eigen::Vector3d(P(0, 0), 2.0 * P(0, 1), P(1, 1));
  const Run r = simulate(scenario("lqr-double-integrator"));
  o.detail << "  Riccati residual " << residual << ", target " << target.transpose()
           << ", critic " << r.traj.final_critic.transpose() << ", PE min eig " << r.traj.pe_final
           << '\n';
  o.require(residual < 1e-10, "Riccati residual < 1e-10");
  o.require(r.traj.final_critic.size() == 3, "critic has three weights");
  for (int k = 0; k < 3 && r.traj.final_critic.size() == 3; ++k)
    o.require(std::abs(r.traj.final_critic(k) - target(k)) <= 0.02 * std::abs(target(k)),
              "critic weight " + std::to_string(k + 1) + " within 2%");
  o.require(r.traj.pe_final > 0.0, "excitation condition holds");
  return o;
}

// Property checks, reduced versions of the unit suites.
Outcome properties() {
  Outcome o;
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> d(-1.0, 1.0);

  // Gradients and Jacobians against finite differences.
  double worst_grad = 0.0;
  {
    const auto pend = make_pendulum(2.0, 1.0, 10.0);
    const auto robot = make_double_integrator(2);
    const std::vector<PsiChain> chains{
        build_chain(halfspace_constraint("theta", Eigen::Vector2d(-1, 0), 0.8, 2,
                                         {ClassK::linear(100.0)}),
                    pend),
        build_chain(ball_exclusion_constraint("obs", {0, 1}, Eigen::Vector2d(1, 1), 0.5, 4, 2,
                                              {ClassK::linear(1.0)}),
                    robot),
        build_chain(ball_inclusion_constraint("area", {0, 1}, Eigen::Vector2d(0, 0), 4.0, 4, 2,
                                              {ClassK::linear(1.0)}),
                    robot)};
    for (int trial = 0; trial < 50; ++trial) {
      const Vec xp = Eigen::Vector2d(d(rng), 3 * d(rng));
      const Mat fd = oracle::jacobian([&](const Vec &y) { return pend.drift(y); }, xp);
      worst_grad = std::max(worst_grad, oracle::relative_error(pend.drift_jacobian(xp), fd));
      for (const auto &ch : chains) {
        const int n = ch.system().state_dim();
        Vec x(n);
        for (int i = 0; i < n; ++i) x(i) = 3 * d(rng);
        for (int l = 0; l < ch.relative_degree(); ++l) {
          const Vec g = ch.gradient(l, x);
          const Vec fdg = oracle::gradient([&](const Vec &y) { return ch.value(l, y); }, x);
          worst_grad = std::max(worst_grad, oracle::relative_error(g, fdg));
        }
      }
    }
  }
  o.detail << "  gradient FD relative error " << worst_grad << '\n';
  o.require(worst_grad < 1e-5, "gradients agree with finite differences");

  // Hamiltonian identity on the LQR problem.
  double worst_h = 0.0;
  {
    Mat A(2, 2), B(2, 1);
    A << 0, 1, 0, 0;
    B << 0, 1;
    const Mat P = oracle::care(A, B, Mat::Identity(2, 2), Mat::Identity(1, 1));
    const auto sys = make_double_integrator(1);
    const auto basis = QuadraticBasis::all_monomials(2);
    const CostWeights w = CostWeights::identity(2, 1);
    auto ls = LearnerState::make(Eigen::Vector3d(P(0, 0), 2 * P(0, 1), P(1, 1)), 1.0, {});
    for (int trial = 0; trial < 100; ++trial) {
      const Vec x = Eigen::Vector2d(2 * d(rng), 2 * d(rng));
      const Vec u = policy_eval(ls, basis, x, sys, w);
      const Vec gradV = 2.0 * P * x;
      const double scale = std::abs(gradV.dot(sys.rhs(x, u))) + w.stage_cost(x, u);
      worst_h = std::max(worst_h, std::abs(bellman_error(ls, basis, x, u, w, sys)) / scale);
    }
  }
  o.detail << "  Hamiltonian identity relative error " << worst_h << '\n';
  o.require(worst_h < 1e-8, "Hamiltonian vanishes at the Riccati weights");

  // Manipulation ordering and similarity monotonicity.
  int ordering_failures = 0;
  {
    const auto sys = make_double_integrator(2);
    const CostWeights w(Mat::Identity(4, 4), (Mat(2, 2) << 1.5, 0.2, 0.2, 0.7).finished());
    const BarrierFunction bf(build_chain(
        ball_exclusion_constraint("obs", {0, 1}, Eigen::Vector2d(0, 0), 0.5, 4, 2,
                                  {ClassK::linear(2.0)}),
        sys));
    int checked = 0;
    while (checked < 100) {
      const Vec x = (Vec(4) << 3 * d(rng), 3 * d(rng), d(rng), d(rng)).finished();
      if (!(bf.chain().value(0, x) > 0.0) || !(bf.chain().top(x).value > 0.0)) continue;
      ++checked;
      const Vec gradV = (Vec(4) << d(rng), d(rng), d(rng), d(rng)).finished();
      const double rho = gradient_similarity(x, gradV, bf, sys, w);
      double prev_h = hamiltonian_excess(x, gradV, bf, 1.0, w, 0.0), prev_s = std::abs(rho);
      for (double mu : {0.2, 0.5, 0.8, 0.95}) {
        const double h = hamiltonian_excess(x, gradV, bf, 1.0, w, mu);
        const double s = manipulated_similarity(rho, mu);
        if (h > prev_h * (1 + 1e-12) + 1e-15 || std::abs(s) > prev_s + 1e-12 || s * rho < 0)
          ++ordering_failures;
        prev_h = h;
        prev_s = std::abs(s);
      }
    }
  }
  o.detail << "  manipulation ordering failures " << ordering_failures << " / 100\n";
  o.require(ordering_failures == 0, "manipulation never raises the Hamiltonian or similarity");

  // Gamma positive definite and actor inside its ball on every scenario.
  {
    bool ok = true;
    for (const auto &entry : scenario_registry()) {
      ScenarioConfig cfg = entry.build();
      if (!cfg.uses_learner()) continue;
      cfg.horizon = cfg.dt < 1e-4 ? 0.05 : 0.3;
      const Trajectory t = run_scenario(cfg);
      const bool good = !t.failure && t.gamma_min_eig > 0.0 &&
                        t.actor_norm_max <= t.actor_bound * (1.0 + 1e-12);
      if (!good) o.detail << "  invariant broken in " << entry.name << '\n';
      ok = ok && good;
    }
    o.require(ok, "Gamma stays positive definite and the actor stays bounded");
  }

  // Observer decay for a constant fault.
  {
    ScenarioConfig cfg = scenario("pendulum-horcbf");
    cfg.fault = FaultSignal::constant(Vec::Constant(1, 5.0));
    cfg.horizon = 0.5;
    const Trajectory t = run_scenario(cfg);
    const auto ct = t.column("t"), cf = t.column("uf1"), ch = t.column("ufhat1");
    double worst = 0.0;
    for (std::size_t r = 0; r < t.rows(); ++r) {
      const double expected = -5.0 * std::exp(-10.0 * t.at(r, ct));
      worst = std::max(worst, std::abs(t.at(r, ch) - t.at(r, cf) - expected) / std::abs(expected));
    }
    o.detail << "  observer decay relative deviation " << worst << '\n';
    o.require(worst <= 0.05, "observer error follows the exponential closed form");
  }

  // RK4 step halving.
  {
    ScenarioConfig cfg = scenario("lqr-double-integrator");
    cfg.horizon = 2.0;
    cfg.control_frequency = 100.0;
    cfg.dt = 1e-3;
    const Trajectory a = run_scenario(cfg);
    cfg.dt = 5e-4;
    const Trajectory b = run_scenario(cfg);
    const double diff = (a.final_state - b.final_state).norm();
    o.detail << "  step-halving difference " << diff << '\n';
    o.require(diff < 1e-5, "halving dt changes the final state by < 1e-5");
  }

  // Deterministic reruns.
  {
    ScenarioConfig cfg = scenario("robot-case2-adaptive");
    cfg.horizon = 0.3;
    const Trajectory a = run_scenario(cfg);
    const Trajectory b = run_scenario(cfg);
    o.require(a.data == b.data && a.cost == b.cost, "reruns are bit-identical");
  }
  return o;
}

Outcome kkt() {
  Outcome o;
  const Run r = simulate(scenario("pendulum-kkt"));
  o.detail << "  complementarity " << r.report.kkt_complementarity << ", violations "
           << violated_labels(r) << '\n';
  o.require(r.report.kkt_complementarity <= 1e-8, "complementarity residual <= 1e-8");
  o.require(!r.report.violation && !r.traj.failure, "no safety violation");
  return o;
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Ks sweep regimes at 100 Hz", ks_sweep},
      {"pendulum without fault", pendulum_nominal},
      {"pendulum with sinusoidal fault", pendulum_fault},
      {"robot case 1 constraint coverage", robot_case1},
      {"robot case 2 adaptive cost", robot_case2},
      {"LQR convergence", lqr},
      {"property suites", properties},
      {"KKT baseline", kkt}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception &e) {
      o.pass = false;
      o.detail << "  exception: " << e.what() << '\n';
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << "criterion " << i + 1 << ": "
              << criteria[i].first << " (" << secs << " s)\n"
              << o.detail.str() << std::flush;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}

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

#ifndef SGRL_SIMKIT_HPP
#define SGRL_SIMKIT_HPP

#include "sgrl/barrier.hpp"
#include "sgrl/dynamics.hpp"
#include "sgrl/learner.hpp"
#include "sgrl/observer.hpp"
#include "sgrl/safeguard.hpp"
#include "sgrl/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sgrl {

// ---------------------------------------------------------------------------
// Integration

/// Classical fixed-step RK4; `field(t, y)` returns dy/dt.
template <class Field> Vec rk4_step(Field &&field, const Vec &y, double t, double dt) {
  if (!(dt > 0.0)) throw Error("rk4_step: dt must be positive");
  auto check = [t](const Vec &d) {
    for (Eigen::Index i = 0; i < d.size(); ++i)
      if (!std::isfinite(d(i))) throw IntegrationDiverged(i, t);
  };
  const Vec k1 = field(t, y);
  check(k1);
  const Vec k2 = field(t + 0.5 * dt, y + 0.5 * dt * k1);
  check(k2);
  const Vec k3 = field(t + 0.5 * dt, y + 0.5 * dt * k2);
  check(k3);
  const Vec k4 = field(t + dt, y + dt * k3);
  check(k4);
  Vec out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  check(out);
  return out;
}

// ---------------------------------------------------------------------------
// Scenario description

enum class ControllerMode {
  classical_rl,
  fixed_safeguard,
  adaptive_safeguard,
  kkt_exact,
  qp_filter,
  handcrafted
};

inline std::string to_string(ControllerMode m) {
  switch (m) {
  case ControllerMode::classical_rl: return "classical-rl";
  case ControllerMode::fixed_safeguard: return "fixed-safeguard";
  case ControllerMode::adaptive_safeguard: return "adaptive-safeguard";
  case ControllerMode::kkt_exact: return "kkt-exact";
  case ControllerMode::qp_filter: return "qp-filter";
  case ControllerMode::handcrafted: return "handcrafted";
  }
  return "unknown";
}

inline ControllerMode parse_controller_mode(std::string_view s) {
  for (auto m : {ControllerMode::classical_rl, ControllerMode::fixed_safeguard,
                 ControllerMode::adaptive_safeguard, ControllerMode::kkt_exact,
                 ControllerMode::qp_filter, ControllerMode::handcrafted})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown controller mode '" + std::string(s) + "'");
}

/// Modes whose safety rests on the safeguarding term; a violation there is a regression.
inline bool is_safeguarded(ControllerMode m) {
  return m == ControllerMode::fixed_safeguard || m == ControllerMode::adaptive_safeguard;
}

enum class ConstraintKind { halfspace, ball_inclusion, ball_exclusion };

inline std::string to_string(ConstraintKind k) {
  switch (k) {
  case ConstraintKind::halfspace: return "halfspace";
  case ConstraintKind::ball_inclusion: return "ball-inclusion";
  case ConstraintKind::ball_exclusion: return "ball-exclusion";
  }
  return "unknown";
}

inline ConstraintKind parse_constraint_kind(std::string_view s) {
  for (auto k : {ConstraintKind::halfspace, ConstraintKind::ball_inclusion,
                 ConstraintKind::ball_exclusion})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown constraint kind '" + std::string(s) + "'");
}

/// Declarative constraint: halfspace a'x + b >= 0, or a ball on selected coordinates.
struct ConstraintDecl {
  std::string label;
  ConstraintKind kind = ConstraintKind::halfspace;
  Vec normal;              // halfspace
  double offset = 0.0;     // halfspace
  std::vector<int> coords; // balls
  Vec center;              // balls
  double radius = 0.0;     // balls
  int relative_degree = 1;
  std::vector<double> alphas; // linear class-K gains, relative_degree - 1 entries
  bool enforced = true;       // acted on by the safeguard / filter
  bool adaptive = false;      // gain follows the adaptive law
  double gain = 1.0;          // Ks(0)
  double gamma3 = 1.0;        // KKT / QP class-K gain

  ConstraintSpec to_spec(int n) const {
    std::vector<ClassK> ks;
    for (double a : alphas) ks.push_back(ClassK::linear(a));
    switch (kind) {
    case ConstraintKind::halfspace:
      if (normal.size() != n)
        throw ConfigError("constraint '" + label + "': normal must have the state dimension");
      return halfspace_constraint(label, normal, offset, relative_degree, std::move(ks));
    case ConstraintKind::ball_inclusion:
      return ball_inclusion_constraint(label, coords, center, radius, n, relative_degree,
                                       std::move(ks));
    case ConstraintKind::ball_exclusion:
      return ball_exclusion_constraint(label, coords, center, radius, n, relative_degree,
                                       std::move(ks));
    }
    throw ConfigError("constraint '" + label + "': unknown kind");
  }
};

/// Randomly placed circular obstacles, materialized into constraints by resolve().
struct ObstacleField {
  int count = 0;
  double radius = 0.5;
  Vec lo;                 // placement box for the centers
  Vec hi;
  double clearance = 0.3; // from x0, the origin and other obstacles
  std::vector<int> coords{0, 1};
  int relative_degree = 2;
  std::vector<double> alphas{1.0};
  bool enforced = true;
  bool adaptive = false;
  double gain = 1.0;
  double gamma3 = 1.0;
};

struct SystemDecl {
  std::string kind = "pendulum"; // pendulum | double-integrator
  double mass = 2.0;
  double length = 1.0;
  double gravity = 10.0;
  int axes = 1;

  SystemModel build() const {
    if (kind == "pendulum") return make_pendulum(mass, length, gravity);
    if (kind == "double-integrator") return make_double_integrator(axes);
    throw ConfigError("unknown system '" + kind + "'");
  }
};

struct ObserverDecl {
  bool enabled = false;
  Mat gain; // p x n, omega(x) = gain x
};

struct LearnerDecl {
  LearnerGains gains;
  Vec initial_weights;
  std::vector<std::pair<int, int>> monomials; // empty: all degree-2 monomials
  double gamma0 = 1000.0;
  double actor_bound = 0.0; // <= 0: 10 |Wa(0)|
  Vec box_lo;
  Vec box_hi;
  std::vector<int> grid;
  double lambda_c = 0.0;
  double penalty_weight = 0.0; // > 0 adds w * sum B_j(x) to the stage cost
};

/// u = -kd v + kp (p_d(t) - p), p_d(t) = target + rate t, for double integrators.
struct TrackingDecl {
  double kp = 100.0;
  double kd = 1.0;
  Vec target;
  Vec rate;
};

struct ScenarioConfig {
  std::string name = "custom";
  SystemDecl system;
  std::vector<ConstraintDecl> constraints;
  ObstacleField obstacles;
  ControllerMode mode = ControllerMode::classical_rl;
  SafeguardConfig safeguard;
  BarrierForm barrier_form = BarrierForm::reciprocal;
  ObserverDecl observer;
  LearnerDecl learner;
  TrackingDecl tracking;
  FaultSignal fault = FaultSignal::zero(1);
  Mat Q;
  Mat R;
  Vec x0;
  double horizon = 10.0;
  double dt = 1e-3;
  double control_frequency = 1000.0;
  std::uint64_t seed = 1;
  int record_stride = 1;

  bool uses_learner() const { return mode != ControllerMode::handcrafted; }

  /// Number of integration steps per control period.
  int substeps() const {
    return std::max(1, static_cast<int>(std::ceil(1.0 / (control_frequency * dt) - 1e-9)));
  }
};

/// Draws obstacle centers for `field` from `seed`, rejecting overlaps.
inline std::vector<ConstraintDecl> place_obstacles(const ObstacleField &field, const Vec &x0,
                                                   std::uint64_t seed) {
  std::vector<ConstraintDecl> out;
  if (field.count <= 0) return out;
  const auto dim = static_cast<Eigen::Index>(field.coords.size());
  if (field.lo.size() != dim || field.hi.size() != dim)
    throw ConfigError("obstacle placement box must match the obstacle coordinates");
  Vec start(dim);
  for (Eigen::Index i = 0; i < dim; ++i) start(i) = x0(field.coords[static_cast<std::size_t>(i)]);
  std::mt19937_64 rng(seed);
  std::vector<std::uniform_real_distribution<double>> axes;
  for (Eigen::Index i = 0; i < dim; ++i) axes.emplace_back(field.lo(i), field.hi(i));
  const double keep_out = field.radius + field.clearance;
  for (int attempt = 0; attempt < 100000 && static_cast<int>(out.size()) < field.count;
       ++attempt) {
    Vec c(dim);
    for (Eigen::Index i = 0; i < dim; ++i) c(i) = axes[static_cast<std::size_t>(i)](rng);
    if ((c - start).norm() < keep_out || c.norm() < keep_out) continue;
    bool overlaps = false;
    for (const auto &o : out)
      if ((c - o.center).norm() < 2.0 * field.radius + field.clearance) overlaps = true;
    if (overlaps) continue;
    ConstraintDecl d;
    d.label = "obstacle" + std::to_string(out.size() + 1);
    d.kind = ConstraintKind::ball_exclusion;
    d.coords = field.coords;
    d.center = c;
    d.radius = field.radius;
    d.relative_degree = field.relative_degree;
    d.alphas = field.alphas;
    d.enforced = field.enforced;
    d.adaptive = field.adaptive;
    d.gain = field.gain;
    d.gamma3 = field.gamma3;
    out.push_back(std::move(d));
  }
  if (static_cast<int>(out.size()) < field.count)
    throw ConfigError("could not place " + std::to_string(field.count) + " obstacles");
  return out;
}

/**
 * @brief Fills defaults, materializes random obstacles and checks consistency.
 *
 * The result is self-contained: resolving it again is a no-op, so it can be
 * written out as a snapshot and re-run bit-identically.
 */
inline ScenarioConfig resolve(ScenarioConfig cfg) {
  const SystemModel sys = cfg.system.build();
  const int n = sys.state_dim();
  const int p = sys.input_dim();
  if (cfg.x0.size() != n) throw ConfigError("x0 must have " + std::to_string(n) + " entries");
  if (cfg.Q.size() == 0) cfg.Q = Mat::Identity(n, n);
  if (cfg.R.size() == 0) cfg.R = Mat::Identity(p, p);
  if (cfg.Q.rows() != n || cfg.Q.cols() != n) throw ConfigError("Q must be n x n");
  if (cfg.R.rows() != p || cfg.R.cols() != p) throw ConfigError("R must be p x p");
  if (!(cfg.dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(cfg.control_frequency > 0.0)) throw ConfigError("control frequency must be positive");
  if (!(cfg.horizon > 0.0)) throw ConfigError("horizon must be positive");
  if (cfg.record_stride < 1) throw ConfigError("record stride must be >= 1");
  cfg.dt = 1.0 / (cfg.control_frequency * cfg.substeps());

  if (cfg.obstacles.count > 0) {
    auto placed = place_obstacles(cfg.obstacles, cfg.x0, cfg.seed);
    cfg.constraints.insert(cfg.constraints.end(), placed.begin(), placed.end());
    cfg.obstacles.count = 0;
  }
  for (std::size_t i = 0; i < cfg.constraints.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.constraints.size(); ++j)
      if (cfg.constraints[i].label == cfg.constraints[j].label)
        throw ConfigError("duplicate constraint label '" + cfg.constraints[i].label + "'");

  if (cfg.fault.channels != p) {
    if (cfg.fault.kind == FaultKind::zero) cfg.fault = FaultSignal::zero(p);
    else throw ConfigError("fault has the wrong number of channels");
  }
  if (cfg.observer.enabled && (cfg.observer.gain.rows() != p || cfg.observer.gain.cols() != n))
    throw ConfigError("observer gain must be p x n");

  if (cfg.uses_learner()) {
    auto &L = cfg.learner;
    const QuadraticBasis basis = L.monomials.empty() ? QuadraticBasis::all_monomials(n)
                                                     : QuadraticBasis(n, L.monomials);
    if (L.monomials.empty()) L.monomials = basis.terms();
    const auto s = static_cast<Eigen::Index>(basis.size());
    if (L.initial_weights.size() == 0) L.initial_weights = Vec::Zero(s);
    if (L.initial_weights.size() < s) {
      Vec padded = Vec::Zero(s);
      padded.head(L.initial_weights.size()) = L.initial_weights;
      L.initial_weights = padded;
    }
    if (L.initial_weights.size() != s)
      throw ConfigError("initial weights longer than the basis");
    if (L.actor_bound <= 0.0)
      L.actor_bound = L.initial_weights.norm() > 0.0 ? 10.0 * L.initial_weights.norm() : 1.0;
    if (L.box_lo.size() == 0) L.box_lo = -Vec::Ones(n);
    if (L.box_hi.size() == 0) L.box_hi = Vec::Ones(n);
    if (L.grid.empty()) L.grid.assign(static_cast<std::size_t>(n), 3);
  } else if (cfg.tracking.target.size() == 0) {
    if (cfg.system.kind != "double-integrator")
      throw ConfigError("handcrafted tracking needs a double-integrator plant");
    cfg.tracking.target = Vec::Zero(cfg.system.axes);
  }
  if (!cfg.uses_learner()) {
    if (cfg.tracking.rate.size() == 0) cfg.tracking.rate = Vec::Zero(cfg.system.axes);
    if (cfg.tracking.target.size() != cfg.system.axes || cfg.tracking.rate.size() != cfg.system.axes)
      throw ConfigError("tracking target/rate must have one entry per axis");
  }
  cfg.safeguard.mode =
      cfg.mode == ControllerMode::adaptive_safeguard ? GainMode::adaptive : GainMode::fixed;
  cfg.safeguard.validate();
  for (const auto &c : cfg.constraints)
    if (!(c.gain >= 0.0 && c.gain <= cfg.safeguard.gain_bound))
      throw ConfigError("constraint '" + c.label + "': gain outside [0, gain bound]");
  return cfg;
}

// ---------------------------------------------------------------------------
// Results

/// x0 violates a constraint that the selected mode is asked to enforce.
class InfeasibleStart : public Error {
public:
  InfeasibleStart(std::string what, std::vector<std::pair<std::string, FeasibilityReport>> reports)
      : Error(std::move(what)), reports_(std::move(reports)) {}
  const std::vector<std::pair<std::string, FeasibilityReport>> &reports() const noexcept {
    return reports_;
  }

private:
  std::vector<std::pair<std::string, FeasibilityReport>> reports_;
};

struct ConstraintStats {
  std::string label;
  bool enforced = true;
  double initial_psi0 = 0.0;
  double min_psi0 = std::numeric_limits<double>::infinity();
  double min_psi_any = std::numeric_limits<double>::infinity(); // over every chain level
  bool violated = false;
  double first_violation_time = std::numeric_limits<double>::quiet_NaN();
};

/**
 * @brief Recorded run. Rows are kept every `record_stride` steps (and at T);
 * the safety, cost and monitor statistics are accumulated at every step.
 */
struct Trajectory {
  std::vector<std::string> columns;
  std::vector<double> data; // row-major
  std::vector<ConstraintStats> constraints;
  double cost = 0.0;
  bool cost_monotone = true;
  double settling_time = std::numeric_limits<double>::quiet_NaN();
  double final_time = 0.0;
  Vec final_state;
  std::optional<double> observer_terminal_error;
  double max_observer_error = 0.0;
  double observer_error_initial = 0.0;
  int lg_not_positive_definite = 0;
  double gamma_min_eig = std::numeric_limits<double>::infinity();
  double gamma_max_eig = 0.0;
  double gamma0_max_eig = 0.0;
  double actor_norm_max = 0.0;
  double actor_bound = 0.0;
  double pe_initial = std::numeric_limits<double>::quiet_NaN();
  double pe_final = std::numeric_limits<double>::quiet_NaN();
  Vec final_critic;
  Vec final_actor;
  double kkt_complementarity = 0.0;
  int qp_infeasible_steps = 0;
  std::vector<double> oscillation_events; // times of input-slope sign flips near a boundary
  int steps = 0;
  double wall_seconds = 0.0;
  std::optional<std::string> failure; // integration divergence

  std::size_t rows() const { return columns.empty() ? 0 : data.size() / columns.size(); }

  double at(std::size_t row, std::size_t col) const { return data[row * columns.size() + col]; }

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw Error("no column '" + std::string(name) + "'");
  }

  bool violated() const {
    return std::any_of(constraints.begin(), constraints.end(),
                       [](const ConstraintStats &c) { return c.violated; });
  }
};

// ---------------------------------------------------------------------------
// Simulation

namespace detail {

inline double linear_norm(const Vec &v) { return v.size() ? v.norm() : 0.0; }

class Simulation {
public:
  explicit Simulation(const ScenarioConfig &cfg)
      : cfg_(cfg), sys_(cfg.system.build()), weights_(cfg.Q, cfg.R),
        n_(sys_.state_dim()), p_(sys_.input_dim()) {
    for (const auto &decl : cfg_.constraints) {
      chains_.push_back(build_chain(decl.to_spec(n_), sys_));
      barriers_.emplace_back(chains_.back(), cfg_.barrier_form);
    }
    if (cfg_.uses_learner()) {
      basis_.emplace(n_, cfg_.learner.monomials);
      std::function<double(const Vec &)> extra;
      if (cfg_.learner.penalty_weight > 0.0)
        extra = [this](const Vec &x) { return penalty(x); };
      samples_ = make_grid_samples(cfg_.learner.box_lo, cfg_.learner.box_hi, cfg_.learner.grid,
                                   *basis_, sys_, weights_, extra);
      kernel_.emplace(*basis_, samples_, weights_, cfg_.learner.gains);
      s_ = basis_->size();
    }
    off_z_ = n_;
    off_wc_ = off_z_ + (cfg_.observer.enabled ? p_ : 0);
    off_wa_ = off_wc_ + s_;
    off_gamma_ = off_wa_ + s_;
    off_gain_ = off_gamma_ + s_ * s_;
    size_ = off_gain_ + static_cast<int>(chains_.size());
  }

  Trajectory run() {
    const auto wall_start = std::chrono::steady_clock::now();
    check_feasibility();
    Vec y = initial_state();
    Trajectory traj;
    setup_columns(traj);
    for (std::size_t j = 0; j < chains_.size(); ++j) {
      ConstraintStats st;
      st.label = chains_[j].label();
      st.enforced = cfg_.constraints[j].enforced;
      st.initial_psi0 = chains_[j].value(0, cfg_.x0);
      traj.constraints.push_back(st);
    }
    if (s_ > 0) {
      traj.gamma0_max_eig = cfg_.learner.gamma0;
      traj.actor_bound = cfg_.learner.actor_bound;
      traj.pe_initial = pe(y);
    }

    const long total = std::lround(cfg_.horizon / cfg_.dt);
    const int sub = cfg_.substeps();
    Vec u = Vec::Zero(p_);
    Vec u_prev;
    std::vector<int> last_sign(static_cast<std::size_t>(p_), 0);
    double l_prev = 0.0;
    long step = 0;
    try {
      for (; step <= total; ++step) {
        const double t = static_cast<double>(step) * cfg_.dt;
        const auto x = y.head(n_);
        if (step < total && step % sub == 0) {
          u = control(t, y, traj);
          for (Eigen::Index i = 0; i < u.size(); ++i)
            if (!std::isfinite(u(i))) throw IntegrationDiverged(i, t);
          track_oscillation(t, y, u, u_prev, last_sign, traj);
          u_prev = u;
        }
        observe_step(t, y, step, traj);
        if (step % cfg_.record_stride == 0 || step == total) record(t, y, u, traj);
        if (step == total) break;

        l_prev = weights_.stage_cost(x, u);
        const Vec held = u;
        Vec next = rk4_step([&](double tau, const Vec &state) { return derivative(tau, state, held); },
                            y, t, cfg_.dt);
        project(next);
        y = std::move(next);
        const double l_next = weights_.stage_cost(y.head(n_), held);
        const double before = traj.cost;
        traj.cost += 0.5 * cfg_.dt * (l_prev + l_next);
        if (traj.cost < before) traj.cost_monotone = false;
        traj.steps = static_cast<int>(step + 1);
      }
    } catch (const IntegrationDiverged &e) {
      traj.failure = e.what();
    }
    finish(y, std::min(step, total), traj);
    traj.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return traj;
  }

private:
  const ScenarioConfig &cfg_;
  SystemModel sys_;
  CostWeights weights_;
  int n_;
  int p_;
  int s_ = 0;
  std::vector<PsiChain> chains_;
  std::vector<BarrierFunction> barriers_;
  std::optional<QuadraticBasis> basis_;
  SampleSet samples_;
  std::optional<LearnerKernel> kernel_;
  int off_z_ = 0, off_wc_ = 0, off_wa_ = 0, off_gamma_ = 0, off_gain_ = 0, size_ = 0;
  double settle_last_outside_ = 0.0;
  bool settle_ever_outside_ = false;

  double penalty(const Vec &x) const {
    double sum = 0.0;
    for (const auto &bf : barriers_) {
      const PsiLevel top = bf.chain().top(x);
      if (top.value > 0.0) sum += bf.from_top(top).value;
    }
    return cfg_.learner.penalty_weight * sum;
  }

  void check_feasibility() const {
    if (cfg_.mode == ControllerMode::classical_rl) return;
    std::vector<std::pair<std::string, FeasibilityReport>> reports;
    bool ok = true;
    for (std::size_t j = 0; j < chains_.size(); ++j) {
      if (!cfg_.constraints[j].enforced) continue;
      auto rep = initial_feasibility(chains_[j], cfg_.x0);
      ok = ok && rep.feasible;
      reports.emplace_back(chains_[j].label(), std::move(rep));
    }
    if (ok) return;
    std::string msg = "initial state is infeasible:";
    for (const auto &[label, rep] : reports)
      if (!rep.feasible)
        msg += " " + label + " fails at level " + std::to_string(*rep.first_failing_level) + ";";
    throw InfeasibleStart(msg, std::move(reports));
  }

  Vec initial_state() const {
    Vec y = Vec::Zero(size_);
    y.head(n_) = cfg_.x0;
    if (cfg_.observer.enabled)
      y.segment(off_z_, p_) = ObserverState::cold_start(cfg_.observer.gain, cfg_.x0).z;
    if (s_ > 0) {
      const auto st = LearnerState::make(cfg_.learner.initial_weights, cfg_.learner.gamma0,
                                         cfg_.learner.gains, cfg_.learner.actor_bound);
      y.segment(off_wc_, s_) = st.critic;
      y.segment(off_wa_, s_) = st.actor;
      y.segment(off_gamma_, s_ * s_) = st.gamma.reshaped();
    }
    for (std::size_t j = 0; j < chains_.size(); ++j)
      y(off_gain_ + static_cast<int>(j)) = cfg_.constraints[j].gain;
    return y;
  }

  Vec actor_gradient(const Vec &x, const Vec &y) const {
    return basis_->gradient(x).transpose() * y.segment(off_wa_, s_);
  }

  /// Nominal input: learned policy or the tracking law.
  Vec nominal(double t, const Vec &x, const Vec &y) const {
    if (s_ > 0) return optimal_policy(actor_gradient(x, y), x, sys_, weights_);
    const int a = cfg_.system.axes;
    const auto &tr = cfg_.tracking;
    Vec pd = tr.target + tr.rate * t;
    return -tr.kd * x.tail(a) + tr.kp * (pd - x.head(a));
  }

  Vec fault_estimate(const Vec &y) const {
    if (!cfg_.observer.enabled) return Vec::Zero(p_);
    return y.segment(off_z_, p_) + cfg_.observer.gain * y.head(n_);
  }

  /// Fault value the controller subtracts: the observer estimate, or the
  /// true fault in the KKT reference mode.
  Vec compensation(double t, const Vec &y) const {
    if (cfg_.mode == ControllerMode::kkt_exact) return eval_fault(cfg_.fault, t).value;
    return fault_estimate(y);
  }

  Vec control(double t, const Vec &y, Trajectory &traj) const {
    const Vec x = y.head(n_);
    const Vec kstar = nominal(t, x, y);
    const Vec uf_hat = fault_estimate(y);
    switch (cfg_.mode) {
    case ControllerMode::classical_rl:
      return kstar - uf_hat;
    case ControllerMode::fixed_safeguard:
    case ControllerMode::adaptive_safeguard:
    case ControllerMode::handcrafted: {
      Vec u = kstar - uf_hat;
      const Mat g = sys_.input_map(x);
      const Vec gradV = s_ > 0 ? actor_gradient(x, y) : Vec::Zero(n_);
      for (std::size_t j = 0; j < barriers_.size(); ++j) {
        if (!cfg_.constraints[j].enforced) continue;
        const PsiLevel top = chains_[j].top(x);
        if (!(top.value > 0.0)) continue; // barrier undefined past the boundary
        const double gain = y(off_gain_ + static_cast<int>(j));
        u += manipulated_term(barriers_[j].from_top(top), g, gradV, gain, weights_,
                              cfg_.safeguard.mu);
      }
      return u;
    }
    case ControllerMode::kkt_exact: {
      const Vec uf = eval_fault(cfg_.fault, t).value;
      const Vec base = kstar - uf;
      Vec u = base;
      const Mat g = sys_.input_map(x);
      const Vec f = sys_.drift(x);
      struct Active {
        double lambda, lfB, gamma3;
        Vec lgB;
      };
      std::vector<Active> active;
      for (std::size_t j = 0; j < barriers_.size(); ++j) {
        if (!cfg_.constraints[j].enforced) continue;
        const PsiLevel top = chains_[j].top(x);
        if (!(top.value > 0.0)) continue;
        const BarrierValue bv = barriers_[j].from_top(top);
        const double lfB = bv.dpsi * bv.grad_psi.dot(f);
        const Vec lgB = barrier_input_gradient(bv, g);
        const double g3 = cfg_.constraints[j].gamma3 * bv.psi;
        const KktResult r = kkt_multiplier(lfB, lgB, base, uf, g3, weights_);
        if (r.lambda > 0.0) {
          u += r.u - base;
          active.push_back({r.lambda, lfB, g3, lgB});
        }
      }
      for (const auto &a : active) {
        const double residual = a.lfB + a.lgB.dot(u + uf) - a.gamma3;
        traj.kkt_complementarity =
            std::max(traj.kkt_complementarity, std::abs(a.lambda * residual));
      }
      return u;
    }
    case ControllerMode::qp_filter: {
      std::vector<PsiChain> enforced;
      std::vector<double> g3;
      for (std::size_t j = 0; j < chains_.size(); ++j) {
        if (!cfg_.constraints[j].enforced) continue;
        enforced.push_back(chains_[j]);
        g3.push_back(cfg_.constraints[j].gamma3);
      }
      const QpResult r = qp_safety_filter(x, kstar - uf_hat, enforced, g3, weights_);
      if (!r.feasible) ++traj.qp_infeasible_steps;
      return r.u;
    }
    }
    return kstar;
  }

  Vec derivative(double t, const Vec &y, const Vec &u) {
    Vec dy = Vec::Zero(size_);
    const Vec x = y.head(n_);
    const Vec f = sys_.drift(x);
    const Mat g = sys_.input_map(x);
    const Vec uf = eval_fault(cfg_.fault, t).value;
    dy.head(n_) = f + g * (u + uf);
    if (cfg_.observer.enabled) {
      const Mat &C = cfg_.observer.gain;
      dy.segment(off_z_, p_) = -C * (f + g * (u + y.segment(off_z_, p_) + C * x));
    }
    if (s_ > 0) {
      double cost = weights_.stage_cost(x, u);
      if (cfg_.learner.penalty_weight > 0.0) cost += penalty(x);
      auto dWc = dy.segment(off_wc_, s_);
      auto dWa = dy.segment(off_wa_, s_);
      Eigen::Map<Mat> dGamma(dy.data() + off_gamma_, s_, s_);
      Eigen::Map<const Mat> Gamma(y.data() + off_gamma_, s_, s_);
      // Regressor along the estimated motion: the compensation term cancels the fault.
      const Vec xdot = f + g * (u + compensation(t, y));
      kernel_->rates(y.segment(off_wc_, s_), y.segment(off_wa_, s_), Gamma, x, xdot, g, cost, dWc,
                     dGamma, dWa);
    }
    if (cfg_.mode == ControllerMode::adaptive_safeguard) {
      std::optional<double> l_star;
      for (std::size_t j = 0; j < chains_.size(); ++j) {
        if (!cfg_.constraints[j].adaptive) continue;
        if (!l_star) {
          const Vec k = nominal(t, x, y);
          l_star = weights_.stage_cost(x, k);
        }
        const int idx = off_gain_ + static_cast<int>(j);
        dy(idx) = gain_rate(y(idx), chains_[j].value(0, x), *l_star, cfg_.safeguard);
      }
    }
    return dy;
  }

  void project(Vec &y) const {
    if (s_ > 0) {
      Eigen::Map<Mat> Gamma(y.data() + off_gamma_, s_, s_);
      Gamma = 0.5 * (Gamma + Gamma.transpose()).eval();
      auto Wa = y.segment(off_wa_, s_);
      const double norm = Wa.norm();
      if (norm > cfg_.learner.actor_bound) Wa *= cfg_.learner.actor_bound / norm;
    }
    for (std::size_t j = 0; j < chains_.size(); ++j) {
      const int idx = off_gain_ + static_cast<int>(j);
      y(idx) = project_gain(y(idx), cfg_.safeguard);
    }
  }

  double pe(const Vec &y) const {
    LearnerState ls;
    ls.critic = y.segment(off_wc_, s_);
    ls.actor = y.segment(off_wa_, s_);
    ls.gamma = Eigen::Map<const Mat>(y.data() + off_gamma_, s_, s_);
    return pe_condition(ls, samples_, weights_, cfg_.learner.lambda_c).min_eig;
  }

  void setup_columns(Trajectory &traj) const {
    auto &c = traj.columns;
    c.push_back("t");
    for (int i = 0; i < n_; ++i) c.push_back("x" + std::to_string(i + 1));
    for (int i = 0; i < p_; ++i) c.push_back("u" + std::to_string(i + 1));
    for (const auto &ch : chains_)
      for (int l = 0; l < ch.relative_degree(); ++l)
        c.push_back("psi_" + ch.label() + "_" + std::to_string(l));
    for (const auto &ch : chains_) c.push_back("Ks_" + ch.label());
    c.push_back("J");
    for (int i = 0; i < p_; ++i) c.push_back("uf" + std::to_string(i + 1));
    for (int i = 0; i < p_; ++i) c.push_back("ufhat" + std::to_string(i + 1));
    for (int i = 0; i < s_; ++i) c.push_back("Wc" + std::to_string(i + 1));
    for (int i = 0; i < s_; ++i) c.push_back("Wa" + std::to_string(i + 1));
  }

  /// Per-step safety and convergence statistics.
  void observe_step(double t, const Vec &y, long step, Trajectory &traj) {
    const Vec x = y.head(n_);
    for (std::size_t j = 0; j < chains_.size(); ++j) {
      auto &st = traj.constraints[j];
      const auto &ch = chains_[j];
      const double psi0 = ch.value(0, x);
      st.min_psi0 = std::min(st.min_psi0, psi0);
      double lowest = psi0;
      for (int l = 1; l < ch.relative_degree(); ++l) lowest = std::min(lowest, ch.value(l, x));
      st.min_psi_any = std::min(st.min_psi_any, lowest);
      if (!(psi0 > 0.0) && !st.violated) {
        st.violated = true;
        st.first_violation_time = t;
      }
    }
    if (x.norm() >= 0.05) {
      settle_ever_outside_ = true;
      settle_last_outside_ = t;
    }
    if (cfg_.observer.enabled) {
      const double err = (fault_estimate(y) - eval_fault(cfg_.fault, t).value).norm();
      if (step == 0) traj.observer_error_initial = err;
      traj.max_observer_error = std::max(traj.max_observer_error, err);
    }
    if (s_ > 0) {
      traj.actor_norm_max = std::max(traj.actor_norm_max, y.segment(off_wa_, s_).norm());
    }
  }

  void record(double t, const Vec &y, const Vec &u, Trajectory &traj) {
    const Vec x = y.head(n_);
    auto &d = traj.data;
    d.push_back(t);
    for (int i = 0; i < n_; ++i) d.push_back(x(i));
    for (int i = 0; i < p_; ++i) d.push_back(u(i));
    for (const auto &ch : chains_)
      for (int l = 0; l < ch.relative_degree(); ++l) d.push_back(ch.value(l, x));
    for (std::size_t j = 0; j < chains_.size(); ++j) d.push_back(y(off_gain_ + static_cast<int>(j)));
    d.push_back(traj.cost);
    const Vec uf = eval_fault(cfg_.fault, t).value;
    const Vec uf_hat = fault_estimate(y);
    for (int i = 0; i < p_; ++i) d.push_back(uf(i));
    for (int i = 0; i < p_; ++i) d.push_back(uf_hat(i));
    for (int i = 0; i < s_; ++i) d.push_back(y(off_wc_ + i));
    for (int i = 0; i < s_; ++i) d.push_back(y(off_wa_ + i));

    if (s_ > 0) {
      Eigen::Map<const Mat> Gamma(y.data() + off_gamma_, s_, s_);
      Eigen::SelfAdjointEigenSolver<Mat> es(Gamma, Eigen::EigenvaluesOnly);
      traj.gamma_min_eig = std::min(traj.gamma_min_eig, es.eigenvalues().minCoeff());
      traj.gamma_max_eig = std::max(traj.gamma_max_eig, es.eigenvalues().maxCoeff());
    }
    if (cfg_.observer.enabled &&
        !observer_gain_positive_definite(cfg_.observer.gain * sys_.input_map(x)))
      ++traj.lg_not_positive_definite;
  }

  /// Sign flips of the input's discrete derivative while the binding
  /// constraint sits within 10% of its initial margin.
  void track_oscillation(double t, const Vec &y, const Vec &u, const Vec &u_prev,
                         std::vector<int> &last_sign, Trajectory &traj) const {
    if (u_prev.size() != u.size()) return;
    const Vec x = y.head(n_);
    double ratio = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < chains_.size(); ++j) {
      const double init = traj.constraints[j].initial_psi0;
      if (init > 0.0) ratio = std::min(ratio, chains_[j].value(0, x) / init);
    }
    const bool near = ratio < 0.1;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double du = u(i) - u_prev(i);
      const int sign = du > 1e-12 ? 1 : (du < -1e-12 ? -1 : 0);
      if (sign == 0) continue;
      int &last = last_sign[static_cast<std::size_t>(i)];
      if (last != 0 && sign != last && near) traj.oscillation_events.push_back(t);
      last = sign;
    }
  }

  void finish(const Vec &y, long step, Trajectory &traj) const {
    const double t = static_cast<double>(step) * cfg_.dt;
    traj.final_time = t;
    traj.final_state = y.head(n_);
    if (!settle_ever_outside_) traj.settling_time = 0.0;
    else if (y.head(n_).norm() < 0.05) traj.settling_time = settle_last_outside_ + cfg_.dt;
    if (cfg_.observer.enabled)
      traj.observer_terminal_error =
          (fault_estimate(y) - eval_fault(cfg_.fault, t).value).norm();
    if (s_ > 0) {
      traj.final_critic = y.segment(off_wc_, s_);
      traj.final_actor = y.segment(off_wa_, s_);
      traj.pe_final = pe(y);
    }
    std::sort(traj.oscillation_events.begin(), traj.oscillation_events.end());
  }
};

} // namespace detail

/// Simulates a resolved scenario. Throws InfeasibleStart when x0 violates an
/// enforced constraint in a mode that enforces constraints. Integration
/// divergence ends the run early and is reported in Trajectory::failure.
inline Trajectory run_scenario(const ScenarioConfig &cfg) {
  const ScenarioConfig resolved = resolve(cfg);
  detail::Simulation sim(resolved);
  return sim.run();
}

// ---------------------------------------------------------------------------
// Metrics and output

/// Largest number of events inside any window of the given length.
inline int max_events_in_window(const std::vector<double> &sorted_times, double window) {
  int best = 0;
  std::size_t lo = 0;
  for (std::size_t hi = 0; hi < sorted_times.size(); ++hi) {
    while (sorted_times[hi] - sorted_times[lo] >= window) ++lo;
    best = std::max(best, static_cast<int>(hi - lo + 1));
  }
  return best;
}

struct MetricReport {
  std::string scenario;
  std::string mode;
  double cost = 0.0;
  bool violation = false;
  bool safeguarded_violation = false;
  double first_violation_time = std::numeric_limits<double>::quiet_NaN();
  std::vector<ConstraintStats> constraints;
  double settling_time = std::numeric_limits<double>::quiet_NaN();
  int oscillation_count = 0;
  double final_state_norm = 0.0;
  std::optional<double> observer_terminal_error;
  double gamma_min_eig = std::numeric_limits<double>::quiet_NaN();
  double gamma_max_eig = std::numeric_limits<double>::quiet_NaN();
  double actor_norm_max = std::numeric_limits<double>::quiet_NaN();
  double actor_bound = std::numeric_limits<double>::quiet_NaN();
  double pe_initial = std::numeric_limits<double>::quiet_NaN();
  double pe_final = std::numeric_limits<double>::quiet_NaN();
  double kkt_complementarity = 0.0;
  bool cost_monotone = true;
  std::optional<std::string> failure;

  std::vector<std::pair<std::string, std::string>> key_values() const;
};

inline MetricReport metrics(const Trajectory &traj, const ScenarioConfig &cfg) {
  MetricReport m;
  m.scenario = cfg.name;
  m.mode = to_string(cfg.mode);
  m.cost = traj.cost;
  m.constraints = traj.constraints;
  for (const auto &c : traj.constraints) {
    if (!c.violated) continue;
    m.violation = true;
    if (std::isnan(m.first_violation_time) || c.first_violation_time < m.first_violation_time)
      m.first_violation_time = c.first_violation_time;
    if (c.enforced && is_safeguarded(cfg.mode)) m.safeguarded_violation = true;
  }
  m.settling_time = traj.settling_time;
  m.oscillation_count = max_events_in_window(traj.oscillation_events, 1.0);
  m.final_state_norm = traj.final_state.size() ? traj.final_state.norm() : 0.0;
  m.observer_terminal_error = traj.observer_terminal_error;
  if (traj.final_critic.size()) {
    m.gamma_min_eig = traj.gamma_min_eig;
    m.gamma_max_eig = traj.gamma_max_eig;
    m.actor_norm_max = traj.actor_norm_max;
    m.actor_bound = traj.actor_bound;
    m.pe_initial = traj.pe_initial;
    m.pe_final = traj.pe_final;
  }
  m.kkt_complementarity = traj.kkt_complementarity;
  m.cost_monotone = traj.cost_monotone;
  m.failure = traj.failure;
  return m;
}

/// Shortest round-trip decimal text, independent of the global locale.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::vector<std::pair<std::string, std::string>> MetricReport::key_values() const {
  std::vector<std::pair<std::string, std::string>> kv;
  auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
  kv.emplace_back("scenario", scenario);
  kv.emplace_back("mode", mode);
  kv.emplace_back("J", format_number(cost));
  kv.emplace_back("violation", flag(violation));
  kv.emplace_back("safeguarded_violation", flag(safeguarded_violation));
  kv.emplace_back("first_violation_time", format_number(first_violation_time));
  for (const auto &c : constraints) {
    kv.emplace_back("min_psi0_" + c.label, format_number(c.min_psi0));
    kv.emplace_back("min_psi_" + c.label, format_number(c.min_psi_any));
    kv.emplace_back("violated_" + c.label, flag(c.violated));
  }
  kv.emplace_back("settling_time", format_number(settling_time));
  kv.emplace_back("oscillation_count", std::to_string(oscillation_count));
  kv.emplace_back("final_state_norm", format_number(final_state_norm));
  if (observer_terminal_error)
    kv.emplace_back("observer_terminal_error", format_number(*observer_terminal_error));
  kv.emplace_back("gamma_min_eig", format_number(gamma_min_eig));
  kv.emplace_back("gamma_max_eig", format_number(gamma_max_eig));
  kv.emplace_back("actor_norm_max", format_number(actor_norm_max));
  kv.emplace_back("actor_bound", format_number(actor_bound));
  kv.emplace_back("pe_min_eig_initial", format_number(pe_initial));
  kv.emplace_back("pe_min_eig_final", format_number(pe_final));
  kv.emplace_back("kkt_complementarity", format_number(kkt_complementarity));
  kv.emplace_back("cost_monotone", flag(cost_monotone));
  kv.emplace_back("failure", failure ? *failure : std::string("none"));
  return kv;
}

inline void write_metrics(const MetricReport &m, std::ostream &os) {
  for (const auto &[k, v] : m.key_values()) os << k << " = " << v << '\n';
}

inline void write_csv(const Trajectory &traj, std::ostream &os) {
  for (std::size_t i = 0; i < traj.columns.size(); ++i)
    os << (i ? "," : "") << traj.columns[i];
  os << '\n';
  const std::size_t cols = traj.columns.size();
  for (std::size_t r = 0; r < traj.rows(); ++r) {
    for (std::size_t c = 0; c < cols; ++c)
      os << (c ? "," : "") << format_number(traj.at(r, c));
    os << '\n';
  }
}

inline void write_csv(const Trajectory &traj, const std::string &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_csv(traj, os);
  if (!os) throw Error("failed writing '" + path + "'");
}

} // namespace sgrl

#endif // SGRL_SIMKIT_HPP

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

#ifndef SGRL_LEARNER_HPP
#define SGRL_LEARNER_HPP

#include "sgrl/dynamics.hpp"
#include "sgrl/safeguard.hpp"
#include "sgrl/types.hpp"

#include <Eigen/Eigenvalues>

#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace sgrl {

/**
 * @brief Degree-two monomial basis phi(x) = [x_i x_j] for a list of (i, j).
 *
 * phi(0) = 0 and grad phi(0) = 0 hold by construction.
 */
class QuadraticBasis {
public:
  using Monomial = std::pair<int, int>;

  QuadraticBasis(int state_dim, std::vector<Monomial> terms)
      : n_(state_dim), terms_(std::move(terms)) {
    if (n_ <= 0) throw ConstructionError("basis state dimension must be positive");
    if (terms_.empty()) throw ConstructionError("basis needs at least one monomial");
    std::set<Monomial> seen;
    for (auto &[i, j] : terms_) {
      if (i > j) std::swap(i, j);
      if (i < 0 || j >= n_) throw ConstructionError("monomial index out of range");
      if (!seen.insert({i, j}).second) throw ConstructionError("duplicate monomial in basis");
    }
  }

  /// Every x_i x_j with i <= j, in lexicographic order.
  static QuadraticBasis all_monomials(int state_dim) {
    std::vector<Monomial> terms;
    for (int i = 0; i < state_dim; ++i)
      for (int j = i; j < state_dim; ++j) terms.emplace_back(i, j);
    return QuadraticBasis(state_dim, std::move(terms));
  }

  int size() const noexcept { return static_cast<int>(terms_.size()); }
  int state_dim() const noexcept { return n_; }
  const std::vector<Monomial> &terms() const noexcept { return terms_; }

  Vec phi(const Vec &x) const {
    Vec out(size());
    for (int k = 0; k < size(); ++k) {
      const auto [i, j] = terms_[static_cast<std::size_t>(k)];
      out(k) = x(i) * x(j);
    }
    return out;
  }

  /// s x n Jacobian of phi.
  Mat gradient(const Vec &x) const {
    Mat G = Mat::Zero(size(), n_);
    for (int k = 0; k < size(); ++k) {
      const auto [i, j] = terms_[static_cast<std::size_t>(k)];
      G(k, i) += x(j);
      G(k, j) += x(i);
    }
    return G;
  }

private:
  int n_;
  std::vector<Monomial> terms_;
};

struct LearnerGains {
  double kc1 = 0.1;
  double kc2 = 1.0;
  double ka1 = 100.0;
  double ka2 = 1.0;
  double beta = 0.1;
};

/// Critic/actor weights and the critic adaptation gain.
struct LearnerState {
  Vec critic;
  Vec actor;
  Mat gamma;
  double actor_bound = 0.0;
  LearnerGains gains;

  /// Both networks start at `w0`; Gamma(0) = gamma0 I. A non-positive
  /// `actor_bound` selects 10 |w0| (or 1 when w0 = 0).
  static LearnerState make(const Vec &w0, double gamma0, LearnerGains gains,
                           double actor_bound = 0.0) {
    if (!(gamma0 > 0.0)) throw ConstructionError("Gamma(0) scale must be positive");
    LearnerState s;
    s.critic = w0;
    s.actor = w0;
    s.gamma = gamma0 * Mat::Identity(w0.size(), w0.size());
    s.actor_bound = actor_bound > 0.0 ? actor_bound : (w0.norm() > 0.0 ? 10.0 * w0.norm() : 1.0);
    s.gains = gains;
    return s;
  }

  /// Symmetrizes Gamma and rescales the actor radially into its ball.
  void project() {
    gamma = 0.5 * (gamma + gamma.transpose()).eval();
    const double norm = actor.norm();
    if (norm > actor_bound) actor *= actor_bound / norm;
  }
};

/// One point of simulated experience with its state-only terms cached.
struct ExperiencePoint {
  Vec x;
  Vec drift_term;  ///< grad phi(x) f(x), s
  Mat input_term;  ///< grad phi(x) g(x), s x p
  Mat g_phi;       ///< grad phi g R^{-1} g' grad phi', s x s
  double state_cost = 0.0;
  double extra_cost = 0.0; ///< optional penalty added to the stage cost
};

struct SampleSet {
  std::vector<ExperiencePoint> points;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
};

inline ExperiencePoint make_experience_point(const Vec &x, const QuadraticBasis &basis,
                                             const SystemModel &system,
                                             const CostWeights &weights, double extra_cost = 0.0) {
  ExperiencePoint pt;
  pt.x = x;
  const Mat grad = basis.gradient(x);
  pt.drift_term = grad * system.drift(x);
  pt.input_term = grad * system.input_map(x);
  pt.g_phi = pt.input_term * weights.R_inv() * pt.input_term.transpose();
  pt.state_cost = x.dot(weights.Q() * x);
  pt.extra_cost = extra_cost;
  return pt;
}

/// Uniform tensor grid over [lo, hi] with counts[i] points along axis i.
/// An axis with one point sits at the box midpoint.
inline SampleSet make_grid_samples(const Vec &lo, const Vec &hi, const std::vector<int> &counts,
                                   const QuadraticBasis &basis, const SystemModel &system,
                                   const CostWeights &weights,
                                   const std::function<double(const Vec &)> &extra_cost = {}) {
  const int n = system.state_dim();
  if (lo.size() != n || hi.size() != n || static_cast<int>(counts.size()) != n)
    throw ConstructionError("sample box dimensions do not match the state");
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) {
    if (counts[static_cast<std::size_t>(i)] < 1) throw ConstructionError("grid count must be >= 1");
    if (!(hi(i) >= lo(i))) throw ConstructionError("sample box has hi < lo");
    total *= static_cast<std::size_t>(counts[static_cast<std::size_t>(i)]);
  }
  SampleSet set;
  set.points.reserve(total);
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  for (std::size_t k = 0; k < total; ++k) {
    Vec x(n);
    for (int i = 0; i < n; ++i) {
      const int c = counts[static_cast<std::size_t>(i)];
      x(i) = c == 1 ? 0.5 * (lo(i) + hi(i))
                    : lo(i) + (hi(i) - lo(i)) * idx[static_cast<std::size_t>(i)] / (c - 1);
    }
    set.points.push_back(
        make_experience_point(x, basis, system, weights, extra_cost ? extra_cost(x) : 0.0));
    for (int i = n - 1; i >= 0; --i) {
      auto &d = idx[static_cast<std::size_t>(i)];
      if (++d < counts[static_cast<std::size_t>(i)]) break;
      d = 0;
    }
  }
  return set;
}

/// V_hat(x) = Wc' phi(x).
inline double value_eval(const LearnerState &ls, const QuadraticBasis &basis, const Vec &x) {
  return ls.critic.dot(basis.phi(x));
}

/// K(x) = -1/2 R^{-1} g' grad phi' Wa.
inline Vec policy_eval(const LearnerState &ls, const QuadraticBasis &basis, const Vec &x,
                       const SystemModel &system, const CostWeights &weights) {
  return -0.5 * weights.R_inv() *
         (system.input_map(x).transpose() * (basis.gradient(x).transpose() * ls.actor));
}

/// grad phi(x) (f(x) + g(x) u).
inline Vec bellman_regressor(const QuadraticBasis &basis, const Vec &x, const Vec &u,
                             const SystemModel &system) {
  return basis.gradient(x) * system.rhs(x, u);
}

/// delta = Wc' grad phi (f + g u) + x'Qx + u'Ru (+ extra_cost).
inline double bellman_error(const LearnerState &ls, const QuadraticBasis &basis, const Vec &x,
                            const Vec &u, const CostWeights &weights, const SystemModel &system,
                            double extra_cost = 0.0) {
  return ls.critic.dot(bellman_regressor(basis, x, u, system)) + weights.stage_cost(x, u) +
         extra_cost;
}

namespace detail {
struct SampleTerms {
  Vec regressor;
  double delta = 0.0;
  double rho = 1.0;
};

inline SampleTerms sample_terms(const LearnerState &ls, const ExperiencePoint &pt,
                                const CostWeights &weights) {
  SampleTerms out;
  const Vec u = -0.5 * weights.R_inv() * (pt.input_term.transpose() * ls.actor);
  out.regressor = pt.drift_term + pt.input_term * u;
  out.rho = 1.0 + out.regressor.squaredNorm();
  out.delta = ls.critic.dot(out.regressor) + pt.state_cost + u.dot(weights.R() * u) +
              pt.extra_cost;
  return out;
}
} // namespace detail

/// Bellman errors at the experience points under the target policy.
inline std::vector<double> sampled_bellman_errors(const LearnerState &ls, const SampleSet &samples,
                                                  const CostWeights &weights) {
  if (samples.empty()) throw Error("sampled_bellman_errors: empty sample set");
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto &pt : samples.points) out.push_back(detail::sample_terms(ls, pt, weights).delta);
  return out;
}

/**
 * @brief Right-hand sides of the critic, Gamma and actor laws.
 *
 *   Wc'    = -Gamma (kc1 w delta / rho^2 + kc2/N sum w_i delta_i / rho_i^2)
 *   Gamma' = beta Gamma - Gamma (kc1 Lambda + kc2/N sum Lambda_i) Gamma
 *   Wa'    = -ka1 (Wa - Wc) - ka2 Wa + kc1/(4 rho^2) G_phi Wa w'Wc
 *            + sum kc2/(4 N rho_i^2) G_phi,i Wa w_i'Wc
 *
 * with w = grad phi (f + g u), rho = 1 + w'w, Lambda = w w' / rho^2.
 * The kernel keeps its own scratch buffers, so one instance must not be
 * shared between threads.
 */
class LearnerKernel {
public:
  LearnerKernel(QuadraticBasis basis, const SampleSet &samples, const CostWeights &weights,
                LearnerGains gains)
      : basis_(std::move(basis)), samples_(&samples), weights_(&weights), gains_(gains) {
    const Eigen::Index s = basis_.size();
    reg_.resize(s);
    gw_.resize(s);
    crit_.resize(s);
    act_.resize(s);
    info_.resize(s, s);
    tmp_.resize(s, s);
    u_.resize(weights.R().rows());
    v_.resize(weights.R().rows());
  }

  const QuadraticBasis &basis() const noexcept { return basis_; }
  const LearnerGains &gains() const noexcept { return gains_; }

  /// Writes the three rates; `xdot` is the nominal f + g u at x and
  /// `cost` the stage cost (plus any penalty). Returns the Bellman error.
  double rates(const Eigen::Ref<const Vec> &Wc, const Eigen::Ref<const Vec> &Wa,
               const Eigen::Ref<const Mat> &Gamma, const Vec &x, const Vec &xdot, const Mat &g,
               double cost, Eigen::Ref<Vec> dWc, Eigen::Ref<Mat> dGamma, Eigen::Ref<Vec> dWa) {
    const auto &k = gains_;
    const Mat grad = basis_.gradient(x);
    reg_.noalias() = grad * xdot;
    double rho = 1.0 + reg_.squaredNorm();
    double r2 = rho * rho;
    const double delta = Wc.dot(reg_) + cost;
    crit_ = (k.kc1 * delta / r2) * reg_;
    info_.setZero();
    add_outer_lower(reg_, k.kc1 / r2);
    const Mat input_term = grad * g;
    v_.noalias() = input_term.transpose() * Wa;
    u_.noalias() = weights_->R_inv() * v_;
    act_.noalias() = (k.kc1 * reg_.dot(Wc) / (4.0 * r2)) * (input_term * u_);

    if (!samples_->empty()) {
      const double scale = k.kc2 / static_cast<double>(samples_->size());
      for (const auto &pt : samples_->points) {
        // Under the target policy w_i = grad phi_i f_i - 1/2 G_phi,i Wa.
        gw_.noalias() = pt.g_phi.lazyProduct(Wa);
        reg_ = pt.drift_term - 0.5 * gw_;
        rho = 1.0 + reg_.squaredNorm();
        r2 = rho * rho;
        const double d = Wc.dot(reg_) + pt.state_cost + 0.25 * Wa.dot(gw_) + pt.extra_cost;
        crit_.noalias() += (scale * d / r2) * reg_;
        add_outer_lower(reg_, scale / r2);
        act_.noalias() += (scale * reg_.dot(Wc) / (4.0 * r2)) * gw_;
      }
    }
    tmp_ = info_.selfadjointView<Eigen::Lower>();
    info_ = tmp_;
    dWc.noalias() = -Gamma * crit_;
    tmp_.noalias() = Gamma * info_;
    dGamma = k.beta * Gamma;
    dGamma.noalias() -= tmp_ * Gamma;
    dWa = -k.ka1 * (Wa - Wc) - k.ka2 * Wa + act_;
    return delta;
  }

private:
  void add_outer_lower(const Vec &v, double w) {
    const Eigen::Index s = v.size();
    for (Eigen::Index c = 0; c < s; ++c) {
      const double wc = w * v(c);
      for (Eigen::Index r = c; r < s; ++r) info_(r, c) += wc * v(r);
    }
  }

  QuadraticBasis basis_;
  const SampleSet *samples_;
  const CostWeights *weights_;
  LearnerGains gains_;
  Vec reg_, gw_, crit_, act_, u_, v_;
  Mat info_, tmp_;
};

struct LearnerRates {
  Vec critic;  ///< dWc/dt
  Mat gamma;   ///< dGamma/dt
  Vec actor;   ///< dWa/dt (before projection)
  double delta = 0.0;
};

inline LearnerRates learner_rates(const LearnerState &ls, const QuadraticBasis &basis,
                                  const Vec &x, const Vec &u, const SampleSet &samples,
                                  const CostWeights &weights, const SystemModel &system,
                                  double extra_cost = 0.0) {
  LearnerKernel kernel(basis, samples, weights, ls.gains);
  const Mat g = system.input_map(x);
  LearnerRates out;
  const Eigen::Index s = ls.critic.size();
  out.critic.resize(s);
  out.gamma.resize(s, s);
  out.actor.resize(s);
  out.delta = kernel.rates(ls.critic, ls.actor, ls.gamma, x, system.drift(x) + g * u, g,
                           weights.stage_cost(x, u) + extra_cost, out.critic, out.gamma,
                           out.actor);
  return out;
}

struct CriticRates {
  Vec critic;
  Mat gamma;
};

inline CriticRates critic_derivatives(const LearnerState &ls, const QuadraticBasis &basis,
                                      const Vec &x, const Vec &u, const SampleSet &samples,
                                      const CostWeights &weights, const SystemModel &system) {
  auto r = learner_rates(ls, basis, x, u, samples, weights, system);
  return {std::move(r.critic), std::move(r.gamma)};
}

inline Vec actor_derivative(const LearnerState &ls, const QuadraticBasis &basis, const Vec &x,
                            const Vec &u, const SampleSet &samples, const CostWeights &weights,
                            const SystemModel &system) {
  return learner_rates(ls, basis, x, u, samples, weights, system).actor;
}

struct PeReport {
  double min_eig = 0.0;
  bool satisfied = false;
};

/// Smallest eigenvalue of (1/N) sum Lambda_i under the current actor.
inline PeReport pe_condition(const LearnerState &ls, const SampleSet &samples,
                             const CostWeights &weights, double lambda_c) {
  if (samples.empty()) throw Error("pe_condition: empty sample set");
  const Eigen::Index s = ls.critic.size();
  Mat avg = Mat::Zero(s, s);
  for (const auto &pt : samples.points) {
    const auto st = detail::sample_terms(ls, pt, weights);
    avg.noalias() += (st.regressor * st.regressor.transpose()) / (st.rho * st.rho);
  }
  avg /= static_cast<double>(samples.size());
  Eigen::SelfAdjointEigenSolver<Mat> es(avg);
  PeReport out;
  out.min_eig = es.eigenvalues().minCoeff();
  out.satisfied = out.min_eig >= lambda_c;
  return out;
}

} // namespace sgrl

#endif // SGRL_LEARNER_HPP

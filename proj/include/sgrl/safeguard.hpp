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

#ifndef SGRL_SAFEGUARD_HPP
#define SGRL_SAFEGUARD_HPP

#include "sgrl/barrier.hpp"
#include "sgrl/dynamics.hpp"
#include "sgrl/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace sgrl {

/// Quadratic stage cost l(x, u) = x'Qx + u'Ru with cached R^{-1} and R^{-1/2}.
class CostWeights {
public:
  CostWeights(Mat Q, Mat R) : Q_(std::move(Q)), R_(std::move(R)) {
    check_spd(Q_, "Q");
    check_spd(R_, "R");
    R_inv_ = R_.inverse();
    Eigen::SelfAdjointEigenSolver<Mat> es(R_);
    R_inv_sqrt_ = es.operatorInverseSqrt();
  }

  static CostWeights identity(int n, int p) {
    return CostWeights(Mat::Identity(n, n), Mat::Identity(p, p));
  }

  const Mat &Q() const noexcept { return Q_; }
  const Mat &R() const noexcept { return R_; }
  const Mat &R_inv() const noexcept { return R_inv_; }
  const Mat &R_inv_sqrt() const noexcept { return R_inv_sqrt_; }

  double stage_cost(const Vec &x, const Vec &u) const {
    return x.dot(Q_ * x) + u.dot(R_ * u);
  }

private:
  static void check_spd(const Mat &M, const char *name) {
    if (M.rows() != M.cols() || M.rows() == 0)
      throw ConstructionError(std::string(name) + " must be square and non-empty");
    if ((M - M.transpose()).norm() > 1e-12 * (1.0 + M.norm()))
      throw ConstructionError(std::string(name) + " must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(M);
    if (!(es.eigenvalues().minCoeff() > 0.0))
      throw ConstructionError(std::string(name) + " must be positive definite");
  }

  Mat Q_, R_, R_inv_, R_inv_sqrt_;
};

enum class GainMode { fixed, adaptive };

/**
 * Gains of the safeguarding law. `decay` and `growth` weight the terms of
 * dKs/dt = -decay Ks^2 + growth exp(-h) l(x, k*(x)); the result is clipped
 * to [0, gain_bound] after every integration step.
 *
 * Asymptotic stability under gradient conflict additionally wants
 * decay > (1-mu)^2 / (1-growth) * W gmax^2 / sigma_min(R), where W bounds
 * |grad B|^2 along the closed loop. W is not measurable from the
 * configuration, so this is a tuning guideline rather than a checked
 * precondition.
 */
struct SafeguardConfig {
  double mu = 0.0;
  double decay = 0.0;  // Y
  double growth = 0.0; // gamma
  double gain_bound = 1e3;
  double initial_gain = 1.0;
  GainMode mode = GainMode::fixed;

  void validate() const {
    if (!(mu >= 0.0 && mu < 1.0)) throw ConstructionError("mu must lie in [0, 1)");
    if (!(decay >= 0.0)) throw ConstructionError("gain decay weight must be >= 0");
    if (!(growth >= 0.0)) throw ConstructionError("gain growth weight must be >= 0");
    if (!(gain_bound > 0.0)) throw ConstructionError("gain bound must be positive");
    if (!(initial_gain >= 0.0 && initial_gain <= gain_bound))
      throw ConstructionError("initial gain must lie in [0, gain bound]");
  }
};

/// Per-constraint safeguarding gains.
struct GainState {
  std::vector<double> gains;
};

/// k*(x) = -1/2 R^{-1} g(x)' gradV.
inline Vec optimal_policy(const Vec &gradV, const Vec &x, const SystemModel &system,
                          const CostWeights &weights) {
  return -0.5 * weights.R_inv() * (system.input_map(x).transpose() * gradV);
}

/// L_g B as a column vector: dB/dpsi * g' grad psi.
inline Vec barrier_input_gradient(const BarrierValue &bv, const Mat &g) {
  return bv.dpsi * (g.transpose() * bv.grad_psi);
}

/// -Ks R^{-1} L_g B' for one constraint.
inline Vec safeguard_term(const BarrierValue &bv, const Mat &g, double gain,
                          const CostWeights &weights) {
  return -gain * weights.R_inv() * barrier_input_gradient(bv, g);
}

/// Sum of the per-constraint safeguarding terms.
inline Vec safeguard_force(const Vec &x, std::span<const BarrierFunction> barriers,
                           std::span<const double> gains, const CostWeights &weights) {
  if (barriers.size() != gains.size())
    throw Error("safeguard_force: one gain per barrier is required");
  const int p = static_cast<int>(weights.R().rows());
  Vec us = Vec::Zero(p);
  for (std::size_t j = 0; j < barriers.size(); ++j) {
    if (gains[j] == 0.0) continue;
    const BarrierValue bv = barriers[j].evaluate(x);
    us += safeguard_term(bv, barriers[j].chain().system().input_map(x), gains[j], weights);
  }
  return us;
}

/// Cosine between two vectors, 0 when either is (numerically) zero.
inline double cosine_similarity(const Vec &a, const Vec &b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

/// rho = cos angle(R^{-1/2} g' gradV, R^{-1/2} L_g B).
inline double gradient_similarity(const Vec &x, const Vec &gradV, const BarrierFunction &bf,
                                  const SystemModel &system, const CostWeights &weights) {
  const Mat g = system.input_map(x);
  const BarrierValue bv = bf.evaluate(x);
  return cosine_similarity(weights.R_inv_sqrt() * (g.transpose() * gradV),
                           weights.R_inv_sqrt() * barrier_input_gradient(bv, g));
}

/// Scales the component of `safety` parallel to `performance` by (1 - mu).
/// Both vectors live in the R^{-1/2} frame.
inline Vec manipulate_safety_gradient(const Vec &performance, const Vec &safety, double mu) {
  const double pp = performance.squaredNorm();
  if (pp < 1e-24) return safety;
  const Vec parallel = (safety.dot(performance) / pp) * performance;
  return (1.0 - mu) * parallel + (safety - parallel);
}

/// Safeguarding term with gradient manipulation:
/// -Ks R^{-1/2} ((1-mu) par + perp) of R^{-1/2} L_g B.
inline Vec manipulated_term(const BarrierValue &bv, const Mat &g, const Vec &gradV, double gain,
                            const CostWeights &weights, double mu) {
  if (gradV.norm() < 1e-12 || mu == 0.0) return safeguard_term(bv, g, gain, weights);
  const Vec performance = weights.R_inv_sqrt() * (g.transpose() * gradV);
  const Vec safety = weights.R_inv_sqrt() * barrier_input_gradient(bv, g);
  return -gain * weights.R_inv_sqrt() * manipulate_safety_gradient(performance, safety, mu);
}

inline Vec manipulated_safeguard(const Vec &x, const Vec &gradV, const BarrierFunction &bf,
                                 double gain, const CostWeights &weights, double mu) {
  if (!(mu >= 0.0 && mu < 1.0)) throw Error("mu must lie in [0, 1)");
  const Mat g = bf.chain().system().input_map(x);
  return manipulated_term(bf.evaluate(x), g, gradV, gain, weights, mu);
}

/// Hamiltonian under k* + manipulated safeguard when gradV solves the HJB:
/// Ks^2 (1 - 2 rho^2 mu + rho^2 mu^2) |R^{-1/2} L_g B|^2.
inline double hamiltonian_excess(const Vec &x, const Vec &gradV, const BarrierFunction &bf,
                                 double gain, const CostWeights &weights, double mu) {
  const Mat g = bf.chain().system().input_map(x);
  const BarrierValue bv = bf.evaluate(x);
  const Vec performance = weights.R_inv_sqrt() * (g.transpose() * gradV);
  const Vec safety = weights.R_inv_sqrt() * barrier_input_gradient(bv, g);
  const double rho = cosine_similarity(performance, safety);
  const double r2 = rho * rho;
  return gain * gain * (1.0 - 2.0 * r2 * mu + r2 * mu * mu) * safety.squaredNorm();
}

/// Similarity after manipulation, as a function of rho and mu.
inline double manipulated_similarity(double rho, double mu) {
  const double par = (1.0 - mu) * rho;
  const double den = std::sqrt(par * par + std::max(0.0, 1.0 - rho * rho));
  return den > 0.0 ? par / den : 0.0;
}

/// dKs/dt = -Y Ks^2 + gamma exp(-h) l.
inline double gain_rate(double gain, double h_value, double stage_cost,
                        const SafeguardConfig &cfg) {
  return -cfg.decay * gain * gain + cfg.growth * std::exp(-h_value) * stage_cost;
}

inline double project_gain(double gain, const SafeguardConfig &cfg) {
  return std::clamp(gain, 0.0, cfg.gain_bound);
}

/// One RK4 step of the gain law with h and l frozen over dt, then projection.
inline double adapt_gain(double gain, double h_value, double stage_cost,
                         const SafeguardConfig &cfg, double dt) {
  if (!(dt > 0.0)) throw Error("adapt_gain: dt must be positive");
  auto rate = [&](double k) { return gain_rate(k, h_value, stage_cost, cfg); };
  const double k1 = rate(gain);
  const double k2 = rate(gain + 0.5 * dt * k1);
  const double k3 = rate(gain + 0.5 * dt * k2);
  const double k4 = rate(gain + dt * k3);
  return project_gain(gain + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), cfg);
}

inline GainState adapt_gain(GainState state, std::size_t index, double h_value,
                            double stage_cost, const SafeguardConfig &cfg, double dt) {
  state.gains.at(index) = adapt_gain(state.gains.at(index), h_value, stage_cost, cfg, dt);
  return state;
}

struct KktResult {
  Vec u;
  double lambda = 0.0;
  double residual = 0.0; ///< L_f B + L_g B (u + u^f) - gamma3 psi at the returned u
};

/// Closed-form KKT solution from raw Lie derivatives of the barrier.
inline KktResult kkt_multiplier(double lfB, const Vec &lgB, const Vec &kstar, const Vec &uf,
                                double gamma3_term, const CostWeights &weights) {
  KktResult out;
  const Vec rinv_lg = weights.R_inv() * lgB;
  const double den = lgB.dot(rinv_lg);
  const double num = lfB + lgB.dot(kstar + uf) - gamma3_term;
  out.lambda = den > 1e-10 ? std::max(num / den, 0.0) : 0.0;
  out.u = kstar - out.lambda * rinv_lg;
  out.residual = lfB + lgB.dot(out.u + uf) - gamma3_term;
  return out;
}

/// KKT safe policy for one barrier; requires the true u^f.
inline KktResult kkt_policy(const Vec &x, const Vec &kstar, const BarrierFunction &bf,
                            const CostWeights &weights, const Vec &uf_known, double gamma3_gain) {
  const auto &sys = bf.chain().system();
  const BarrierValue bv = bf.evaluate(x);
  const double lfB = bv.dpsi * bv.grad_psi.dot(sys.drift(x));
  const Vec lgB = barrier_input_gradient(bv, sys.input_map(x));
  return kkt_multiplier(lfB, lgB, kstar, uf_known, gamma3_gain * bv.psi, weights);
}

struct QpResult {
  Vec u;
  bool feasible = true;
  std::vector<int> active; ///< indices of constraints active at the solution
  double max_violation = 0.0;
};

/**
 * @brief min (u - u0)' R (u - u0) s.t. a_j . u >= b_j by active-set enumeration.
 *
 * Candidates are the unconstrained point and every active set of size one
 * or two. The cheapest primal-feasible candidate wins; if none is feasible
 * the least-violating candidate is returned with feasible = false.
 */
inline QpResult solve_halfspace_qp(const Vec &u_nominal, const std::vector<Vec> &a,
                                   const std::vector<double> &b, const CostWeights &weights) {
  const Mat &Rinv = weights.R_inv();
  const std::size_t m = a.size();
  auto violation = [&](const Vec &u) {
    double worst = 0.0;
    for (std::size_t j = 0; j < m; ++j) worst = std::max(worst, b[j] - a[j].dot(u));
    return worst;
  };
  auto cost = [&](const Vec &u) { return (u - u_nominal).dot(weights.R() * (u - u_nominal)); };

  QpResult best;
  double best_cost = std::numeric_limits<double>::infinity();
  QpResult fallback;
  double fallback_violation = std::numeric_limits<double>::infinity();

  auto consider = [&](const Vec &u, std::vector<int> active) {
    const double viol = violation(u);
    const double scale = 1e-9 * (1.0 + u.norm());
    if (viol <= scale) {
      const double c = cost(u);
      if (c < best_cost) {
        best_cost = c;
        best = {u, true, std::move(active), viol};
      }
    } else if (viol < fallback_violation) {
      fallback_violation = viol;
      fallback = {u, false, std::move(active), viol};
    }
  };

  consider(u_nominal, {});
  for (std::size_t j = 0; j < m; ++j) {
    const Vec ra = Rinv * a[j];
    const double gram = a[j].dot(ra);
    if (gram < 1e-14) continue;
    const double nu = (b[j] - a[j].dot(u_nominal)) / gram;
    if (nu < 0.0) continue;
    consider(u_nominal + nu * ra, {static_cast<int>(j)});
  }
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = j + 1; k < m; ++k) {
      Mat A(2, u_nominal.size());
      A.row(0) = a[j].transpose();
      A.row(1) = a[k].transpose();
      const Mat G = A * Rinv * A.transpose();
      if (std::abs(G.determinant()) < 1e-14 * (1.0 + G.squaredNorm())) continue;
      Eigen::Vector2d rhs(b[j] - a[j].dot(u_nominal), b[k] - a[k].dot(u_nominal));
      const Eigen::Vector2d nu = G.fullPivLu().solve(rhs);
      if (nu.minCoeff() < 0.0) continue;
      consider(u_nominal + Rinv * A.transpose() * nu, {static_cast<int>(j), static_cast<int>(k)});
    }
  }
  if (std::isfinite(best_cost)) return best;
  return fallback;
}

/// CBF safety filter: L_f psi_j + L_g psi_j u >= -gamma3_j psi_j for every j.
inline QpResult qp_safety_filter(const Vec &x, const Vec &u_nominal,
                                 std::span<const PsiChain> chains,
                                 std::span<const double> gamma3_gains,
                                 const CostWeights &weights) {
  if (chains.size() != gamma3_gains.size())
    throw Error("qp_safety_filter: one gamma3 gain per constraint is required");
  std::vector<Vec> a;
  std::vector<double> b;
  for (std::size_t j = 0; j < chains.size(); ++j) {
    const PsiLevel top = chains[j].top(x);
    const auto &sys = chains[j].system();
    a.push_back(sys.input_map(x).transpose() * top.gradient);
    b.push_back(-gamma3_gains[j] * top.value - top.gradient.dot(sys.drift(x)));
  }
  return solve_halfspace_qp(u_nominal, a, b, weights);
}

} // namespace sgrl

#endif // SGRL_SAFEGUARD_HPP

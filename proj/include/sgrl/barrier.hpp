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

#ifndef SGRL_BARRIER_HPP
#define SGRL_BARRIER_HPP

#include "sgrl/dynamics.hpp"
#include "sgrl/types.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace sgrl {

/// Extended class-K function, alpha(s) = gain * s or gain * s^3.
struct ClassK {
  enum class Shape { linear, cubic };
  Shape shape = Shape::linear;
  double gain = 1.0;

  static ClassK linear(double gain) { return {Shape::linear, gain}; }
  static ClassK cubic(double gain) { return {Shape::cubic, gain}; }

  double operator()(double s) const {
    return shape == Shape::linear ? gain * s : gain * s * s * s;
  }
  double derivative(double s) const {
    return shape == Shape::linear ? gain : 3.0 * gain * s * s;
  }
};

/**
 * @brief Safety function h(x) >= 0 together with its relative degree and
 *        the class-K gains used to build the psi-chain.
 */
struct ConstraintSpec {
  std::string label;
  std::function<double(const Vec &)> h;
  std::function<Vec(const Vec &)> grad_h;
  std::function<Mat(const Vec &)> hess_h; // optional
  int relative_degree = 1;
  std::vector<ClassK> alphas; // relative_degree - 1 entries
};

/// h(x) = 0.5 x'Hx + a'x + b, with analytic gradient and Hessian.
inline ConstraintSpec quadratic_constraint(std::string label, Mat H, Vec a, double b,
                                           int relative_degree, std::vector<ClassK> alphas) {
  if (H.rows() != H.cols() || H.rows() != a.size())
    throw ConstructionError("quadratic constraint '" + label + "' has inconsistent sizes");
  H = 0.5 * (H + H.transpose()).eval();
  ConstraintSpec spec;
  spec.label = std::move(label);
  spec.h = [H, a, b](const Vec &x) { return 0.5 * x.dot(H * x) + a.dot(x) + b; };
  spec.grad_h = [H, a](const Vec &x) -> Vec { return H * x + a; };
  spec.hess_h = [H](const Vec &) -> Mat { return H; };
  spec.relative_degree = relative_degree;
  spec.alphas = std::move(alphas);
  return spec;
}

/// h(x) = a'x + b.
inline ConstraintSpec halfspace_constraint(std::string label, const Vec &a, double b,
                                           int relative_degree, std::vector<ClassK> alphas) {
  return quadratic_constraint(std::move(label), Mat::Zero(a.size(), a.size()), a, b,
                              relative_degree, std::move(alphas));
}

namespace detail {
inline Mat coordinate_selector(const std::vector<int> &coords, int n) {
  Mat S = Mat::Zero(static_cast<Eigen::Index>(coords.size()), n);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i] < 0 || coords[i] >= n)
      throw ConstructionError("coordinate index out of range");
    S(static_cast<Eigen::Index>(i), coords[i]) = 1.0;
  }
  return S;
}
} // namespace detail

/// h(x) = |S x - c|^2 - r^2 where S picks `coords` out of the n-dim state.
inline ConstraintSpec ball_exclusion_constraint(std::string label, const std::vector<int> &coords,
                                                const Vec &center, double radius, int n,
                                                int relative_degree, std::vector<ClassK> alphas) {
  if (static_cast<Eigen::Index>(coords.size()) != center.size())
    throw ConstructionError("ball center does not match coordinate list");
  const Mat S = detail::coordinate_selector(coords, n);
  return quadratic_constraint(std::move(label), 2.0 * S.transpose() * S,
                              -2.0 * S.transpose() * center, center.squaredNorm() - radius * radius,
                              relative_degree, std::move(alphas));
}

/// h(x) = r^2 - |S x - c|^2.
inline ConstraintSpec ball_inclusion_constraint(std::string label, const std::vector<int> &coords,
                                                const Vec &center, double radius, int n,
                                                int relative_degree, std::vector<ClassK> alphas) {
  if (static_cast<Eigen::Index>(coords.size()) != center.size())
    throw ConstructionError("ball center does not match coordinate list");
  const Mat S = detail::coordinate_selector(coords, n);
  return quadratic_constraint(std::move(label), -2.0 * S.transpose() * S,
                              2.0 * S.transpose() * center, radius * radius - center.squaredNorm(),
                              relative_degree, std::move(alphas));
}

struct PsiLevel {
  double value = 0.0;
  Vec gradient;
};

struct LieDerivatives {
  double lf = 0.0;
  RowVec lg;
};

/**
 * @brief The recursion psi_0 = h, psi_i = grad(psi_{i-1}) . f + alpha_i(psi_{i-1}).
 *
 * Level one uses the analytic Hessian of h and the drift Jacobian when both
 * exist. Higher levels, and level one without that information, use central
 * differences of the level value.
 */
class PsiChain {
public:
  PsiChain(ConstraintSpec spec, SystemModel system)
      : spec_(std::move(spec)), system_(std::move(system)) {}

  const ConstraintSpec &spec() const noexcept { return spec_; }
  const SystemModel &system() const noexcept { return system_; }
  const std::string &label() const noexcept { return spec_.label; }
  int relative_degree() const noexcept { return spec_.relative_degree; }
  int top_level() const noexcept { return spec_.relative_degree - 1; }

  double value(int level, const Vec &x) const {
    if (level == 0) return spec_.h(x);
    const double below = value(level - 1, x);
    return gradient(level - 1, x).dot(system_.drift(x)) +
           spec_.alphas[static_cast<std::size_t>(level - 1)](below);
  }

  Vec gradient(int level, const Vec &x) const {
    if (level == 0) return spec_.grad_h(x);
    if (level == 1 && analytic_first_level()) {
      const Vec gh = spec_.grad_h(x);
      return spec_.hess_h(x) * system_.drift(x) + system_.drift_jacobian(x).transpose() * gh +
             spec_.alphas[0].derivative(spec_.h(x)) * gh;
    }
    return central_difference_gradient([this, level](const Vec &y) { return value(level, y); },
                                       x);
  }

  /// Values and gradients of psi_0 ... psi_{m-1}.
  std::vector<PsiLevel> evaluate(const Vec &x) const {
    std::vector<PsiLevel> levels;
    levels.reserve(static_cast<std::size_t>(spec_.relative_degree));
    levels.push_back({spec_.h(x), spec_.grad_h(x)});
    if (spec_.relative_degree == 1) return levels;
    const Vec f = system_.drift(x);
    for (int i = 1; i < spec_.relative_degree; ++i) {
      const PsiLevel &prev = levels.back();
      const auto &alpha = spec_.alphas[static_cast<std::size_t>(i - 1)];
      PsiLevel level;
      level.value = prev.gradient.dot(f) + alpha(prev.value);
      if (i == 1 && analytic_first_level()) {
        level.gradient = spec_.hess_h(x) * f + system_.drift_jacobian(x).transpose() * prev.gradient +
                         alpha.derivative(prev.value) * prev.gradient;
      } else {
        level.gradient = gradient(i, x);
      }
      levels.push_back(std::move(level));
    }
    return levels;
  }

  PsiLevel top(const Vec &x) const {
    if (spec_.relative_degree == 1) return {spec_.h(x), spec_.grad_h(x)};
    auto levels = evaluate(x);
    return std::move(levels.back());
  }

private:
  bool analytic_first_level() const {
    return static_cast<bool>(spec_.hess_h) && system_.has_analytic_jacobian();
  }

  ConstraintSpec spec_;
  SystemModel system_;
};

/// Validates a constraint against a plant and builds its psi-chain.
///
/// Relative degree is verified on deterministic probe states drawn from
/// [-probe_radius, probe_radius]^n: every level below the top must have no
/// input authority.
inline PsiChain build_chain(ConstraintSpec spec, const SystemModel &system,
                            double probe_radius = 2.0, int probes = 32) {
  if (spec.relative_degree < 1)
    throw ConstructionError("constraint '" + spec.label + "': relative degree must be >= 1");
  if (static_cast<int>(spec.alphas.size()) != spec.relative_degree - 1)
    throw ConstructionError("constraint '" + spec.label + "': expected " +
                            std::to_string(spec.relative_degree - 1) + " class-K functions");
  if (!spec.h || !spec.grad_h)
    throw ConstructionError("constraint '" + spec.label + "' needs h and grad_h");
  for (const auto &alpha : spec.alphas) {
    if (std::abs(alpha(0.0)) > 0.0)
      throw ConstructionError("constraint '" + spec.label + "': alpha(0) must be 0");
    double prev = alpha(-10.0);
    for (int k = -99; k <= 100; ++k) {
      const double cur = alpha(0.1 * k);
      if (!(cur > prev))
        throw ConstructionError("constraint '" + spec.label + "': alpha is not strictly increasing");
      prev = cur;
    }
  }
  const int n = system.state_dim();
  if (spec.grad_h(Vec::Zero(n)).size() != n)
    throw ConstructionError("constraint '" + spec.label + "': gradient dimension mismatch");

  PsiChain chain(std::move(spec), system);
  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> dist(-probe_radius, probe_radius);
  bool input_reaches_top = false;
  for (int k = 0; k < probes; ++k) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = dist(rng);
    const Mat g = system.input_map(x);
    for (int level = 0; level <= chain.top_level(); ++level) {
      const Vec grad = chain.gradient(level, x);
      const double lg = (grad.transpose() * g).norm();
      const bool nonzero = lg > 1e-6 * (1.0 + grad.norm() * g.norm());
      if (level < chain.top_level() && nonzero)
        throw ConstructionError("constraint '" + chain.label() +
                                "': relative degree violated at level " + std::to_string(level));
      if (level == chain.top_level() && nonzero) input_reaches_top = true;
    }
  }
  if (!input_reaches_top)
    throw ConstructionError("constraint '" + chain.label() +
                            "': the input never appears at the top level; relative degree too low");
  return chain;
}

/// Per-level values; no sign interpretation.
inline std::vector<PsiLevel> eval_chain(const PsiChain &chain, const Vec &x) {
  return chain.evaluate(x);
}

/// L_f psi_{m-1} and L_g psi_{m-1}.
inline LieDerivatives lie_derivatives(const PsiChain &chain, const Vec &x) {
  const PsiLevel top = chain.top(x);
  const auto &sys = chain.system();
  return {top.gradient.dot(sys.drift(x)), top.gradient.transpose() * sys.input_map(x)};
}

struct FeasibilityReport {
  bool feasible = true;
  std::vector<double> values;            // psi_0 ... psi_{m-1} at x0
  std::optional<int> first_failing_level; // lowest level with psi <= 0
};

/// x0 lies in the intersection of {psi_i > 0}.
inline FeasibilityReport initial_feasibility(const PsiChain &chain, const Vec &x0) {
  FeasibilityReport report;
  for (int i = 0; i < chain.relative_degree(); ++i) {
    const double v = chain.value(i, x0);
    report.values.push_back(v);
    if (!(v > 0.0) && !report.first_failing_level) {
      report.feasible = false;
      report.first_failing_level = i;
    }
  }
  return report;
}

enum class BarrierForm { reciprocal, shifted_square };

struct BarrierValue {
  double value = 0.0;   ///< energy function
  double dpsi = 0.0;    ///< derivative with respect to psi_{m-1}
  double psi = 0.0;     ///< psi_{m-1}(x)
  Vec grad_psi;         ///< gradient of psi_{m-1}
  Vec grad_x;           ///< dpsi * grad_psi
};

/**
 * @brief Energy function on top of a psi-chain.
 *
 * Reciprocal: B = 1/psi. Shifted square: (1/psi - 1/psi(0))^2, which is zero
 * at the origin. Both blow up as psi_{m-1} -> 0+; no clamping is applied.
 */
class BarrierFunction {
public:
  explicit BarrierFunction(PsiChain chain, BarrierForm form = BarrierForm::reciprocal)
      : chain_(std::move(chain)), form_(form) {
    if (form_ == BarrierForm::shifted_square) {
      psi_origin_ = chain_.top(Vec::Zero(chain_.system().state_dim())).value;
      if (!(psi_origin_ > 0.0))
        throw ConstructionError("shifted-square barrier '" + chain_.label() +
                                "' needs the origin strictly inside the safe set");
    }
  }

  const PsiChain &chain() const noexcept { return chain_; }
  BarrierForm form() const noexcept { return form_; }
  const std::string &label() const noexcept { return chain_.label(); }
  double psi_at_origin() const noexcept { return psi_origin_; }

  /// Barrier value from a precomputed top level.
  BarrierValue from_top(PsiLevel top) const {
    if (!(top.value > 0.0)) throw BoundaryCrossed(chain_.label(), top.value);
    BarrierValue out;
    out.psi = top.value;
    const double inv = 1.0 / top.value;
    if (form_ == BarrierForm::reciprocal) {
      out.value = inv;
      out.dpsi = -inv * inv;
    } else {
      const double shift = inv - 1.0 / psi_origin_;
      out.value = shift * shift;
      out.dpsi = -2.0 * shift * inv * inv;
    }
    out.grad_x = out.dpsi * top.gradient;
    out.grad_psi = std::move(top.gradient);
    return out;
  }

  BarrierValue evaluate(const Vec &x) const { return from_top(chain_.top(x)); }

private:
  PsiChain chain_;
  BarrierForm form_;
  double psi_origin_ = 0.0;
};

inline BarrierValue eval_barrier(const BarrierFunction &bf, const Vec &x) {
  return bf.evaluate(x);
}

} // namespace sgrl

#endif // SGRL_BARRIER_HPP

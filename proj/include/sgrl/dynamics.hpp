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

#ifndef SGRL_DYNAMICS_HPP
#define SGRL_DYNAMICS_HPP

#include "sgrl/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace sgrl {

/// Central-difference Jacobian of a vector field, step max(1e-6, 1e-6 |x|).
inline Mat central_difference_jacobian(const std::function<Vec(const Vec &)> &fn,
                                       const Vec &x) {
  const double h = std::max(1e-6, 1e-6 * x.norm());
  const Vec f0 = fn(x);
  Mat jac(f0.size(), x.size());
  Vec xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    xp(j) = x(j) + h;
    const Vec fp = fn(xp);
    xp(j) = x(j) - h;
    const Vec fm = fn(xp);
    xp(j) = x(j);
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

/// Central-difference gradient of a scalar function.
inline Vec central_difference_gradient(const std::function<double(const Vec &)> &fn,
                                       const Vec &x, double step = 0.0) {
  const double h = step > 0.0 ? step : std::max(1e-6, 1e-6 * x.norm());
  Vec grad(x.size());
  Vec xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    xp(j) = x(j) + h;
    const double fp = fn(xp);
    xp(j) = x(j) - h;
    const double fm = fn(xp);
    xp(j) = x(j);
    grad(j) = (fp - fm) / (2.0 * h);
  }
  return grad;
}

/**
 * @brief Control-affine plant xdot = f(x) + g(x) u.
 *
 * The drift Jacobian is optional; when absent a central-difference
 * approximation is used. Instances are immutable once built by
 * make_system() and safe to share across threads.
 */
class SystemModel {
public:
  using Drift = std::function<Vec(const Vec &)>;
  using InputMap = std::function<Mat(const Vec &)>;
  using Jacobian = std::function<Mat(const Vec &)>;

  SystemModel() = default;

  const std::string &name() const noexcept { return name_; }
  int state_dim() const noexcept { return n_; }
  int input_dim() const noexcept { return p_; }
  double input_map_bound() const noexcept { return g_bound_; }
  bool has_analytic_jacobian() const noexcept { return static_cast<bool>(jac_); }

  Vec drift(const Vec &x) const { return f_(x); }
  Mat input_map(const Vec &x) const { return g_(x); }

  Mat drift_jacobian(const Vec &x) const {
    if (jac_) return jac_(x);
    return central_difference_jacobian(f_, x);
  }

  /// Full nominal right-hand side f(x) + g(x) u.
  Vec rhs(const Vec &x, const Vec &u) const { return f_(x) + g_(x) * u; }

  /// 0 < |g(x)| < bound (spectral norm).
  bool input_map_within_bound(const Vec &x) const {
    const double norm = g_(x).operatorNorm();
    return norm > 0.0 && norm < g_bound_;
  }

  friend SystemModel make_system(std::string name, int n, int p, Drift f,
                                 InputMap g, Jacobian jac, double g_bound);

private:
  std::string name_;
  int n_ = 0;
  int p_ = 0;
  Drift f_;
  InputMap g_;
  Jacobian jac_;
  double g_bound_ = std::numeric_limits<double>::infinity();
};

/// Builds a plant and checks dimensions and f(0) = 0.
inline SystemModel make_system(std::string name, int n, int p,
                               SystemModel::Drift f, SystemModel::InputMap g,
                               SystemModel::Jacobian jac = {},
                               double g_bound = std::numeric_limits<double>::infinity()) {
  if (n <= 0 || p <= 0) throw ConstructionError("system dimensions must be positive");
  if (!f || !g) throw ConstructionError("system requires a drift and an input map");
  const Vec origin = Vec::Zero(n);
  const Vec f0 = f(origin);
  if (f0.size() != n) throw ConstructionError("drift has wrong output dimension");
  if (f0.norm() > 1e-12) throw ConstructionError("drift must vanish at the origin");
  const Mat g0 = g(origin);
  if (g0.rows() != n || g0.cols() != p)
    throw ConstructionError("input map has wrong shape");
  if (jac) {
    const Mat j0 = jac(origin);
    if (j0.rows() != n || j0.cols() != n)
      throw ConstructionError("drift Jacobian has wrong shape");
  }
  SystemModel sys;
  sys.name_ = std::move(name);
  sys.n_ = n;
  sys.p_ = p;
  sys.f_ = std::move(f);
  sys.g_ = std::move(g);
  sys.jac_ = std::move(jac);
  sys.g_bound_ = g_bound;
  return sys;
}

/// Inverted pendulum: x1' = x2, x2' = (g/l) sin(x1) + u / (m l^2).
/// Angles are raw numbers; sin is applied to x1 as given.
inline SystemModel make_pendulum(double mass, double length, double gravity) {
  if (!(mass > 0.0) || !(length > 0.0) || !(gravity > 0.0))
    throw ConstructionError("pendulum parameters must be positive");
  const double a = gravity / length;
  const double b = 1.0 / (mass * length * length);
  auto f = [a](const Vec &x) {
    Vec d(2);
    d << x(1), a * std::sin(x(0));
    return d;
  };
  auto g = [b](const Vec &) {
    Mat m(2, 1);
    m << 0.0, b;
    return m;
  };
  auto jac = [a](const Vec &x) {
    Mat j(2, 2);
    j << 0.0, 1.0, a * std::cos(x(0)), 0.0;
    return j;
  };
  return make_system("pendulum", 2, 1, f, g, jac, 2.0 * b);
}

/// Double integrator with `axes` position/velocity pairs, state (p..., v...).
inline SystemModel make_double_integrator(int axes) {
  if (axes != 1 && axes != 2)
    throw ConstructionError("double integrator supports 1 or 2 axes");
  const int n = 2 * axes;
  auto f = [axes, n](const Vec &x) {
    Vec d = Vec::Zero(n);
    d.head(axes) = x.tail(axes);
    return d;
  };
  auto g = [axes, n](const Vec &) {
    Mat m = Mat::Zero(n, axes);
    m.bottomRows(axes).setIdentity();
    return m;
  };
  auto jac = [axes, n](const Vec &) {
    Mat j = Mat::Zero(n, n);
    j.topRightCorner(axes, axes).setIdentity();
    return j;
  };
  return make_system(axes == 1 ? "double-integrator-1" : "double-integrator-2", n,
                     axes, f, g, jac, 2.0);
}

// ---------------------------------------------------------------------------
// Fault / matched disturbance signals

/// a_sin sin(w t) + a_cos cos(w t)
struct Harmonic {
  double sin_amplitude = 0.0;
  double cos_amplitude = 0.0;
  double frequency = 0.0; // rad/s

  double magnitude() const { return std::hypot(sin_amplitude, cos_amplitude); }
};

struct FaultChannel {
  double offset = 0.0;
  std::vector<Harmonic> harmonics;
};

enum class FaultKind { zero, constant, sinusoid_sum, table };

/// Piecewise-linear table; rows of `values` are input vectors at `times`.
struct FaultTable {
  std::vector<double> times;
  std::vector<Vec> values;
};

/**
 * @brief Matched disturbance or actuator fault u^f(t) with analytic derivative.
 *
 * eta1() and eta2() return declared infinity-norm bounds on u^f and its
 * time derivative over t >= 0.
 */
struct FaultSignal {
  FaultKind kind = FaultKind::zero;
  int channels = 1;
  std::vector<FaultChannel> channel_params; // constant and sinusoid_sum
  FaultTable table;

  static FaultSignal zero(int p) {
    FaultSignal s;
    s.kind = FaultKind::zero;
    s.channels = p;
    return s;
  }

  static FaultSignal constant(const Vec &c) {
    FaultSignal s;
    s.kind = FaultKind::constant;
    s.channels = static_cast<int>(c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i) s.channel_params.push_back({c(i), {}});
    return s;
  }

  static FaultSignal sinusoid_sum(std::vector<FaultChannel> params) {
    if (params.empty()) throw ConstructionError("sinusoid fault needs at least one channel");
    FaultSignal s;
    s.kind = FaultKind::sinusoid_sum;
    s.channels = static_cast<int>(params.size());
    s.channel_params = std::move(params);
    return s;
  }

  static FaultSignal from_table(FaultTable t) {
    if (t.times.size() < 2 || t.times.size() != t.values.size())
      throw ConstructionError("fault table needs at least two rows of matching size");
    if (!std::is_sorted(t.times.begin(), t.times.end()) ||
        std::adjacent_find(t.times.begin(), t.times.end()) != t.times.end())
      throw ConstructionError("fault table times must be strictly increasing");
    FaultSignal s;
    s.kind = FaultKind::table;
    s.channels = static_cast<int>(t.values.front().size());
    for (const auto &v : t.values)
      if (v.size() != s.channels) throw ConstructionError("fault table rows differ in size");
    s.table = std::move(t);
    return s;
  }

  /// -5 + 0.01 sin t + 0.03 cos t + 0.05 sin 2t + 0.04 cos 2t on one channel.
  static FaultSignal paper_sinusoid() {
    return sinusoid_sum({FaultChannel{-5.0, {{0.01, 0.03, 1.0}, {0.05, 0.04, 2.0}}}});
  }

  double eta1() const {
    double bound = 0.0;
    switch (kind) {
    case FaultKind::zero:
      return 0.0;
    case FaultKind::constant:
    case FaultKind::sinusoid_sum:
      for (const auto &c : channel_params) {
        double b = std::abs(c.offset);
        for (const auto &h : c.harmonics) b += h.magnitude();
        bound = std::max(bound, b);
      }
      return bound;
    case FaultKind::table:
      for (const auto &v : table.values) bound = std::max(bound, v.lpNorm<Eigen::Infinity>());
      return bound;
    }
    return bound;
  }

  double eta2() const {
    double bound = 0.0;
    switch (kind) {
    case FaultKind::zero:
    case FaultKind::constant:
      return 0.0;
    case FaultKind::sinusoid_sum:
      for (const auto &c : channel_params) {
        double b = 0.0;
        for (const auto &h : c.harmonics) b += std::abs(h.frequency) * h.magnitude();
        bound = std::max(bound, b);
      }
      return bound;
    case FaultKind::table:
      for (std::size_t k = 0; k + 1 < table.times.size(); ++k) {
        const double span = table.times[k + 1] - table.times[k];
        bound = std::max(bound, ((table.values[k + 1] - table.values[k]) / span)
                                    .lpNorm<Eigen::Infinity>());
      }
      return bound;
    }
    return bound;
  }
};

struct FaultSample {
  Vec value;
  Vec derivative;
};

/// u^f(t) and its time derivative. Throws for t < 0 or t outside a table.
inline FaultSample eval_fault(const FaultSignal &signal, double t) {
  if (t < 0.0) throw Error("fault evaluated at negative time");
  FaultSample out{Vec::Zero(signal.channels), Vec::Zero(signal.channels)};
  switch (signal.kind) {
  case FaultKind::zero:
    break;
  case FaultKind::constant:
  case FaultKind::sinusoid_sum:
    for (int i = 0; i < signal.channels; ++i) {
      const auto &c = signal.channel_params[static_cast<std::size_t>(i)];
      double v = c.offset;
      double d = 0.0;
      for (const auto &h : c.harmonics) {
        const double s = std::sin(h.frequency * t);
        const double co = std::cos(h.frequency * t);
        v += h.sin_amplitude * s + h.cos_amplitude * co;
        d += h.frequency * (h.sin_amplitude * co - h.cos_amplitude * s);
      }
      out.value(i) = v;
      out.derivative(i) = d;
    }
    break;
  case FaultKind::table: {
    const auto &times = signal.table.times;
    if (t < times.front() || t > times.back())
      throw Error("fault table queried outside [" + std::to_string(times.front()) + ", " +
                  std::to_string(times.back()) + "]");
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t k = static_cast<std::size_t>(std::distance(times.begin(), it));
    k = std::clamp<std::size_t>(k, 1, times.size() - 1) - 1;
    const double span = times[k + 1] - times[k];
    const Vec slope = (signal.table.values[k + 1] - signal.table.values[k]) / span;
    out.value = signal.table.values[k] + slope * (t - times[k]);
    out.derivative = slope;
    break;
  }
  }
  return out;
}

} // namespace sgrl

#endif // SGRL_DYNAMICS_HPP

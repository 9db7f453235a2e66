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

#ifndef SGRL_OBSERVER_HPP
#define SGRL_OBSERVER_HPP

#include "sgrl/dynamics.hpp"
#include "sgrl/types.hpp"

#include <Eigen/Eigenvalues>

namespace sgrl {

/**
 * @brief Nonlinear disturbance/fault observer with linear omega(x) = C x.
 *
 *   u_hat = z + omega(x)
 *   z'    = -L(x) (f(x) + g(x) (u + z + omega(x))),   L = d omega / dx = C
 *
 * The estimation error then obeys e' = -L g e + d/dt u^f.
 */
struct ObserverState {
  Vec z;
  Mat gain; // C, p x n

  static ObserverState cold_start(Mat gain, const Vec &x0) {
    if (gain.cols() != x0.size()) throw ConstructionError("observer gain has wrong width");
    ObserverState s;
    s.z = -(gain * x0);
    s.gain = std::move(gain);
    return s;
  }

  Vec omega(const Vec &x) const { return gain * x; }
  const Mat &L(const Vec &) const { return gain; }
};

inline Vec observer_estimate(const ObserverState &obs, const Vec &x) {
  return obs.z + obs.omega(x);
}

/// True when the symmetric part of L g is positive definite.
inline bool observer_gain_positive_definite(const Mat &Lg) {
  const Mat sym = 0.5 * (Lg + Lg.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  return es.eigenvalues().minCoeff() > 0.0;
}

/// Smallest eigenvalue of sym(L g); the error decay rate for constant faults.
inline double observer_decay_rate(const ObserverState &obs, const SystemModel &system,
                                  const Vec &x) {
  const Mat Lg = obs.L(x) * system.input_map(x);
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Lg + Lg.transpose()));
  return es.eigenvalues().minCoeff();
}

struct ObserverRate {
  Vec zdot;
  bool lg_positive_definite = true;
};

inline ObserverRate observer_derivative(const ObserverState &obs, const Vec &x, const Vec &u,
                                        const SystemModel &system) {
  const Mat g = system.input_map(x);
  const Mat &L = obs.L(x);
  ObserverRate out;
  out.zdot = -L * (system.drift(x) + g * (u + obs.z + obs.omega(x)));
  out.lg_positive_definite = observer_gain_positive_definite(L * g);
  return out;
}

} // namespace sgrl

#endif // SGRL_OBSERVER_HPP

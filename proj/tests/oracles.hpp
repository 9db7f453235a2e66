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

// Independent reference computations shared by the test suites.

#ifndef SGRL_TESTS_ORACLES_HPP
#define SGRL_TESTS_ORACLES_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <complex>
#include <functional>
#include <vector>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Five-point stencil, O(h^4).
inline Vec gradient(const std::function<double(const Vec &)> &fn, const Vec &x, double h = 1e-4) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    auto at = [&](double d) {
      Vec y = x;
      y(i) += d;
      return fn(y);
    };
    g(i) = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
  }
  return g;
}

inline Mat jacobian(const std::function<Vec(const Vec &)> &fn, const Vec &x, double h = 1e-4) {
  const Vec f0 = fn(x);
  Mat J(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    auto at = [&](double d) {
      Vec y = x;
      y(i) += d;
      return fn(y);
    };
    J.col(i) = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
  }
  return J;
}

inline double relative_error(const Mat &a, const Mat &b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

/// Stabilizing CARE solution from the stable invariant subspace of the
/// Hamiltonian matrix [[A, -B R^-1 B'], [-Q, -A']].
inline Mat care(const Mat &A, const Mat &B, const Mat &Q, const Mat &R) {
  const Eigen::Index n = A.rows();
  Mat H(2 * n, 2 * n);
  H << A, -B * R.inverse() * B.transpose(), -Q, -A.transpose();
  Eigen::EigenSolver<Mat> es(H);
  Eigen::MatrixXcd X(2 * n, n);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i)
    if (es.eigenvalues()(i).real() < 0.0) X.col(k++) = es.eigenvectors().col(i);
  const Eigen::MatrixXcd P = X.bottomRows(n) * X.topRows(n).inverse();
  const Mat Pr = P.real();
  return 0.5 * (Pr + Pr.transpose());
}

inline double care_residual(const Mat &A, const Mat &B, const Mat &Q, const Mat &R, const Mat &P) {
  return (A.transpose() * P + P * A - P * B * R.inverse() * B.transpose() * P + Q).norm();
}

/// Brute-force minimizer of (u-u0)'R(u-u0) subject to a_j.u >= b_j for
/// scalar inputs: the feasible interval endpoint closest to u0.
inline double qp_1d(double u0, const std::vector<double> &a, const std::vector<double> &b,
                    double lo = -1e9, double hi = 1e9) {
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] > 0) lo = std::max(lo, b[j] / a[j]);
    else if (a[j] < 0) hi = std::min(hi, b[j] / a[j]);
  }
  return std::clamp(u0, lo, hi);
}

} // namespace oracle

#endif // SGRL_TESTS_ORACLES_HPP

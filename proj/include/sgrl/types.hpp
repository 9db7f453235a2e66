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

#ifndef SGRL_TYPES_HPP
#define SGRL_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace sgrl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters handed to a constructor or factory.
class ConstructionError : public Error {
public:
  using Error::Error;
};

/// A barrier was evaluated at or beyond its boundary (psi_{m-1} <= 0).
class BoundaryCrossed : public Error {
public:
  BoundaryCrossed(std::string label, double psi)
      : Error("constraint '" + label + "' crossed its boundary (psi = " +
              std::to_string(psi) + ")"),
        label_(std::move(label)), psi_(psi) {}

  const std::string &label() const noexcept { return label_; }
  double psi() const noexcept { return psi_; }

private:
  std::string label_;
  double psi_;
};

/// The integrator produced a non-finite value.
class IntegrationDiverged : public Error {
public:
  IntegrationDiverged(Eigen::Index component, double t)
      : Error("integration diverged in component " + std::to_string(component) +
              " at t = " + std::to_string(t)),
        component_(component), time_(t) {}

  Eigen::Index component() const noexcept { return component_; }
  double time() const noexcept { return time_; }

private:
  Eigen::Index component_;
  double time_;
};

/// Malformed scenario configuration or override.
class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace sgrl

#endif // SGRL_TYPES_HPP

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

#ifndef SGRL_SGRL_HPP
#define SGRL_SGRL_HPP

// Core library. YAML configuration lives in sgrl/config.hpp and needs yaml-cpp.
#include "sgrl/barrier.hpp"
#include "sgrl/dynamics.hpp"
#include "sgrl/learner.hpp"
#include "sgrl/observer.hpp"
#include "sgrl/safeguard.hpp"
#include "sgrl/scenarios.hpp"
#include "sgrl/simkit.hpp"
#include "sgrl/types.hpp"

#endif // SGRL_SGRL_HPP

/* Copyright 2026 The tacmap Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tacmap/nn/autograd.hpp"

namespace tacmap::nn {

struct GradCheckReport {
  std::string op;
  std::size_t instances = 0;
  std::size_t elements_checked = 0;
  // max |analytic - numeric| / max(1, |analytic|, |numeric|)
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

using ScalarFn = std::function<Var<double>(const std::vector<Var<double>>&)>;

// Compares the tape gradient of a scalar-valued `fn` with central finite
// differences for every element of every input. `corrupt` perturbs the
// analytic gradient before comparison (negative control).
GradCheckReport GradCheck(const std::string& name, const ScalarFn& fn, const std::vector<TensorD>& inputs,
                          double tol = 1e-5, double step = 1e-6, bool corrupt = false);

// Names accepted by RunOpGradCheck, in suite order.
const std::vector<std::string>& GradCheckOpNames();

// Runs `instances` random shapes/values of one differentiable op, each
// reduced to a scalar by a fixed random weighting of its outputs.
GradCheckReport RunOpGradCheck(const std::string& op, std::uint64_t seed, std::size_t instances = 20,
                               double tol = 1e-5, bool corrupt = false);

}  // namespace tacmap::nn

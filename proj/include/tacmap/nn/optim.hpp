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
#include <string>

#include "tacmap/nn/autograd.hpp"

namespace tacmap::nn {

// Trainable tensor plus its Adam moment estimates. The gradient lives on the
// tape leaf so ops accumulate into it directly.
class Parameter {
 public:
  Parameter(std::string name, Tensor value);

  const std::string& name() const noexcept { return name_; }
  const Var<float>& var() const noexcept { return var_; }

  const Tensor& value() const { return var_.value(); }
  Tensor& mutable_value() { return var_.mutable_value(); }
  const Tensor& grad() const { return var_.grad(); }
  Tensor& mutable_grad() { return var_.mutable_grad(); }
  void ZeroGrad() { var_.ZeroGrad(); }

  Tensor adam_m;
  Tensor adam_v;
  std::int64_t step_count = 0;

 private:
  std::string name_;
  Var<float> var_;
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update. Leaves the gradient in place; the caller
// zeroes it. Throws TrainingError if the gradient holds a non-finite value.
void AdamStep(Parameter& param, const AdamConfig& config);

}  // namespace tacmap::nn

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

#include "tacmap/nn/optim.hpp"

#include <cmath>

namespace tacmap::nn {

Parameter::Parameter(std::string name, Tensor value)
    : adam_m(value.shape()), adam_v(value.shape()), name_(std::move(name)) {
  var_ = Var<float>::Leaf(std::move(value), /*requires_grad=*/true);
}

void AdamStep(Parameter& param, const AdamConfig& config) {
  const Tensor& grad = param.grad();
  for (float g : grad.data()) {
    if (!std::isfinite(g)) {
      throw TrainingError("non-finite gradient in parameter '" + param.name() + "' at optimizer step " +
                          std::to_string(param.step_count + 1));
    }
  }
  ++param.step_count;
  const double t = static_cast<double>(param.step_count);
  const float beta1 = static_cast<float>(config.beta1);
  const float beta2 = static_cast<float>(config.beta2);
  const float m_correction = static_cast<float>(1.0 / (1.0 - std::pow(config.beta1, t)));
  const float v_correction = static_cast<float>(1.0 / (1.0 - std::pow(config.beta2, t)));
  const float lr = static_cast<float>(config.lr);
  const float eps = static_cast<float>(config.epsilon);

  float* value = param.mutable_value().ptr();
  float* m = param.adam_m.ptr();
  float* v = param.adam_v.ptr();
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const float g = grad[i];
    m[i] = beta1 * m[i] + (1.0f - beta1) * g;
    v[i] = beta2 * v[i] + (1.0f - beta2) * g * g;
    const float m_hat = m[i] * m_correction;
    const float v_hat = v[i] * v_correction;
    value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

}  // namespace tacmap::nn

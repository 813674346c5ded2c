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

#include "tacmap/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "tacmap/nn/ops.hpp"
#include "tacmap/rng.hpp"

namespace tacmap::nn {
namespace {

// sum(x * w) with w constant.
Var<double> WeightedSum(const Var<double>& x, const TensorD& weights) {
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) total += x.value()[i] * weights[i];
  auto w = std::make_shared<TensorD>(weights);
  return Var<double>::FromOp(TensorD({1}, total), {x}, [w](Node<double>& node) {
    TensorD& dx = node.parents[0]->grad;
    for (std::size_t i = 0; i < w->size(); ++i) dx[i] += node.grad[0] * (*w)[i];
  });
}

TensorD RandomTensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  TensorD t(std::move(shape));
  for (double& v : t.data()) v = rng.Uniform(lo, hi);
  return t;
}

// Values bounded away from zero so the finite-difference stencil never
// straddles the ReLU kink.
TensorD AwayFromZero(Rng& rng, Shape shape) {
  TensorD t(std::move(shape));
  for (double& v : t.data()) {
    const double magnitude = rng.Uniform(0.05, 1.0);
    v = rng.Uniform() < 0.5 ? -magnitude : magnitude;
  }
  return t;
}

// Distinct values (a shuffled ramp) so every pooling window has a unique max.
TensorD DistinctValues(Rng& rng, Shape shape) {
  TensorD t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.01 * static_cast<double>(i) - 0.3;
  for (std::size_t i = t.size(); i > 1; --i) std::swap(t[i - 1], t[rng.Below(i)]);
  return t;
}

std::size_t Between(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.Below(hi - lo + 1); }

struct Instance {
  ScalarFn fn;
  std::vector<TensorD> inputs;
};

// Builds one random instance of `op`. The returned function already includes
// the random output weighting.
Instance MakeInstance(const std::string& op, Rng& rng) {
  const std::size_t n = Between(rng, 1, 2);
  const std::size_t c = Between(rng, 1, 3);
  const std::size_t h = 2 * Between(rng, 1, 3);
  const std::size_t w = 2 * Between(rng, 1, 3);

  auto weighted = [&rng](auto op_fn, Shape out_shape) {
    TensorD weights = RandomTensor(rng, std::move(out_shape));
    return ScalarFn([op_fn, weights](const std::vector<Var<double>>& in) { return WeightedSum(op_fn(in), weights); });
  };

  if (op == "conv2d") {
    const std::size_t o = Between(rng, 1, 3);
    const std::size_t k = 2 * Between(rng, 0, 2) + 1;
    std::vector<TensorD> inputs{RandomTensor(rng, {n, c, h, w}), RandomTensor(rng, {o, c, k, k}),
                                RandomTensor(rng, {o})};
    return {weighted([](const auto& in) { return Conv2d(in[0], in[1], in[2]); }, {n, o, h, w}), inputs};
  }
  if (op == "maxpool2d") {
    return {weighted([](const auto& in) { return MaxPool2d(in[0]); }, {n, c, h / 2, w / 2}),
            {DistinctValues(rng, {n, c, h, w})}};
  }
  if (op == "upsample_nearest2x") {
    return {weighted([](const auto& in) { return UpsampleNearest2x(in[0]); }, {n, c, 2 * h, 2 * w}),
            {RandomTensor(rng, {n, c, h, w})}};
  }
  if (op == "concat_channels") {
    const std::size_t c2 = Between(rng, 1, 3);
    return {weighted([](const auto& in) { return ConcatChannels(in[0], in[1]); }, {n, c + c2, h, w}),
            {RandomTensor(rng, {n, c, h, w}), RandomTensor(rng, {n, c2, h, w})}};
  }
  if (op == "slice_channels") {
    const std::size_t total = c + 2;
    const std::size_t begin = rng.Below(total);
    const std::size_t count = Between(rng, 1, total - begin);
    return {weighted([begin, count](const auto& in) { return SliceChannels(in[0], begin, count); },
                     {n, count, h, w}),
            {RandomTensor(rng, {n, total, h, w})}};
  }
  if (op == "relu") {
    return {weighted([](const auto& in) { return Relu(in[0]); }, {n, c, h, w}), {AwayFromZero(rng, {n, c, h, w})}};
  }
  if (op == "sigmoid") {
    return {weighted([](const auto& in) { return Sigmoid(in[0]); }, {n, c, h, w}),
            {RandomTensor(rng, {n, c, h, w}, -4.0, 4.0)}};
  }
  if (op == "flatten") {
    return {weighted([](const auto& in) { return Flatten(in[0]); }, {n, c * h * w}),
            {RandomTensor(rng, {n, c, h, w})}};
  }
  if (op == "linear") {
    const std::size_t f = Between(rng, 1, 6);
    const std::size_t o = Between(rng, 1, 4);
    return {weighted([](const auto& in) { return Linear(in[0], in[1], in[2]); }, {n, o}),
            {RandomTensor(rng, {n, f}), RandomTensor(rng, {o, f}), RandomTensor(rng, {o})}};
  }
  if (op == "bce_loss") {
    return {[](const auto& in) { return BceLoss(in[0], in[1]); },
            {RandomTensor(rng, {n, c, h, w}, 0.05, 0.95), RandomTensor(rng, {n, c, h, w}, 0.0, 1.0)}};
  }
  if (op == "mse_loss") {
    return {[](const auto& in) { return MseLoss(in[0], in[1]); },
            {RandomTensor(rng, {n, c, h, w}), RandomTensor(rng, {n, c, h, w})}};
  }
  throw ConfigError("unknown gradcheck op '" + op + "'");
}

}  // namespace

GradCheckReport GradCheck(const std::string& name, const ScalarFn& fn, const std::vector<TensorD>& inputs, double tol,
                          double step, bool corrupt) {
  GradCheckReport report;
  report.op = name;
  report.instances = 1;
  report.tolerance = tol;

  std::vector<Var<double>> vars;
  for (const TensorD& t : inputs) vars.push_back(Var<double>::Leaf(t, /*requires_grad=*/true));
  Var<double> out = fn(vars);
  if (out.value().size() != 1) throw ShapeError("gradcheck: function must return a scalar");
  out.Backward();

  for (std::size_t k = 0; k < inputs.size(); ++k) {
    TensorD analytic = vars[k].grad();
    if (corrupt && k == 0) analytic[0] = analytic[0] * 1.5 + 0.1;
    std::vector<Var<double>> probe;
    for (const TensorD& t : inputs) probe.push_back(Var<double>::Leaf(t));
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double original = inputs[k][i];
      double plus, minus;
      {
        NoGradGuard no_grad;
        probe[k].mutable_value()[i] = original + step;
        plus = fn(probe).value()[0];
        probe[k].mutable_value()[i] = original - step;
        minus = fn(probe).value()[0];
        probe[k].mutable_value()[i] = original;
      }
      const double numeric = (plus - minus) / (2.0 * step);
      const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
      report.max_rel_error = std::max(report.max_rel_error, std::abs(analytic[i] - numeric) / denom);
      ++report.elements_checked;
    }
  }
  report.passed = report.max_rel_error <= tol;
  return report;
}

const std::vector<std::string>& GradCheckOpNames() {
  static const std::vector<std::string> names = {"conv2d",  "maxpool2d", "upsample_nearest2x", "concat_channels",
                                                 "slice_channels", "relu", "sigmoid", "flatten",
                                                 "linear", "bce_loss", "mse_loss"};
  return names;
}

GradCheckReport RunOpGradCheck(const std::string& op, std::uint64_t seed, std::size_t instances, double tol,
                               bool corrupt) {
  if (std::find(GradCheckOpNames().begin(), GradCheckOpNames().end(), op) == GradCheckOpNames().end()) {
    throw ConfigError("unknown gradcheck op '" + op + "'");
  }
  GradCheckReport total;
  total.op = op;
  total.tolerance = tol;
  Rng rng(seed);
  for (std::size_t i = 0; i < instances; ++i) {
    Instance instance = MakeInstance(op, rng);
    GradCheckReport one = GradCheck(op, instance.fn, instance.inputs, tol, 1e-6, corrupt);
    total.max_rel_error = std::max(total.max_rel_error, one.max_rel_error);
    total.elements_checked += one.elements_checked;
    ++total.instances;
  }
  total.passed = total.max_rel_error <= tol;
  return total;
}

}  // namespace tacmap::nn

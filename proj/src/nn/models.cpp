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

#include "tacmap/nn/models.hpp"

#include <cmath>

#include "tacmap/nn/ops.hpp"
#include "tacmap/rng.hpp"

namespace tacmap::nn {

std::string ArchitectureName(Architecture arch) {
  return arch == Architecture::kUNet ? "unet" : "cnn";
}

Architecture ParseArchitecture(const std::string& name) {
  if (name == "unet") return Architecture::kUNet;
  if (name == "cnn") return Architecture::kCnnBaseline;
  throw ConfigError("unknown architecture '" + name + "' (expected unet or cnn)");
}

void UNetSpec::Validate() const {
  if (in_channels == 0 || base_channels == 0 || depth == 0) throw ConfigError("unet: channels and depth must be >= 1");
  if (resolution % (std::size_t{1} << depth) != 0) {
    throw ConfigError("unet: resolution " + std::to_string(resolution) + " not divisible by 2^" +
                      std::to_string(depth));
  }
}

void CnnBaselineSpec::Validate() const {
  if (in_channels == 0 || hidden == 0 || stage_channels.empty()) throw ConfigError("cnn: empty architecture");
  if (resolution % (std::size_t{1} << stage_channels.size()) != 0) {
    throw ConfigError("cnn: resolution not divisible by 2^stages");
  }
}

void Model::ZeroGrad() {
  for (Parameter& p : params_) p.ZeroGrad();
}

void Model::LoadState(const std::map<std::string, Tensor>& state) {
  if (state.size() != params_.size()) {
    throw ShapeError("checkpoint holds " + std::to_string(state.size()) + " parameters, model has " +
                     std::to_string(params_.size()));
  }
  for (Parameter& p : params_) {
    auto it = state.find(p.name());
    if (it == state.end()) throw ShapeError("checkpoint is missing parameter '" + p.name() + "'");
    if (it->second.shape() != p.value().shape()) {
      throw ShapeError("parameter '" + p.name() + "' has shape " + ShapeToString(it->second.shape()) +
                       ", model expects " + ShapeToString(p.value().shape()));
    }
    p.mutable_value() = it->second;
  }
}

std::map<std::string, Tensor> Model::State() const {
  std::map<std::string, Tensor> state;
  for (const Parameter& p : params_) state.emplace(p.name(), p.value());
  return state;
}

std::size_t Model::AddConv(const std::string& name, std::size_t in, std::size_t out, std::size_t kernel) {
  const std::size_t index = params_.size();
  Tensor weight({out, in, kernel, kernel});
  Rng rng(HashSeed(seed_, index));
  const double scale = std::sqrt(2.0 / static_cast<double>(in * kernel * kernel));
  for (float& w : weight.data()) w = static_cast<float>(rng.Normal() * scale);
  params_.emplace_back(name + ".weight", std::move(weight));
  params_.emplace_back(name + ".bias", Tensor({out}));
  return index;
}

std::size_t Model::AddLinear(const std::string& name, std::size_t in, std::size_t out) {
  const std::size_t index = params_.size();
  Tensor weight({out, in});
  Rng rng(HashSeed(seed_, index));
  const double scale = std::sqrt(2.0 / static_cast<double>(in));
  for (float& w : weight.data()) w = static_cast<float>(rng.Normal() * scale);
  params_.emplace_back(name + ".weight", std::move(weight));
  params_.emplace_back(name + ".bias", Tensor({out}));
  return index;
}

Var<float> Model::ApplyConv(std::size_t index, const Var<float>& x) const {
  return Conv2d(x, params_[index].var(), params_[index + 1].var());
}

Var<float> Model::ApplyLinear(std::size_t index, const Var<float>& x) const {
  return Linear(x, params_[index].var(), params_[index + 1].var());
}

void Model::CheckInput(const Tensor& images) const {
  const Shape& s = images.shape();
  if (s.size() != 4 || s[1] != in_channels() || s[2] != resolution() || s[3] != resolution()) {
    throw ShapeError("model expects input (N," + std::to_string(in_channels()) + "," + std::to_string(resolution()) +
                     "," + std::to_string(resolution()) + "), got " + ShapeToString(s));
  }
}

UNet::UNet(const UNetSpec& spec, std::uint64_t seed) : spec_(spec) {
  spec_.Validate();
  seed_ = seed;
  std::size_t in = spec_.in_channels;
  for (std::size_t l = 0; l < spec_.depth; ++l) {
    const std::size_t c = spec_.base_channels << l;
    const std::string prefix = "enc" + std::to_string(l);
    Level level;
    level.conv0 = AddConv(prefix + ".conv0", in, c, 3);
    level.conv1 = AddConv(prefix + ".conv1", c, c, 3);
    encoder_.push_back(level);
    in = c;
  }
  const std::size_t bottom = spec_.base_channels << spec_.depth;
  bottleneck_.conv0 = AddConv("bottleneck.conv0", in, bottom, 3);
  bottleneck_.conv1 = AddConv("bottleneck.conv1", bottom, bottom, 3);

  decoder_.resize(spec_.depth);
  std::size_t below = bottom;
  for (std::size_t l = spec_.depth; l-- > 0;) {
    const std::size_t c = spec_.base_channels << l;
    const std::string prefix = "dec" + std::to_string(l);
    DecoderLevel& level = decoder_[l];
    level.up = AddConv(prefix + ".up", below, c, 3);
    level.conv0 = AddConv(prefix + ".conv0", 2 * c, c, 3);
    level.conv1 = AddConv(prefix + ".conv1", c, c, 3);
    below = c;
  }
  head_ = AddConv("head", spec_.base_channels, 1, 1);
}

Var<float> UNet::Forward(const Tensor& images) {
  CheckInput(images);
  Var<float> x = Var<float>::Leaf(images);
  std::vector<Var<float>> skips;
  skips.reserve(spec_.depth);
  for (const Level& level : encoder_) {
    x = Relu(ApplyConv(level.conv0, x));
    x = Relu(ApplyConv(level.conv1, x));
    skips.push_back(x);
    x = MaxPool2d(x);
  }
  x = Relu(ApplyConv(bottleneck_.conv0, x));
  x = Relu(ApplyConv(bottleneck_.conv1, x));
  for (std::size_t l = spec_.depth; l-- > 0;) {
    const DecoderLevel& level = decoder_[l];
    x = Relu(ApplyConv(level.up, UpsampleNearest2x(x)));
    x = ConcatChannels(skips[l], x);
    x = Relu(ApplyConv(level.conv0, x));
    x = Relu(ApplyConv(level.conv1, x));
  }
  return Sigmoid(ApplyConv(head_, x));
}

CnnBaseline::CnnBaseline(const CnnBaselineSpec& spec, std::uint64_t seed) : spec_(spec) {
  spec_.Validate();
  seed_ = seed;
  std::size_t in = spec_.in_channels;
  for (std::size_t s = 0; s < spec_.stage_channels.size(); ++s) {
    stages_.push_back(AddConv("stage" + std::to_string(s) + ".conv", in, spec_.stage_channels[s], 3));
    in = spec_.stage_channels[s];
  }
  const std::size_t side = spec_.resolution >> spec_.stage_channels.size();
  hidden_ = AddLinear("fc0", in * side * side, spec_.hidden);
  output_ = AddLinear("fc1", spec_.hidden, CnnBaselineSpec::kOutputs);
}

Var<float> CnnBaseline::Forward(const Tensor& images) {
  CheckInput(images);
  Var<float> x = Var<float>::Leaf(images);
  for (std::size_t stage : stages_) x = MaxPool2d(Relu(ApplyConv(stage, x)));
  x = Relu(ApplyLinear(hidden_, Flatten(x)));
  return ApplyLinear(output_, x);
}

namespace {

const Tensor& Require(const std::map<std::string, Tensor>& state, const std::string& name) {
  auto it = state.find(name);
  if (it == state.end()) throw ShapeError("checkpoint is missing parameter '" + name + "'");
  return it->second;
}

}  // namespace

std::unique_ptr<Model> ModelFromState(const std::map<std::string, Tensor>& state, std::size_t unet_resolution) {
  std::unique_ptr<Model> model;
  if (state.count("head.weight")) {
    UNetSpec spec;
    const Tensor& first = Require(state, "enc0.conv0.weight");
    spec.in_channels = first.dim(1);
    spec.base_channels = first.dim(0);
    spec.depth = 0;
    while (state.count("enc" + std::to_string(spec.depth) + ".conv0.weight")) ++spec.depth;
    spec.resolution = unet_resolution;
    model = std::make_unique<UNet>(spec, 0);
  } else if (state.count("fc1.weight")) {
    CnnBaselineSpec spec;
    spec.stage_channels.clear();
    for (std::size_t s = 0;; ++s) {
      auto it = state.find("stage" + std::to_string(s) + ".conv.weight");
      if (it == state.end()) break;
      if (s == 0) spec.in_channels = it->second.dim(1);
      spec.stage_channels.push_back(it->second.dim(0));
    }
    if (spec.stage_channels.empty()) throw ShapeError("checkpoint has no convolution stages");
    const Tensor& fc0 = Require(state, "fc0.weight");
    spec.hidden = fc0.dim(0);
    const std::size_t per_pixel = spec.stage_channels.back();
    if (fc0.dim(1) % per_pixel != 0) throw ShapeError("fc0 input width inconsistent with last stage");
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(double(fc0.dim(1) / per_pixel))));
    if (side * side * per_pixel != fc0.dim(1)) throw ShapeError("fc0 input width is not a square feature map");
    spec.resolution = side << spec.stage_channels.size();
    model = std::make_unique<CnnBaseline>(spec, 0);
  } else {
    throw ShapeError("checkpoint matches no known architecture");
  }
  model->LoadState(state);
  return model;
}

}  // namespace tacmap::nn

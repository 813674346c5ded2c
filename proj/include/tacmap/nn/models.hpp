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
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tacmap/nn/optim.hpp"

namespace tacmap::nn {

enum class Architecture { kUNet, kCnnBaseline };

std::string ArchitectureName(Architecture arch);
Architecture ParseArchitecture(const std::string& name);

struct UNetSpec {
  std::size_t in_channels = 1;
  std::size_t base_channels = 16;
  std::size_t depth = 3;
  std::size_t resolution = 64;

  void Validate() const;
};

struct CnnBaselineSpec {
  std::size_t in_channels = 1;
  std::size_t resolution = 64;
  // One [3x3 conv, ReLU, 2x2 max-pool] stage per entry.
  std::vector<std::size_t> stage_channels = {8, 16, 32};
  std::size_t hidden = 64;
  static constexpr std::size_t kOutputs = 3;

  void Validate() const;
};

// Parameters are stored in a fixed construction order; names are unique and
// stable, so checkpoints and initialization are reproducible.
class Model {
 public:
  virtual ~Model() = default;

  virtual Architecture architecture() const = 0;
  virtual std::size_t in_channels() const = 0;
  virtual std::size_t resolution() const = 0;

  // images (N, C, R, R). U-Net returns (N,1,R,R) in (0,1); the baseline
  // returns (N,3) = (x_mm, y_mm, depth_mm).
  virtual Var<float> Forward(const Tensor& images) = 0;

  std::vector<Parameter>& parameters() noexcept { return params_; }
  const std::vector<Parameter>& parameters() const noexcept { return params_; }

  void ZeroGrad();

  // Replaces every parameter value. Names and shapes must match exactly.
  void LoadState(const std::map<std::string, Tensor>& state);
  std::map<std::string, Tensor> State() const;

 protected:
  // He-normal weights, zero bias. Returns the index of the weight parameter.
  std::size_t AddConv(const std::string& name, std::size_t in, std::size_t out, std::size_t kernel);
  std::size_t AddLinear(const std::string& name, std::size_t in, std::size_t out);
  Var<float> ApplyConv(std::size_t index, const Var<float>& x) const;
  Var<float> ApplyLinear(std::size_t index, const Var<float>& x) const;

  void CheckInput(const Tensor& images) const;

  std::uint64_t seed_ = 0;
  std::vector<Parameter> params_;
};

class UNet final : public Model {
 public:
  UNet(const UNetSpec& spec, std::uint64_t seed);

  Architecture architecture() const override { return Architecture::kUNet; }
  std::size_t in_channels() const override { return spec_.in_channels; }
  std::size_t resolution() const override { return spec_.resolution; }
  const UNetSpec& spec() const noexcept { return spec_; }

  Var<float> Forward(const Tensor& images) override;

 private:
  struct Level {
    std::size_t conv0, conv1;
  };
  struct DecoderLevel {
    std::size_t up, conv0, conv1;
  };

  UNetSpec spec_;
  std::vector<Level> encoder_;
  Level bottleneck_{};
  std::vector<DecoderLevel> decoder_;  // decoder_[l] mirrors encoder_[l]
  std::size_t head_ = 0;
};

class CnnBaseline final : public Model {
 public:
  CnnBaseline(const CnnBaselineSpec& spec, std::uint64_t seed);

  Architecture architecture() const override { return Architecture::kCnnBaseline; }
  std::size_t in_channels() const override { return spec_.in_channels; }
  std::size_t resolution() const override { return spec_.resolution; }
  const CnnBaselineSpec& spec() const noexcept { return spec_; }

  Var<float> Forward(const Tensor& images) override;

 private:
  CnnBaselineSpec spec_;
  std::vector<std::size_t> stages_;
  std::size_t hidden_ = 0;
  std::size_t output_ = 0;
};

// Rebuilds the model a checkpoint belongs to from its parameter names and
// shapes, then loads the values. U-Net weights do not fix the input size, so
// a U-Net takes `unet_resolution`; the baseline's size follows from fc0.
std::unique_ptr<Model> ModelFromState(const std::map<std::string, Tensor>& state, std::size_t unet_resolution = 64);

}  // namespace tacmap::nn

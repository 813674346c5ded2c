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

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "tacmap/nn/models.hpp"
#include "tacmap/sim/simulator.hpp"
#include "tacmap/train/eval.hpp"
#include "tacmap/train/trainer.hpp"

namespace tacmap::cli {

struct ModelConfig {
  std::string arch = "unet";
  std::size_t base_channels = 16;
  std::size_t depth = 3;
  std::vector<std::size_t> cnn_stage_channels = {8, 16, 32};
  std::size_t cnn_hidden = 64;
};

struct EvalConfig {
  codec::PeakOptions peaks;
  std::size_t batch_size = 16;
};

// Every field is optional; a missing section or key keeps its default.
// Sections: sim, sampler, kernel, mapping, model, train, eval.
struct RunConfig {
  sim::SimConfig sim;
  sim::SamplerConfig sampler;
  codec::KernelParams kernel;
  codec::GridMapping mapping;
  ModelConfig model;
  train::TrainConfig train;
  EvalConfig eval;

  static RunConfig FromJson(const nlohmann::json& json);
  static RunConfig Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;
  void Validate() const;

  sim::SensorModel sensor() const { return {sim, sampler, kernel, mapping}; }
};

// Fresh, seeded model of the configured architecture sized for the given input.
std::unique_ptr<nn::Model> BuildModel(const ModelConfig& config, std::size_t in_channels, std::size_t resolution,
                                      std::uint64_t seed);

}  // namespace tacmap::cli

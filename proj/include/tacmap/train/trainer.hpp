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
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tacmap/nn/models.hpp"
#include "tacmap/sim/dataset.hpp"

namespace tacmap::train {

struct TrainConfig {
  double lr = 3e-4;
  std::size_t batch_size = 8;
  std::size_t max_epochs = 50;
  std::size_t early_stop_patience = 10;
  double split_ratio = 0.8;
  std::uint64_t seed = 0;

  void Validate() const;
};

nlohmann::json ToJson(const TrainConfig& config);
void FromJson(const nlohmann::json& json, TrainConfig& config);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Seeded shuffle of [0, n), first round(ratio * n) indices train. Each part
// keeps at least one element.
Split SplitDataset(std::size_t n, double ratio, std::uint64_t seed);

std::vector<const sim::Sample*> Select(const std::vector<sim::Sample>& samples, const std::vector<std::size_t>& indices);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> curve;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
};

// Stacks sample images into (N, C, H, W).
nn::Tensor StackImages(std::span<const sim::Sample* const> batch);
// U-Net target: (N, 1, R, R) heatmaps. Baseline target: (N, 3) contact
// (x, y, depth); every sample must hold exactly one contact.
nn::Tensor StackTargets(nn::Architecture arch, std::span<const sim::Sample* const> batch);

// Loss the architecture trains on: BCE for the U-Net, MSE for the baseline.
nn::Var<float> ModelLoss(nn::Model& model, std::span<const sim::Sample* const> batch);

// Mean per-sample loss without recording a tape.
double EvaluateLoss(nn::Model& model, std::span<const sim::Sample* const> samples, std::size_t batch_size);

// Adam on minibatches in a seed-determined order, early stopping on the
// validation loss. On return the model holds the best-validation weights.
TrainResult Train(nn::Model& model, std::span<const sim::Sample* const> train_set,
                  std::span<const sim::Sample* const> val_set, const TrainConfig& config,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

// `epoch,train_loss,val_loss`
std::string LossCurveToCsv(const std::vector<EpochStats>& curve);

}  // namespace tacmap::train

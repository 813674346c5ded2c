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

#include "tacmap/train/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "tacmap/json_fields.hpp"
#include "tacmap/nn/ops.hpp"

namespace tacmap::train {

void TrainConfig::Validate() const {
  if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("train: split_ratio must lie in (0, 1)");
  if (!(lr > 0.0)) throw ConfigError("train: learning rate must be positive");
  if (max_epochs == 0) throw ConfigError("train: max_epochs must be >= 1");
}

nlohmann::json ToJson(const TrainConfig& config) {
  return {{"lr", config.lr},
          {"batch_size", config.batch_size},
          {"max_epochs", config.max_epochs},
          {"early_stop_patience", config.early_stop_patience},
          {"split_ratio", config.split_ratio},
          {"seed", config.seed}};
}

void FromJson(const nlohmann::json& json, TrainConfig& config) {
  JsonFields fields(json, "train");
  fields.Get("lr", config.lr);
  fields.Get("batch_size", config.batch_size);
  fields.Get("max_epochs", config.max_epochs);
  fields.Get("early_stop_patience", config.early_stop_patience);
  fields.Get("split_ratio", config.split_ratio);
  fields.Get("seed", config.seed);
  fields.Finish();
}

Split SplitDataset(std::size_t n, double ratio, std::uint64_t seed) {
  if (n < 2) throw ConfigError("cannot split a dataset with fewer than two samples");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(HashSeed(seed, 0x5D11));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.Below(i)]);
  auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  Split split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return split;
}

std::vector<const sim::Sample*> Select(const std::vector<sim::Sample>& samples, const std::vector<std::size_t>& indices) {
  std::vector<const sim::Sample*> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(&samples.at(i));
  return out;
}

nn::Tensor StackImages(std::span<const sim::Sample* const> batch) {
  if (batch.empty()) throw ShapeError("empty batch");
  const nn::Shape& s = batch.front()->image.shape();
  if (s.size() != 3) throw ShapeError("sample image must be (C,H,W), got " + nn::ShapeToString(s));
  nn::Tensor out({batch.size(), s[0], s[1], s[2]});
  const std::size_t stride = batch.front()->image.size();
  for (std::size_t n = 0; n < batch.size(); ++n) {
    if (batch[n]->image.shape() != s) throw ShapeError("images in a batch differ in shape");
    std::copy_n(batch[n]->image.ptr(), stride, out.ptr() + n * stride);
  }
  return out;
}

nn::Tensor StackTargets(nn::Architecture arch, std::span<const sim::Sample* const> batch) {
  if (arch == nn::Architecture::kUNet) {
    const std::size_t r = batch.front()->heatmap.resolution();
    nn::Tensor out({batch.size(), 1, r, r});
    for (std::size_t n = 0; n < batch.size(); ++n) {
      auto values = batch[n]->heatmap.values();
      if (values.size() != r * r) throw ShapeError("heatmaps in a batch differ in resolution");
      std::copy(values.begin(), values.end(), out.ptr() + n * r * r);
    }
    return out;
  }
  nn::Tensor out({batch.size(), nn::CnnBaselineSpec::kOutputs});
  for (std::size_t n = 0; n < batch.size(); ++n) {
    if (batch[n]->contacts.size() != 1) {
      throw ShapeError("regression baseline needs single-contact samples; sample " +
                       std::to_string(batch[n]->index) + " has " + std::to_string(batch[n]->contacts.size()));
    }
    const codec::ContactPoint& c = batch[n]->contacts.front();
    out[3 * n + 0] = static_cast<float>(c.x_mm);
    out[3 * n + 1] = static_cast<float>(c.y_mm);
    out[3 * n + 2] = static_cast<float>(c.depth_mm);
  }
  return out;
}

nn::Var<float> ModelLoss(nn::Model& model, std::span<const sim::Sample* const> batch) {
  nn::Var<float> pred = model.Forward(StackImages(batch));
  nn::Var<float> target = nn::Var<float>::Leaf(StackTargets(model.architecture(), batch));
  return model.architecture() == nn::Architecture::kUNet ? nn::BceLoss(pred, target) : nn::MseLoss(pred, target);
}

double EvaluateLoss(nn::Model& model, std::span<const sim::Sample* const> samples, std::size_t batch_size) {
  nn::NoGradGuard no_grad;
  double total = 0.0;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const auto batch = samples.subspan(start, std::min(batch_size, samples.size() - start));
    total += static_cast<double>(ModelLoss(model, batch).value()[0]) * static_cast<double>(batch.size());
  }
  return samples.empty() ? 0.0 : total / static_cast<double>(samples.size());
}

TrainResult Train(nn::Model& model, std::span<const sim::Sample* const> train_set,
                  std::span<const sim::Sample* const> val_set, const TrainConfig& config,
                  const std::function<void(const EpochStats&)>& on_epoch) {
  config.Validate();
  if (train_set.empty()) throw ConfigError("training set is empty");
  if (val_set.empty()) throw ConfigError("validation set is empty");

  const nn::AdamConfig adam{.lr = config.lr};
  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  std::map<std::string, nn::Tensor> best_state = model.State();
  std::size_t stale_epochs = 0;

  std::vector<const sim::Sample*> order(train_set.begin(), train_set.end());
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng rng(HashSeed(config.seed, epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.Below(i)]);

    double train_total = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::span<const sim::Sample* const> batch(order.data() + start,
                                                      std::min(config.batch_size, order.size() - start));
      model.ZeroGrad();
      nn::Var<float> loss = ModelLoss(model, batch);
      const double value = loss.value()[0];
      if (!std::isfinite(value)) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));
      }
      loss.Backward();
      for (nn::Parameter& p : model.parameters()) AdamStep(p, adam);
      train_total += value * static_cast<double>(batch.size());
    }

    EpochStats stats{epoch, train_total / static_cast<double>(order.size()),
                     EvaluateLoss(model, val_set, config.batch_size)};
    if (!std::isfinite(stats.val_loss)) {
      throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    result.curve.push_back(stats);
    if (on_epoch) on_epoch(stats);

    if (stats.val_loss < result.best_val_loss) {
      result.best_val_loss = stats.val_loss;
      result.best_epoch = epoch;
      best_state = model.State();
      stale_epochs = 0;
    } else if (++stale_epochs > config.early_stop_patience) {
      result.stopped_early = true;
      break;
    }
  }
  model.LoadState(best_state);
  return result;
}

std::string LossCurveToCsv(const std::vector<EpochStats>& curve) {
  std::string out = "epoch,train_loss,val_loss\n";
  char line[96];
  for (const EpochStats& e : curve) {
    std::snprintf(line, sizeof(line), "%zu,%.9g,%.9g\n", e.epoch, e.train_loss, e.val_loss);
    out += line;
  }
  return out;
}

}  // namespace tacmap::train

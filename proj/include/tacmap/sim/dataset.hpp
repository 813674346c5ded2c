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
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tacmap/sim/simulator.hpp"

namespace tacmap::sim {

enum class ScenarioKind { kSingle, kDual, kTriple, kDualSweep, kEmpty };

std::string ScenarioKindName(ScenarioKind kind);
ScenarioKind ParseScenarioKind(const std::string& name);

// How many samples of each contact scenario a dataset holds. Samples are laid
// out in the member order below. `dual_sweep` counts trials per separation,
// so it contributes 12 * dual_sweep samples.
struct ScenarioSpec {
  std::size_t single = 0;
  std::size_t dual = 0;
  std::size_t triple = 0;
  std::size_t dual_sweep = 0;
  std::size_t empty = 0;

  std::size_t total() const { return single + dual + triple + 12 * dual_sweep + empty; }
  ScenarioKind KindOf(std::size_t index) const;

  // "single:5000,dual:1000,triple:1000"
  static ScenarioSpec Parse(const std::string& text);
  std::string ToString() const;
};

struct Sample {
  std::size_t index = 0;
  ScenarioKind kind = ScenarioKind::kSingle;
  std::uint64_t seed = 0;
  // Nominal indenter separation for dual samples, 0 otherwise.
  double separation_mm = 0.0;
  nn::Tensor image;  // (C, H, W)
  ContactSet contacts;
  codec::HeatmapGrid heatmap;
};

// Pure function of its arguments; sample `index` uses only
// Rng(HashSeed(master_seed, index)).
Sample GenerateSample(std::size_t index, std::uint64_t master_seed, const ScenarioSpec& scenario,
                      const SensorModel& model);

std::vector<Sample> GenerateSamples(std::uint64_t master_seed, const ScenarioSpec& scenario, const SensorModel& model,
                                    std::size_t threads = 1);

struct Dataset {
  std::uint64_t master_seed = 0;
  ScenarioSpec scenario;
  SensorModel model;
  nlohmann::json run_config;  // provenance echo, may be null
  std::vector<Sample> samples;
};

// Writes <root>/manifest.json and <root>/samples/<idx>.{img.tvt,hm.tvt,labels.csv}.
// Output bytes do not depend on `threads`.
void BuildDataset(const std::filesystem::path& root, std::uint64_t master_seed, const ScenarioSpec& scenario,
                  const SensorModel& model, std::size_t threads = 1, const nlohmann::json& run_config = nullptr);

// Reads a dataset back. A sample without a heatmap file is re-encoded from its
// labels, which is how externally captured images are ingested.
Dataset LoadDataset(const std::filesystem::path& root);

std::string SampleStem(std::size_t index);
std::string LabelsToCsv(const ContactSet& contacts);
ContactSet LabelsFromCsv(const std::string& text);

}  // namespace tacmap::sim

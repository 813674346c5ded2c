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

#include "tacmap/cli/run_config.hpp"

#include "tacmap/codec/codec_config.hpp"
#include "tacmap/io/tensor_file.hpp"
#include "tacmap/json_fields.hpp"

namespace tacmap::cli {

RunConfig RunConfig::FromJson(const nlohmann::json& json) {
  RunConfig config;
  JsonFields top(json, "config");
  nlohmann::json sim = nlohmann::json::object(), sampler = nlohmann::json::object();
  nlohmann::json kernel = nlohmann::json::object(), mapping = nlohmann::json::object();
  nlohmann::json model = nlohmann::json::object(), train = nlohmann::json::object();
  nlohmann::json eval = nlohmann::json::object();
  top.Get("sim", sim);
  top.Get("sampler", sampler);
  top.Get("kernel", kernel);
  top.Get("mapping", mapping);
  top.Get("model", model);
  top.Get("train", train);
  top.Get("eval", eval);
  top.Finish();

  sim::FromJson(sim, config.sim);
  sim::FromJson(sampler, config.sampler);
  codec::FromJson(kernel, config.kernel);
  codec::FromJson(mapping, config.mapping);
  train::FromJson(train, config.train);

  JsonFields m(model, "model");
  m.Get("arch", config.model.arch);
  m.Get("base_channels", config.model.base_channels);
  m.Get("depth", config.model.depth);
  m.Get("cnn_stage_channels", config.model.cnn_stage_channels);
  m.Get("cnn_hidden", config.model.cnn_hidden);
  m.Finish();

  JsonFields e(eval, "eval");
  nlohmann::json peaks = nlohmann::json::object();
  e.Get("peaks", peaks);
  e.Get("batch_size", config.eval.batch_size);
  e.Finish();
  codec::FromJson(peaks, config.eval.peaks);

  config.Validate();
  return config;
}

RunConfig RunConfig::Load(const std::filesystem::path& path) {
  nlohmann::json json;
  try {
    json = nlohmann::json::parse(io::ReadTextFile(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return FromJson(json);
}

nlohmann::json RunConfig::ToJson() const {
  return {{"sim", sim::ToJson(sim)},
          {"sampler", sim::ToJson(sampler)},
          {"kernel", codec::ToJson(kernel)},
          {"mapping", codec::ToJson(mapping)},
          {"model",
           {{"arch", model.arch},
            {"base_channels", model.base_channels},
            {"depth", model.depth},
            {"cnn_stage_channels", model.cnn_stage_channels},
            {"cnn_hidden", model.cnn_hidden}}},
          {"train", train::ToJson(train)},
          {"eval", {{"peaks", codec::ToJson(eval.peaks)}, {"batch_size", eval.batch_size}}}};
}

void RunConfig::Validate() const {
  sensor().Validate();
  train.Validate();
  nn::ParseArchitecture(model.arch);
  if (eval.batch_size == 0) throw ConfigError("eval: batch_size must be >= 1");
}

std::unique_ptr<nn::Model> BuildModel(const ModelConfig& config, std::size_t in_channels, std::size_t resolution,
                                      std::uint64_t seed) {
  if (nn::ParseArchitecture(config.arch) == nn::Architecture::kUNet) {
    nn::UNetSpec spec;
    spec.in_channels = in_channels;
    spec.base_channels = config.base_channels;
    spec.depth = config.depth;
    spec.resolution = resolution;
    return std::make_unique<nn::UNet>(spec, seed);
  }
  nn::CnnBaselineSpec spec;
  spec.in_channels = in_channels;
  spec.resolution = resolution;
  spec.stage_channels = config.cnn_stage_channels;
  spec.hidden = config.cnn_hidden;
  return std::make_unique<nn::CnnBaseline>(spec, seed);
}

}  // namespace tacmap::cli

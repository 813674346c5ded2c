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

#include "tacmap/codec/codec_config.hpp"

#include "tacmap/json_fields.hpp"

namespace tacmap::codec {

nlohmann::json ToJson(const KernelParams& params) {
  return {{"indenter_radius_mm", params.indenter_radius_mm},
          {"sigma_blur_mm", params.sigma_blur_mm},
          {"d_max_mm", params.d_max_mm}};
}

nlohmann::json ToJson(const GridMapping& mapping) {
  return {{"resolution", mapping.resolution}, {"workspace_side_mm", mapping.workspace_side_mm}};
}

nlohmann::json ToJson(const PeakOptions& options) {
  return {{"threshold", options.threshold},
          {"footprint", options.footprint},
          {"min_separation_px", options.min_separation_px}};
}

void FromJson(const nlohmann::json& json, KernelParams& params) {
  JsonFields fields(json, "kernel");
  fields.Get("indenter_radius_mm", params.indenter_radius_mm);
  fields.Get("sigma_blur_mm", params.sigma_blur_mm);
  fields.Get("d_max_mm", params.d_max_mm);
  fields.Finish();
  params.Validate();
}

void FromJson(const nlohmann::json& json, GridMapping& mapping) {
  JsonFields fields(json, "mapping");
  fields.Get("resolution", mapping.resolution);
  fields.Get("workspace_side_mm", mapping.workspace_side_mm);
  fields.Finish();
  mapping.Validate();
}

void FromJson(const nlohmann::json& json, PeakOptions& options) {
  JsonFields fields(json, "peaks");
  fields.Get("threshold", options.threshold);
  fields.Get("footprint", options.footprint);
  fields.Get("min_separation_px", options.min_separation_px);
  fields.Finish();
  if (!(options.threshold > 0.0 && options.threshold < 1.0)) throw ConfigError("peak threshold must lie in (0, 1)");
  if (options.footprint % 2 == 0) throw ConfigError("peak footprint must be odd");
}

}  // namespace tacmap::codec

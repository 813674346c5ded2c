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

#include "json.hpp"
#include "tacmap/codec/heatmap.hpp"

namespace tacmap::codec {

nlohmann::json ToJson(const KernelParams& params);
nlohmann::json ToJson(const GridMapping& mapping);
nlohmann::json ToJson(const PeakOptions& options);

// Missing fields keep their current value; unknown fields throw ConfigError.
void FromJson(const nlohmann::json& json, KernelParams& params);
void FromJson(const nlohmann::json& json, GridMapping& mapping);
void FromJson(const nlohmann::json& json, PeakOptions& options);

}  // namespace tacmap::codec

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

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "tacmap/nn/models.hpp"

namespace tacmap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitMissingInput = 2;
inline constexpr int kExitShapeMismatch = 3;
inline constexpr int kExitFormatCorruption = 4;

// Maps an exception escaping a command to the process exit code.
int ExitCodeFor(const std::exception& e);

// Parameters in construction order, as TVM1.
void SaveModel(const std::filesystem::path& path, const nn::Model& model);
// Accepts a checkpoint file or a training output directory holding model.tvm.
// `resolution` is the grid a U-Net will run on.
std::unique_ptr<nn::Model> LoadModel(const std::filesystem::path& path, std::size_t resolution);

// Entry point shared by the executable and the tests. `args` excludes the
// program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tacmap::cli

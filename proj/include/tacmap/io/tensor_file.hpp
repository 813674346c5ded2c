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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tacmap/nn/tensor.hpp"

// Fixed little-endian binary containers.
//
// Tensor file:
//   "TVT1" | u8 dtype (1 = f32) | u8 ndim | ndim x u32 extent | f32 payload
// Checkpoint file:
//   "TVM1" | u32 count | count x (u16 name_len | name | u8 ndim |
//                                 ndim x u32 extent | f32 payload)
namespace tacmap::io {

using NamedTensors = std::vector<std::pair<std::string, nn::Tensor>>;

inline constexpr std::uint8_t kDtypeF32 = 1;

std::vector<std::uint8_t> EncodeTensor(const nn::Tensor& tensor);
nn::Tensor DecodeTensor(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> EncodeCheckpoint(const NamedTensors& params);
NamedTensors DecodeCheckpoint(std::span<const std::uint8_t> bytes);

void SaveTensor(const std::filesystem::path& path, const nn::Tensor& tensor);
nn::Tensor LoadTensor(const std::filesystem::path& path);

void SaveCheckpoint(const std::filesystem::path& path, const NamedTensors& params);
NamedTensors LoadCheckpoint(const std::filesystem::path& path);

// Whole-file helpers. Missing files raise MissingInputError.
std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, const std::string& text);

}  // namespace tacmap::io

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

#include "tacmap/nn/autograd.hpp"

// Differentiable operators. Each op is a pure function of its inputs and
// records an exact reverse rule on the tape. All ops are instantiated for
// float (training) and double (gradient checking, reference oracles).
namespace tacmap::nn {

inline constexpr double kBceEpsilon = 1e-7;

// Stride-1 convolution with zero "same" padding. input (N,C,H,W), weight
// (O,C,K,K) with K odd, bias (O).
template <typename T>
Var<T> Conv2d(const Var<T>& input, const Var<T>& weight, const Var<T>& bias);

// 2x2 window, stride 2. Ties route the gradient to the first maximum in
// row-major window order.
template <typename T>
Var<T> MaxPool2d(const Var<T>& input);

template <typename T>
Var<T> UpsampleNearest2x(const Var<T>& input);

// Channel concatenation. An undefined operand acts as the empty tensor.
template <typename T>
Var<T> ConcatChannels(const Var<T>& a, const Var<T>& b);

// Channels [begin, begin + count) of an NCHW tensor.
template <typename T>
Var<T> SliceChannels(const Var<T>& input, std::size_t begin, std::size_t count);

template <typename T>
Var<T> Relu(const Var<T>& x);

template <typename T>
Var<T> Sigmoid(const Var<T>& x);

// (N, ...) -> (N, prod(...)).
template <typename T>
Var<T> Flatten(const Var<T>& x);

// input (N,F), weight (O,F), bias (O) -> (N,O).
template <typename T>
Var<T> Linear(const Var<T>& input, const Var<T>& weight, const Var<T>& bias);

// -mean(t ln p + (1-t) ln(1-p)) with p clamped to [eps, 1-eps]. Returns a
// one-element tensor.
template <typename T>
Var<T> BceLoss(const Var<T>& pred, const Var<T>& target);

template <typename T>
Var<T> MseLoss(const Var<T>& pred, const Var<T>& target);

// Direct nested-loop convolution without the GEMM lowering. Reference for
// tests; not differentiable.
template <typename T>
BasicTensor<T> Conv2dReference(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                               const BasicTensor<T>& bias);

}  // namespace tacmap::nn

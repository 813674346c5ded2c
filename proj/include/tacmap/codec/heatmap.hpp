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

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tacmap/nn/tensor.hpp"

namespace tacmap::codec {

// One indentation: planar position and depth along -z, all in mm.
struct ContactPoint {
  double x_mm = 0.0;
  double y_mm = 0.0;
  double depth_mm = 0.0;

  friend bool operator==(const ContactPoint&, const ContactPoint&) = default;
};

using ContactSet = std::vector<ContactPoint>;

struct KernelParams {
  double indenter_radius_mm = 3.0;
  double sigma_blur_mm = 2.0;
  double d_max_mm = 6.0;

  void Validate() const;
};

// Square workspace sampled on a resolution x resolution pixel grid. Pixel
// (row i, col j) has its center at x = (j + 0.5) * pitch - L/2,
// y = (i + 0.5) * pitch - L/2.
struct GridMapping {
  std::size_t resolution = 64;
  double workspace_side_mm = 32.0;

  double pixel_pitch_mm() const { return workspace_side_mm / static_cast<double>(resolution); }
  double half_side_mm() const { return workspace_side_mm / 2.0; }
  bool Contains(double x_mm, double y_mm) const;

  void Validate() const;
};

// Continuous pixel coordinates; integer values are pixel centers.
struct PixelCoord {
  double row = 0.0;
  double col = 0.0;
};

PixelCoord MmToPx(const GridMapping& mapping, double x_mm, double y_mm);
std::pair<double, double> PxToMm(const GridMapping& mapping, double row, double col);

// Row-major resolution x resolution values in [0, 1].
class HeatmapGrid {
 public:
  explicit HeatmapGrid(GridMapping mapping = {});
  HeatmapGrid(GridMapping mapping, std::vector<float> values);

  const GridMapping& mapping() const noexcept { return mapping_; }
  std::size_t resolution() const noexcept { return mapping_.resolution; }
  float at(std::size_t row, std::size_t col) const { return values_[row * mapping_.resolution + col]; }
  float& at(std::size_t row, std::size_t col) { return values_[row * mapping_.resolution + col]; }
  std::span<const float> values() const noexcept { return values_; }
  std::span<float> values() noexcept { return values_; }

  // (1, R, R) view for persistence and as a training target.
  nn::Tensor ToTensor() const;
  // Accepts (R,R), (1,R,R) or (1,1,R,R).
  static HeatmapGrid FromTensor(const nn::Tensor& tensor, GridMapping mapping);

  friend bool operator==(const HeatmapGrid& a, const HeatmapGrid& b) { return a.values_ == b.values_; }

 private:
  GridMapping mapping_;
  std::vector<float> values_;
};

struct PeakDetection {
  double x_mm = 0.0;
  double y_mm = 0.0;
  double depth_mm = 0.0;
  // Raw grid value at the local maximum.
  double peak_value = 0.0;
  std::size_t row = 0;
  std::size_t col = 0;
};

struct PeakOptions {
  double threshold = 0.06;
  std::size_t footprint = 5;
  double min_separation_px = 3.0;
};

// Hertzian contact radius a = sqrt(R d).
double HertzContactRadius(double radius_mm, double depth_mm);

// sqrt((a/3)^2 + sigma_blur^2) with a the Hertzian contact radius.
double KernelSigma(double depth_mm, const KernelParams& params);

// Per contact: (d / d_max) * exp(-|p - c|^2 / (2 sigma^2)) at each pixel
// center; several contacts combine by pixelwise maximum.
HeatmapGrid EncodeHeatmap(const ContactSet& contacts, const GridMapping& mapping, const KernelParams& params);

double DepthFromValue(double value, double d_max_mm);

struct SubpixelOffset {
  double d_row = 0.0;
  double d_col = 0.0;
  // Vertex height of the fitted parabolas.
  double refined_value = 0.0;
};

// Separable three-point quadratic fit around (row, col). Border pixels return
// a zero offset and the raw value.
SubpixelOffset RefineSubpixel(const HeatmapGrid& heatmap, std::size_t row, std::size_t col);

// Maximum-filter peak picking followed by sub-pixel refinement and depth
// scaling. Sorted by descending peak value.
std::vector<PeakDetection> ExtractPeaks(const HeatmapGrid& heatmap, const KernelParams& params,
                                        const PeakOptions& options = {});

// `x_mm,y_mm,depth_mm,peak_value` with 6 decimals, header included.
std::string PeaksToCsv(const std::vector<PeakDetection>& peaks);

}  // namespace tacmap::codec

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

#include "tacmap/codec/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace tacmap::codec {

void KernelParams::Validate() const {
  if (!(indenter_radius_mm > 0.0) || !(sigma_blur_mm > 0.0) || !(d_max_mm > 0.0)) {
    throw ConfigError("kernel parameters must be strictly positive");
  }
}

void GridMapping::Validate() const {
  if (resolution == 0 || !(workspace_side_mm > 0.0)) throw ConfigError("grid mapping must have positive extent");
}

bool GridMapping::Contains(double x_mm, double y_mm) const {
  const double half = half_side_mm();
  return x_mm >= -half && x_mm <= half && y_mm >= -half && y_mm <= half;
}

PixelCoord MmToPx(const GridMapping& mapping, double x_mm, double y_mm) {
  if (!mapping.Contains(x_mm, y_mm)) {
    throw DomainError("point (" + std::to_string(x_mm) + ", " + std::to_string(y_mm) + ") mm is outside the workspace");
  }
  const double pitch = mapping.pixel_pitch_mm();
  return {(y_mm + mapping.half_side_mm()) / pitch - 0.5, (x_mm + mapping.half_side_mm()) / pitch - 0.5};
}

std::pair<double, double> PxToMm(const GridMapping& mapping, double row, double col) {
  const double limit = static_cast<double>(mapping.resolution) - 0.5;
  if (row < -0.5 || col < -0.5 || row > limit || col > limit) {
    throw DomainError("pixel coordinate outside the grid");
  }
  const double pitch = mapping.pixel_pitch_mm();
  return {(col + 0.5) * pitch - mapping.half_side_mm(), (row + 0.5) * pitch - mapping.half_side_mm()};
}

HeatmapGrid::HeatmapGrid(GridMapping mapping)
    : mapping_(mapping), values_(mapping.resolution * mapping.resolution, 0.0f) {}

HeatmapGrid::HeatmapGrid(GridMapping mapping, std::vector<float> values)
    : mapping_(mapping), values_(std::move(values)) {
  if (values_.size() != mapping_.resolution * mapping_.resolution) {
    throw ShapeError("heatmap needs " + std::to_string(mapping_.resolution * mapping_.resolution) + " values, got " +
                     std::to_string(values_.size()));
  }
}

nn::Tensor HeatmapGrid::ToTensor() const {
  return nn::Tensor({1, mapping_.resolution, mapping_.resolution}, values_);
}

HeatmapGrid HeatmapGrid::FromTensor(const nn::Tensor& tensor, GridMapping mapping) {
  const nn::Shape& s = tensor.shape();
  const std::size_t r = mapping.resolution;
  const bool ok = (s == nn::Shape{r, r}) || (s == nn::Shape{1, r, r}) || (s == nn::Shape{1, 1, r, r});
  if (!ok) throw ShapeError("heatmap tensor " + nn::ShapeToString(s) + " does not match a " + std::to_string(r) + "x" +
                            std::to_string(r) + " grid");
  return HeatmapGrid(mapping, std::vector<float>(tensor.data().begin(), tensor.data().end()));
}

double HertzContactRadius(double radius_mm, double depth_mm) {
  if (!(radius_mm > 0.0)) throw DomainError("indenter radius must be positive");
  if (depth_mm < 0.0 || std::isnan(depth_mm)) throw DomainError("indentation depth must be non-negative");
  return std::sqrt(radius_mm * depth_mm);
}

double KernelSigma(double depth_mm, const KernelParams& params) {
  const double sigma_contact = HertzContactRadius(params.indenter_radius_mm, depth_mm) / 3.0;
  return std::sqrt(sigma_contact * sigma_contact + params.sigma_blur_mm * params.sigma_blur_mm);
}

HeatmapGrid EncodeHeatmap(const ContactSet& contacts, const GridMapping& mapping, const KernelParams& params) {
  HeatmapGrid heatmap(mapping);
  const std::size_t r = mapping.resolution;
  const double pitch = mapping.pixel_pitch_mm();
  const double half = mapping.half_side_mm();
  for (const ContactPoint& c : contacts) {
    if (!mapping.Contains(c.x_mm, c.y_mm)) {
      throw DomainError("contact (" + std::to_string(c.x_mm) + ", " + std::to_string(c.y_mm) +
                        ") mm is outside the workspace");
    }
    if (c.depth_mm < 0.0 || c.depth_mm > params.d_max_mm) {
      throw DomainError("contact depth " + std::to_string(c.depth_mm) + " mm outside [0, d_max]");
    }
    const double amplitude = c.depth_mm / params.d_max_mm;
    const double sigma = KernelSigma(c.depth_mm, params);
    const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t i = 0; i < r; ++i) {
      const double dy = (static_cast<double>(i) + 0.5) * pitch - half - c.y_mm;
      for (std::size_t j = 0; j < r; ++j) {
        const double dx = (static_cast<double>(j) + 0.5) * pitch - half - c.x_mm;
        const auto value = static_cast<float>(amplitude * std::exp(-(dx * dx + dy * dy) * inv_two_var));
        float& cell = heatmap.at(i, j);
        cell = std::max(cell, value);
      }
    }
  }
  return heatmap;
}

double DepthFromValue(double value, double d_max_mm) { return value * d_max_mm; }

namespace {

// Vertex of the parabola through (-1, minus), (0, center), (1, plus).
std::pair<double, double> ParabolaVertex(double minus, double center, double plus) {
  const double denom = minus - 2.0 * center + plus;
  if (std::abs(denom) <= 1e-12) return {0.0, 0.0};
  const double offset = std::clamp(0.5 * (minus - plus) / denom, -0.5, 0.5);
  return {offset, 0.25 * (plus - minus) * offset};
}

}  // namespace

SubpixelOffset RefineSubpixel(const HeatmapGrid& heatmap, std::size_t row, std::size_t col) {
  const std::size_t r = heatmap.resolution();
  SubpixelOffset out;
  out.refined_value = heatmap.at(row, col);
  if (row == 0 || col == 0 || row + 1 >= r || col + 1 >= r) return out;
  const double center = heatmap.at(row, col);
  const auto [d_row, gain_row] = ParabolaVertex(heatmap.at(row - 1, col), center, heatmap.at(row + 1, col));
  const auto [d_col, gain_col] = ParabolaVertex(heatmap.at(row, col - 1), center, heatmap.at(row, col + 1));
  out.d_row = d_row;
  out.d_col = d_col;
  out.refined_value = center + gain_row + gain_col;
  return out;
}

std::vector<PeakDetection> ExtractPeaks(const HeatmapGrid& heatmap, const KernelParams& params,
                                        const PeakOptions& options) {
  if (options.footprint % 2 == 0) throw ConfigError("peak footprint must be odd");
  const std::size_t r = heatmap.resolution();
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(options.footprint / 2);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(r);

  struct Candidate {
    std::size_t row, col;
    float value;
  };
  std::vector<Candidate> candidates;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      const float v = heatmap.at(i, j);
      if (v < options.threshold) continue;
      float window_max = v;
      for (std::ptrdiff_t y = std::max<std::ptrdiff_t>(0, i - half); y <= std::min(n - 1, i + half); ++y) {
        for (std::ptrdiff_t x = std::max<std::ptrdiff_t>(0, j - half); x <= std::min(n - 1, j + half); ++x) {
          window_max = std::max(window_max, heatmap.at(y, x));
        }
      }
      if (v == window_max) candidates.push_back({std::size_t(i), std::size_t(j), v});
    }
  }
  // Row-major scan order breaks value ties.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.value > b.value; });

  std::vector<Candidate> kept;
  const double min_sep_sq = options.min_separation_px * options.min_separation_px;
  for (const Candidate& c : candidates) {
    bool isolated = true;
    for (const Candidate& k : kept) {
      const double dr = double(c.row) - double(k.row);
      const double dc = double(c.col) - double(k.col);
      if (dr * dr + dc * dc < min_sep_sq) {
        isolated = false;
        break;
      }
    }
    if (isolated) kept.push_back(c);
  }

  std::vector<PeakDetection> peaks;
  peaks.reserve(kept.size());
  for (const Candidate& c : kept) {
    const SubpixelOffset off = RefineSubpixel(heatmap, c.row, c.col);
    const auto [x, y] = PxToMm(heatmap.mapping(), double(c.row) + off.d_row, double(c.col) + off.d_col);
    PeakDetection p;
    p.x_mm = x;
    p.y_mm = y;
    p.depth_mm = DepthFromValue(std::clamp(off.refined_value, 0.0, 1.0), params.d_max_mm);
    p.peak_value = c.value;
    p.row = c.row;
    p.col = c.col;
    peaks.push_back(p);
  }
  return peaks;
}

std::string PeaksToCsv(const std::vector<PeakDetection>& peaks) {
  std::string out = "x_mm,y_mm,depth_mm,peak_value\n";
  char line[128];
  for (const PeakDetection& p : peaks) {
    std::snprintf(line, sizeof(line), "%.6f,%.6f,%.6f,%.6f\n", p.x_mm, p.y_mm, p.depth_mm, p.peak_value);
    out += line;
  }
  return out;
}

}  // namespace tacmap::codec

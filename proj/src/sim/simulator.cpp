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

#include "tacmap/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tacmap/json_fields.hpp"

namespace tacmap::sim {

void SimConfig::Validate(const codec::GridMapping& mapping) const {
  if (marker_grid == 0 || image_resolution == 0 || channels == 0) throw ConfigError("sim: sizes must be >= 1");
  if (!(deflection_gain_px > 0.0)) throw ConfigError("sim: deflection gain must be positive");
  if (!(marker_disc_radius_px > 0.0)) throw ConfigError("sim: marker radius must be positive");
  if (pixel_noise_sigma < 0.0) throw ConfigError("sim: pixel noise sigma must be non-negative");
  const double spacing_px = static_cast<double>(image_resolution) / static_cast<double>(marker_grid);
  if (!(spacing_px > 2.0 * marker_disc_radius_px)) {
    throw ConfigError("sim: marker spacing " + std::to_string(spacing_px) + " px must exceed the disc diameter");
  }
  if (image_resolution != mapping.resolution) {
    throw ConfigError("sim: image resolution must equal the heatmap resolution");
  }
}

double SamplerConfig::Margin(const codec::KernelParams& kernel) const {
  return margin_mm >= 0.0 ? margin_mm : 3.0 * codec::KernelSigma(depth_max_mm, kernel);
}

void SamplerConfig::Validate(const codec::GridMapping& mapping, const codec::KernelParams& kernel) const {
  if (!(depth_min_mm > 0.0) || depth_max_mm < depth_min_mm || depth_max_mm > kernel.d_max_mm) {
    throw ConfigError("sampler: depth bounds must satisfy 0 < min <= max <= d_max");
  }
  if (!(2.0 * Margin(kernel) < mapping.workspace_side_mm)) {
    throw DomainError("sampler: margin leaves no room for contacts inside the workspace");
  }
}

void SensorModel::Validate() const {
  kernel.Validate();
  mapping.Validate();
  sim.Validate(mapping);
  sampler.Validate(mapping, kernel);
}

std::vector<Vec2> RestMarkers(const SimConfig& sim, const codec::GridMapping& mapping) {
  std::vector<Vec2> markers;
  markers.reserve(sim.marker_grid * sim.marker_grid);
  const double spacing = mapping.workspace_side_mm / static_cast<double>(sim.marker_grid);
  for (std::size_t i = 0; i < sim.marker_grid; ++i) {
    for (std::size_t j = 0; j < sim.marker_grid; ++j) {
      markers.push_back({(static_cast<double>(j) + 0.5) * spacing - mapping.half_side_mm(),
                         (static_cast<double>(i) + 0.5) * spacing - mapping.half_side_mm()});
    }
  }
  return markers;
}

std::vector<Vec2> DisplaceMarkers(const std::vector<Vec2>& rest, const ContactSet& contacts, const SensorModel& model) {
  const double pitch = model.mapping.workspace_side_mm / static_cast<double>(model.sim.image_resolution);
  const double gain_mm = model.sim.deflection_gain_px * pitch;
  std::vector<Vec2> moved = rest;
  for (const ContactPoint& c : contacts) {
    const double sigma = codec::KernelSigma(c.depth_mm, model.kernel);
    const double amplitude = gain_mm * c.depth_mm / model.kernel.d_max_mm;
    // Evaluated at rest positions; contributions add.
    for (std::size_t k = 0; k < moved.size(); ++k) {
      Vec2& m = moved[k];
      const double dx = rest[k].x - c.x_mm;
      const double dy = rest[k].y - c.y_mm;
      const double r = std::hypot(dx, dy);
      if (r == 0.0) continue;
      // (r/sigma) * exp(-r^2 / 2 sigma^2) * (dx, dy) / r
      const double scale = amplitude * std::exp(-r * r / (2.0 * sigma * sigma)) / sigma;
      m.x += scale * dx;
      m.y += scale * dy;
    }
  }
  return moved;
}

nn::Tensor RenderImage(const std::vector<Vec2>& markers, const SensorModel& model, Rng* noise_rng) {
  const std::size_t res = model.sim.image_resolution;
  const double pitch = model.mapping.workspace_side_mm / static_cast<double>(res);
  const double radius = model.sim.marker_disc_radius_px;
  const double reach = radius + 0.5;
  std::vector<float> plane(res * res, 0.0f);
  const auto last = static_cast<std::ptrdiff_t>(res) - 1;
  for (const Vec2& m : markers) {
    const double col = (m.x + model.mapping.half_side_mm()) / pitch - 0.5;
    const double row = (m.y + model.mapping.half_side_mm()) / pitch - 0.5;
    const auto r0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::floor(row - reach)));
    const auto r1 = std::min<std::ptrdiff_t>(last, static_cast<std::ptrdiff_t>(std::ceil(row + reach)));
    const auto c0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::floor(col - reach)));
    const auto c1 = std::min<std::ptrdiff_t>(last, static_cast<std::ptrdiff_t>(std::ceil(col + reach)));
    for (std::ptrdiff_t i = r0; i <= r1; ++i) {
      for (std::ptrdiff_t j = c0; j <= c1; ++j) {
        // Linear edge ramp approximates the disc's area coverage of the pixel.
        const double dist = std::hypot(static_cast<double>(i) - row, static_cast<double>(j) - col);
        const auto coverage = static_cast<float>(std::clamp(reach - dist, 0.0, 1.0));
        float& cell = plane[static_cast<std::size_t>(i) * res + static_cast<std::size_t>(j)];
        cell = std::max(cell, coverage);
      }
    }
  }
  if (model.sim.pixel_noise_sigma > 0.0) {
    if (noise_rng == nullptr) throw ConfigError("render: pixel noise requested without a random stream");
    for (float& v : plane) {
      v = static_cast<float>(std::clamp(v + model.sim.pixel_noise_sigma * noise_rng->Normal(), 0.0, 1.0));
    }
  }
  nn::Tensor image({model.sim.channels, res, res});
  for (std::size_t c = 0; c < model.sim.channels; ++c) {
    std::copy(plane.begin(), plane.end(), image.ptr() + c * res * res);
  }
  return image;
}

nn::Tensor SimulateImage(const ContactSet& contacts, const SensorModel& model, Rng* noise_rng) {
  return RenderImage(DisplaceMarkers(RestMarkers(model.sim, model.mapping), contacts, model), model, noise_rng);
}

ContactPoint SampleSingleContact(Rng& rng, const SensorModel& model) {
  const double limit = model.mapping.half_side_mm() - model.sampler.Margin(model.kernel);
  ContactPoint c;
  c.x_mm = rng.Uniform(-limit, limit);
  c.y_mm = rng.Uniform(-limit, limit);
  c.depth_mm = rng.Uniform(model.sampler.depth_min_mm, model.sampler.depth_max_mm);
  return c;
}

std::vector<ContactSet> SampleSingleContacts(std::uint64_t master_seed, std::size_t count, const SensorModel& model) {
  model.sampler.Validate(model.mapping, model.kernel);
  std::vector<ContactSet> sets;
  sets.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(HashSeed(master_seed, i));
    sets.push_back({SampleSingleContact(rng, model)});
  }
  return sets;
}

std::vector<double> DualSweepSeparations() {
  std::vector<double> out;
  for (int k = 0; k < 12; ++k) out.push_back(6.5 + 0.5 * k);
  return out;
}

namespace {

void RequireInsideMargin(const ContactPoint& c, const SensorModel& model, const char* what) {
  const double limit = model.mapping.half_side_mm() - model.sampler.Margin(model.kernel);
  if (std::abs(c.x_mm) > limit || std::abs(c.y_mm) > limit) {
    throw DomainError(std::string(what) + " tip at (" + std::to_string(c.x_mm) + ", " + std::to_string(c.y_mm) +
                      ") mm lies outside the usable workspace");
  }
}

}  // namespace

ContactSet DualIndenterContacts(const Vec2& center, double separation_mm, double angle_rad, double depth_mm,
                                const SensorModel& model) {
  const double steps = (separation_mm - 6.5) / 0.5;
  if (steps < -1e-9 || steps > 11.0 + 1e-9 || std::abs(steps - std::round(steps)) > 1e-9) {
    throw DomainError("dual indenter separation " + std::to_string(separation_mm) +
                      " mm is not one of 6.5, 7.0, ..., 12.0");
  }
  if (!(depth_mm > 0.0) || depth_mm > model.kernel.d_max_mm) throw DomainError("dual indenter depth out of range");
  const double hx = 0.5 * separation_mm * std::cos(angle_rad);
  const double hy = 0.5 * separation_mm * std::sin(angle_rad);
  ContactSet set{{center.x + hx, center.y + hy, depth_mm}, {center.x - hx, center.y - hy, depth_mm}};
  for (const ContactPoint& c : set) RequireInsideMargin(c, model, "dual indenter");
  return set;
}

ContactSet TripleIndenterContacts(const Vec2& center, double angle_rad, const std::array<double, 3>& tip_heights_mm,
                                  double base_depth_mm, const SensorModel& model, double layout_radius_mm) {
  for (double h : tip_heights_mm) {
    const double steps = h / 0.5;
    if (h < 0.0 || h > 3.0 || std::abs(steps - std::round(steps)) > 1e-9) {
      throw DomainError("tip height " + std::to_string(h) + " mm is not one of 0.0, 0.5, ..., 3.0");
    }
  }
  const double highest = *std::max_element(tip_heights_mm.begin(), tip_heights_mm.end());
  ContactSet set;
  for (std::size_t k = 0; k < 3; ++k) {
    const double depth = base_depth_mm - (highest - tip_heights_mm[k]);
    if (depth < 0.0) throw DomainError("triple indenter tip depth would be negative");
    if (depth > model.kernel.d_max_mm) throw DomainError("triple indenter tip deeper than d_max");
    const double theta = angle_rad + 2.0 * std::numbers::pi * static_cast<double>(k) / 3.0;
    ContactPoint c{center.x + layout_radius_mm * std::cos(theta), center.y + layout_radius_mm * std::sin(theta), depth};
    RequireInsideMargin(c, model, "triple indenter");
    if (depth >= model.sampler.depth_min_mm) set.push_back(c);
  }
  if (set.empty()) throw DomainError("no triple indenter tip reaches the minimum contact depth");
  return set;
}

nlohmann::json ToJson(const SimConfig& sim) {
  return {{"marker_grid", sim.marker_grid},
          {"image_resolution", sim.image_resolution},
          {"channels", sim.channels},
          {"marker_disc_radius_px", sim.marker_disc_radius_px},
          {"deflection_gain_px", sim.deflection_gain_px},
          {"pixel_noise_sigma", sim.pixel_noise_sigma}};
}

nlohmann::json ToJson(const SamplerConfig& sampler) {
  return {{"depth_min_mm", sampler.depth_min_mm},
          {"depth_max_mm", sampler.depth_max_mm},
          {"margin_mm", sampler.margin_mm}};
}

void FromJson(const nlohmann::json& json, SimConfig& sim) {
  JsonFields fields(json, "sim");
  fields.Get("marker_grid", sim.marker_grid);
  fields.Get("image_resolution", sim.image_resolution);
  fields.Get("channels", sim.channels);
  fields.Get("marker_disc_radius_px", sim.marker_disc_radius_px);
  fields.Get("deflection_gain_px", sim.deflection_gain_px);
  fields.Get("pixel_noise_sigma", sim.pixel_noise_sigma);
  fields.Finish();
}

void FromJson(const nlohmann::json& json, SamplerConfig& sampler) {
  JsonFields fields(json, "sampler");
  fields.Get("depth_min_mm", sampler.depth_min_mm);
  fields.Get("depth_max_mm", sampler.depth_max_mm);
  fields.Get("margin_mm", sampler.margin_mm);
  fields.Finish();
}

}  // namespace tacmap::sim

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

#include <array>
#include <cstdint>
#include <vector>

#include "json.hpp"
#include "tacmap/codec/heatmap.hpp"
#include "tacmap/nn/tensor.hpp"
#include "tacmap/rng.hpp"

// Synthetic marker-array sensor on a flat membrane. A contact pushes nearby
// markers radially outward; the camera image is the rasterized marker field.
namespace tacmap::sim {

using codec::ContactPoint;
using codec::ContactSet;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct SimConfig {
  std::size_t marker_grid = 13;
  std::size_t image_resolution = 64;
  std::size_t channels = 1;
  double marker_disc_radius_px = 1.2;
  double deflection_gain_px = 3.0;
  double pixel_noise_sigma = 0.0;

  void Validate(const codec::GridMapping& mapping) const;
};

struct SamplerConfig {
  double depth_min_mm = 0.5;
  double depth_max_mm = 6.0;
  // Distance kept between contacts and the workspace edge. Negative selects
  // 3 * kernel_sigma(depth_max).
  double margin_mm = -1.0;

  double Margin(const codec::KernelParams& kernel) const;
  void Validate(const codec::GridMapping& mapping, const codec::KernelParams& kernel) const;
};

// Everything needed to turn contacts into a (image, heatmap) pair.
struct SensorModel {
  SimConfig sim;
  SamplerConfig sampler;
  codec::KernelParams kernel;
  codec::GridMapping mapping;

  void Validate() const;
};

// Rest positions (mm) of the marker grid, row-major, cell-centered.
std::vector<Vec2> RestMarkers(const SimConfig& sim, const codec::GridMapping& mapping);

// Adds the radial-tilt displacement of every contact to every marker.
std::vector<Vec2> DisplaceMarkers(const std::vector<Vec2>& rest, const ContactSet& contacts, const SensorModel& model);

// Anti-aliased discs on a black background, optional Gaussian pixel noise,
// clamped to [0,1]. Returns (C, H, W). `noise_rng` may be null when the
// configured noise is zero.
nn::Tensor RenderImage(const std::vector<Vec2>& markers, const SensorModel& model, Rng* noise_rng);

// Sample i draws from Rng(HashSeed(master_seed, i)) only.
std::vector<ContactSet> SampleSingleContacts(std::uint64_t master_seed, std::size_t count, const SensorModel& model);
ContactPoint SampleSingleContact(Rng& rng, const SensorModel& model);

// Separations 6.5, 7.0, ..., 12.0 mm.
std::vector<double> DualSweepSeparations();

// Two equal-depth tips symmetric about `center` along `angle_rad`.
ContactSet DualIndenterContacts(const Vec2& center, double separation_mm, double angle_rad, double depth_mm,
                                const SensorModel& model);

// Three tips at 120 degree spacing on a circle of `layout_radius_mm`. Tip k
// indents base_depth - (max(h) - h[k]); tips shallower than the minimum
// valid depth are not in contact and are left out.
ContactSet TripleIndenterContacts(const Vec2& center, double angle_rad, const std::array<double, 3>& tip_heights_mm,
                                  double base_depth_mm, const SensorModel& model, double layout_radius_mm = 5.0);

// Image for a contact set: displace, render.
nn::Tensor SimulateImage(const ContactSet& contacts, const SensorModel& model, Rng* noise_rng);

nlohmann::json ToJson(const SimConfig& sim);
nlohmann::json ToJson(const SamplerConfig& sampler);
void FromJson(const nlohmann::json& json, SimConfig& sim);
void FromJson(const nlohmann::json& json, SamplerConfig& sampler);

}  // namespace tacmap::sim

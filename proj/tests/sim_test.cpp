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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "tacmap/error.hpp"
#include "tacmap/io/tensor_file.hpp"
#include "tacmap/sim/dataset.hpp"
#include "test_util.hpp"

namespace tacmap::sim {
namespace {

namespace fs = std::filesystem;

const SensorModel kModel;

double Norm(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

TEST(Sampler, CountRangeAndDeterminism) {
  const auto sets = SampleSingleContacts(5, 5000, kModel);
  ASSERT_EQ(sets.size(), 5000u);
  const double limit = kModel.mapping.half_side_mm() - kModel.sampler.Margin(kModel.kernel);
  for (const ContactSet& s : sets) {
    ASSERT_EQ(s.size(), 1u);
    EXPECT_GE(s[0].depth_mm, 0.5);
    EXPECT_LE(s[0].depth_mm, 6.0);
    EXPECT_LE(std::abs(s[0].x_mm), limit);
    EXPECT_LE(std::abs(s[0].y_mm), limit);
  }
  EXPECT_EQ(SampleSingleContacts(5, 5000, kModel), sets);
  EXPECT_NE(SampleSingleContacts(6, 10, kModel), SampleSingleContacts(5, 10, kModel));
}

TEST(Displacement, CenterFarFieldAndMirrorSymmetry) {
  const double sigma = codec::KernelSigma(4.0, kModel.kernel);
  const std::vector<Vec2> rest = {{1.0, -2.0}, {1.0 + 6.5 * sigma, -2.0}, {1.0, -2.0 - 7.0 * sigma}};
  const auto moved = DisplaceMarkers(rest, {{1.0, -2.0, 4.0}}, kModel);
  EXPECT_EQ(moved[0].x, rest[0].x);
  EXPECT_EQ(moved[0].y, rest[0].y);
  EXPECT_LT(Norm(moved[1], rest[1]), 1e-6);
  EXPECT_LT(Norm(moved[2], rest[2]), 1e-6);

  const auto markers = RestMarkers(kModel.sim, kModel.mapping);
  const auto field = DisplaceMarkers(markers, {{-3.0, 1.0, 2.0}, {3.0, 1.0, 5.0}}, kModel);
  const auto mirrored = DisplaceMarkers(markers, {{3.0, 1.0, 2.0}, {-3.0, 1.0, 5.0}}, kModel);
  // The marker grid is symmetric about x = 0: marker (r, c) mirrors to (r, G-1-c).
  const std::size_t g = kModel.sim.marker_grid;
  for (std::size_t r = 0; r < g; ++r) {
    for (std::size_t c = 0; c < g; ++c) {
      const Vec2 d = {field[r * g + c].x - markers[r * g + c].x, field[r * g + c].y - markers[r * g + c].y};
      const std::size_t m = r * g + (g - 1 - c);
      const Vec2 dm = {mirrored[m].x - markers[m].x, mirrored[m].y - markers[m].y};
      EXPECT_NEAR(d.x, -dm.x, 1e-12);
      EXPECT_NEAR(d.y, dm.y, 1e-12);
    }
  }
}

TEST(Displacement, ContinuousInContactPosition) {
  const auto markers = RestMarkers(kModel.sim, kModel.mapping);
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const ContactPoint c{rng.Uniform(-8, 8), rng.Uniform(-8, 8), rng.Uniform(0.5, 6.0)};
    ContactPoint nudged = c;
    nudged.x_mm += 1e-6;
    nudged.y_mm -= 1e-6;
    const auto a = DisplaceMarkers(markers, {c}, kModel);
    const auto b = DisplaceMarkers(markers, {nudged}, kModel);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(Norm(a[i], b[i]), 1e-4);
  }
}

TEST(Render, EmptyRangeLocalMaxAndRepeatability) {
  const nn::Tensor empty = RenderImage({}, kModel, nullptr);
  for (float v : empty.data()) EXPECT_EQ(v, 0.0f);

  // Pixel (20, 40) center in mm.
  const auto [x, y] = codec::PxToMm(kModel.mapping, 20.0, 40.0);
  const nn::Tensor img = RenderImage({{x, y}}, kModel, nullptr).Reshaped({1, 1, 64, 64});
  const float center = img.at(0, 0, 20, 40);
  EXPECT_EQ(center, 1.0f);
  for (int dr = -2; dr <= 2; ++dr) {
    for (int dc = -2; dc <= 2; ++dc) {
      if (dr != 0 || dc != 0) {
        EXPECT_LT(img.at(0, 0, 20 + dr, 40 + dc), center);
      }
    }
  }

  SensorModel noisy = kModel;
  noisy.sim.pixel_noise_sigma = 0.2;
  Rng rng(1);
  const nn::Tensor n = SimulateImage({{0.0, 0.0, 3.0}}, noisy, &rng);
  for (float v : n.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
  EXPECT_EQ(SimulateImage({{1.0, 2.0, 3.0}}, kModel, nullptr), SimulateImage({{1.0, 2.0, 3.0}}, kModel, nullptr));
}

TEST(Render, ChannelsReplicated) {
  SensorModel rgb = kModel;
  rgb.sim.channels = 3;
  const nn::Tensor img = SimulateImage({{0.0, 0.0, 4.0}}, rgb, nullptr);
  ASSERT_EQ(img.shape(), (nn::Shape{3, 64, 64}));
  for (std::size_t i = 0; i < 64 * 64; ++i) {
    EXPECT_EQ(img[i], img[i + 64 * 64]);
    EXPECT_EQ(img[i], img[i + 2 * 64 * 64]);
  }
}

TEST(Indenters, DualSeparationAndRotation) {
  const auto seps = DualSweepSeparations();
  ASSERT_EQ(seps.size(), 12u);
  EXPECT_DOUBLE_EQ(seps.front(), 6.5);
  EXPECT_DOUBLE_EQ(seps.back(), 12.0);
  for (double s : seps) {
    const ContactSet c = DualIndenterContacts({0.5, -1.0}, s, 0.7, 3.0, kModel);
    ASSERT_EQ(c.size(), 2u);
    EXPECT_NEAR(std::hypot(c[0].x_mm - c[1].x_mm, c[0].y_mm - c[1].y_mm), s, 1e-9);
    EXPECT_EQ(c[0].depth_mm, 3.0);
    EXPECT_EQ(c[1].depth_mm, 3.0);
  }
  const ContactSet a = DualIndenterContacts({0, 0}, 12.0, 0.0, 2.0, kModel);
  const ContactSet b = DualIndenterContacts({0, 0}, 12.0, std::numbers::pi / 2, 2.0, kModel);
  EXPECT_NEAR(std::abs(a[0].x_mm), 6.0, 1e-12);
  EXPECT_NEAR(a[0].y_mm, 0.0, 1e-12);
  EXPECT_NEAR(b[0].x_mm, 0.0, 1e-12);
  EXPECT_NEAR(std::abs(b[0].y_mm), 6.0, 1e-12);
  EXPECT_THROW(DualIndenterContacts({0, 0}, 7.2, 0.0, 2.0, kModel), DomainError);
  EXPECT_THROW(DualIndenterContacts({8.0, 0}, 12.0, 0.0, 2.0, kModel), DomainError);
}

TEST(Indenters, TripleDepthArithmeticAndValidity) {
  const ContactSet equal = TripleIndenterContacts({0, 0}, 0.0, {1.0, 1.0, 1.0}, 3.0, kModel);
  ASSERT_EQ(equal.size(), 3u);
  for (const auto& c : equal) EXPECT_DOUBLE_EQ(c.depth_mm, 3.0);

  const ContactSet mixed = TripleIndenterContacts({0, 0}, 0.3, {0.0, 1.5, 3.0}, 4.0, kModel);
  ASSERT_EQ(mixed.size(), 3u);
  EXPECT_DOUBLE_EQ(mixed[0].depth_mm, 1.0);
  EXPECT_DOUBLE_EQ(mixed[1].depth_mm, 2.5);
  EXPECT_DOUBLE_EQ(mixed[2].depth_mm, 4.0);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(std::hypot(mixed[i].x_mm, mixed[i].y_mm), 5.0, 1e-12);
  }

  // Lowest tip reaches 3.3 - 3.0 = 0.3 mm, below the validity floor.
  const ContactSet two = TripleIndenterContacts({0, 0}, 0.0, {0.0, 3.0, 3.0}, 3.3, kModel);
  EXPECT_EQ(two.size(), 2u);

  EXPECT_THROW(TripleIndenterContacts({0, 0}, 0.0, {0.0, 0.0, 0.0}, 0.3, kModel), DomainError);
  EXPECT_THROW(TripleIndenterContacts({0, 0}, 0.0, {0.0, 0.7, 0.0}, 3.0, kModel), DomainError);
}

TEST(Scenario, ParseCountsAndLayout) {
  const ScenarioSpec s = ScenarioSpec::Parse("single:5000,dual:1000,triple:1000");
  EXPECT_EQ(s.total(), 7000u);
  EXPECT_EQ(ScenarioSpec::Parse("single:5000").total(), 5000u);
  EXPECT_EQ(s.KindOf(4999), ScenarioKind::kSingle);
  EXPECT_EQ(s.KindOf(5000), ScenarioKind::kDual);
  EXPECT_EQ(s.KindOf(6999), ScenarioKind::kTriple);
  EXPECT_EQ(ScenarioSpec::Parse(s.ToString()).total(), 7000u);
  EXPECT_EQ(ScenarioSpec::Parse("dual_sweep:20").total(), 240u);
  EXPECT_THROW(ScenarioSpec::Parse("quad:4"), ConfigError);
  EXPECT_THROW(ScenarioSpec::Parse("single:abc"), ConfigError);
}

TEST(Dataset, SamplesAreConsistent) {
  const ScenarioSpec spec = ScenarioSpec::Parse("single:20,dual:10,triple:10,dual_sweep:2,empty:3");
  const auto samples = GenerateSamples(99, spec, kModel, 2);
  ASSERT_EQ(samples.size(), spec.total());
  for (const Sample& s : samples) {
    EXPECT_EQ(s.heatmap, codec::EncodeHeatmap(s.contacts, kModel.mapping, kModel.kernel));
    EXPECT_EQ(s.image, SimulateImage(s.contacts, kModel, nullptr));
    switch (s.kind) {
      case ScenarioKind::kSingle: EXPECT_EQ(s.contacts.size(), 1u); break;
      case ScenarioKind::kDual:
      case ScenarioKind::kDualSweep:
        ASSERT_EQ(s.contacts.size(), 2u);
        EXPECT_NEAR(std::hypot(s.contacts[0].x_mm - s.contacts[1].x_mm, s.contacts[0].y_mm - s.contacts[1].y_mm),
                    s.separation_mm, 1e-9);
        break;
      case ScenarioKind::kTriple:
        EXPECT_GE(s.contacts.size(), 1u);
        EXPECT_LE(s.contacts.size(), 3u);
        break;
      case ScenarioKind::kEmpty: EXPECT_TRUE(s.contacts.empty()); break;
    }
  }
  // Sweep trials cycle through all separations.
  std::vector<double> seen;
  for (const Sample& s : samples) {
    if (s.kind == ScenarioKind::kDualSweep) seen.push_back(s.separation_mm);
  }
  ASSERT_EQ(seen.size(), 24u);
  for (double sep : DualSweepSeparations()) EXPECT_EQ(std::count(seen.begin(), seen.end(), sep), 2);
}

TEST(Dataset, BytesIndependentOfThreadCountAndReruns) {
  test::TempDir dir;
  const ScenarioSpec spec = ScenarioSpec::Parse("single:30,dual:8,triple:8,empty:2");
  BuildDataset(dir.path() / "a", 5, spec, kModel, 1);
  BuildDataset(dir.path() / "b", 5, spec, kModel, 8);
  BuildDataset(dir.path() / "c", 5, spec, kModel, 1);
  EXPECT_EQ(test::DirectoryDigest(dir.path() / "a"), test::DirectoryDigest(dir.path() / "b"));
  EXPECT_EQ(test::DirectoryDigest(dir.path() / "a"), test::DirectoryDigest(dir.path() / "c"));
  BuildDataset(dir.path() / "d", 6, spec, kModel, 1);
  EXPECT_NE(test::DirectoryDigest(dir.path() / "a"), test::DirectoryDigest(dir.path() / "d"));
}

TEST(Dataset, LoadRoundTripAndIngestionWithoutHeatmaps) {
  test::TempDir dir;
  const ScenarioSpec spec = ScenarioSpec::Parse("single:6,triple:3");
  BuildDataset(dir.path(), 12, spec, kModel, 1, nlohmann::json{{"note", "x"}});
  const Dataset loaded = LoadDataset(dir.path());
  const auto expected = GenerateSamples(12, spec, kModel, 1);
  ASSERT_EQ(loaded.samples.size(), expected.size());
  EXPECT_EQ(loaded.run_config, (nlohmann::json{{"note", "x"}}));
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(loaded.samples[i].image, expected[i].image);
    EXPECT_EQ(loaded.samples[i].heatmap, expected[i].heatmap);
    EXPECT_EQ(loaded.samples[i].kind, expected[i].kind);
    ASSERT_EQ(loaded.samples[i].contacts.size(), expected[i].contacts.size());
    for (std::size_t k = 0; k < expected[i].contacts.size(); ++k) {
      EXPECT_EQ(loaded.samples[i].contacts[k], expected[i].contacts[k]);
    }
  }

  for (const auto& e : fs::directory_iterator(dir.path() / "samples")) {
    if (e.path().string().ends_with(".hm.tvt")) fs::remove(e.path());
  }
  const Dataset ingested = LoadDataset(dir.path());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(ingested.samples[i].heatmap, expected[i].heatmap);

  EXPECT_THROW(LoadDataset(dir.path() / "missing"), MissingInputError);
}

TEST(Dataset, LabelsCsvRoundTripsExactly) {
  Rng rng(3);
  ContactSet contacts;
  for (int i = 0; i < 20; ++i) contacts.push_back({rng.Uniform(-9, 9), rng.Uniform(-9, 9), rng.Uniform(0.5, 6)});
  EXPECT_EQ(LabelsFromCsv(LabelsToCsv(contacts)), contacts);
  EXPECT_EQ(LabelsToCsv({}), "x_mm,y_mm,depth_mm\n");
}

TEST(Config, ValidationRejectsBadSettings) {
  SensorModel m = kModel;
  m.sim.image_resolution = 32;
  EXPECT_THROW(m.Validate(), ConfigError);
  m = kModel;
  m.sampler.depth_min_mm = 7.0;
  EXPECT_THROW(m.Validate(), ConfigError);
  SimConfig sim;
  EXPECT_THROW(FromJson(nlohmann::json{{"markers", 3}}, sim), ConfigError);
}

}  // namespace
}  // namespace tacmap::sim

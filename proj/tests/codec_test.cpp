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

#include "tacmap/codec/codec_config.hpp"
#include "tacmap/codec/heatmap.hpp"
#include "tacmap/error.hpp"
#include "tacmap/rng.hpp"

namespace tacmap::codec {
namespace {

const KernelParams kKernel;
const GridMapping kMapping;

TEST(Hertz, ContactRadius) {
  EXPECT_EQ(HertzContactRadius(3.0, 0.0), 0.0);
  EXPECT_NEAR(HertzContactRadius(3.0, 3.0), 3.0, 1e-12);
  EXPECT_NEAR(HertzContactRadius(3.0, 6.0), std::sqrt(18.0), 1e-12);
  EXPECT_THROW(HertzContactRadius(3.0, -0.1), DomainError);
  EXPECT_THROW(HertzContactRadius(0.0, 1.0), DomainError);
}

TEST(Hertz, KernelSigmaValuesAndMonotonicity) {
  EXPECT_NEAR(KernelSigma(0.0, kKernel), 2.0, 1e-12);
  EXPECT_NEAR(KernelSigma(6.0, kKernel), std::sqrt(6.0), 1e-12);
  EXPECT_NEAR(KernelSigma(1.5, kKernel), std::sqrt(4.5), 1e-12);
  double last = KernelSigma(0.0, kKernel);
  for (double d = 0.01; d <= 6.0; d += 0.01) {
    const double s = KernelSigma(d, kKernel);
    EXPECT_GE(s, last);
    last = s;
  }
  EXPECT_THROW(KernelSigma(-1.0, kKernel), DomainError);
}

TEST(Mapping, CenterCornerAndRoundTrip) {
  const PixelCoord c = MmToPx(kMapping, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(c.row, 31.5);
  EXPECT_DOUBLE_EQ(c.col, 31.5);
  const auto [x, y] = PxToMm(kMapping, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(x, -15.75);
  EXPECT_DOUBLE_EQ(y, -15.75);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double px = rng.Uniform(-16.0, 16.0), py = rng.Uniform(-16.0, 16.0);
    const PixelCoord p = MmToPx(kMapping, px, py);
    const auto [bx, by] = PxToMm(kMapping, p.row, p.col);
    EXPECT_NEAR(bx, px, 1e-9);
    EXPECT_NEAR(by, py, 1e-9);
  }
  EXPECT_THROW(MmToPx(kMapping, 16.5, 0.0), DomainError);
}

TEST(DepthScaling, Values) {
  EXPECT_DOUBLE_EQ(DepthFromValue(1.0, 6.0), 6.0);
  EXPECT_DOUBLE_EQ(DepthFromValue(0.5, 6.0), 3.0);
  EXPECT_DOUBLE_EQ(DepthFromValue(0.0, 6.0), 0.0);
}

TEST(Encode, MatchesPointwiseGaussianOracle) {
  const ContactSet contacts = {{-4.2, 3.1, 4.5}, {6.0, -5.5, 2.0}};
  const HeatmapGrid h = EncodeHeatmap(contacts, kMapping, kKernel);
  for (std::size_t r = 0; r < 64; ++r) {
    for (std::size_t c = 0; c < 64; ++c) {
      const double x = (c + 0.5) * 0.5 - 16.0, y = (r + 0.5) * 0.5 - 16.0;
      double expected = 0.0;
      for (const ContactPoint& p : contacts) {
        const double a = std::sqrt(3.0 * p.depth_mm);
        const double s2 = a * a / 9.0 + 4.0;
        const double d2 = (x - p.x_mm) * (x - p.x_mm) + (y - p.y_mm) * (y - p.y_mm);
        expected = std::max(expected, p.depth_mm / 6.0 * std::exp(-d2 / (2.0 * s2)));
      }
      EXPECT_NEAR(h.at(r, c), expected, 1e-7);
    }
  }
}

TEST(Encode, ValuesInRangeAndMaxComposition) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    ContactSet contacts;
    HeatmapGrid previous = EncodeHeatmap(contacts, kMapping, kKernel);
    for (int k = 0; k < 4; ++k) {
      contacts.push_back({rng.Uniform(-15.0, 15.0), rng.Uniform(-15.0, 15.0), rng.Uniform(0.0, 6.0)});
      const HeatmapGrid next = EncodeHeatmap(contacts, kMapping, kKernel);
      for (std::size_t i = 0; i < next.values().size(); ++i) {
        EXPECT_GE(next.values()[i], previous.values()[i]);
        EXPECT_GE(next.values()[i], 0.0f);
        EXPECT_LE(next.values()[i], 1.0f);
      }
      previous = next;
    }
  }
}

TEST(Encode, PeakValueEqualsScaledDepthAtPixelCenter) {
  const HeatmapGrid h = EncodeHeatmap({{0.25, -0.25, 4.8}}, kMapping, kKernel);
  float max = 0.0f;
  for (float v : h.values()) max = std::max(max, v);
  EXPECT_NEAR(max, 4.8 / 6.0, 1e-7);
}

TEST(Encode, RejectsOutOfRangeContacts) {
  EXPECT_THROW(EncodeHeatmap({{17.0, 0.0, 1.0}}, kMapping, kKernel), DomainError);
  EXPECT_THROW(EncodeHeatmap({{0.0, 0.0, 6.5}}, kMapping, kKernel), DomainError);
  EXPECT_THROW(EncodeHeatmap({{0.0, 0.0, -0.1}}, kMapping, kKernel), DomainError);
}

TEST(Peaks, EmptyHeatmapHasNoPeaks) { EXPECT_TRUE(ExtractPeaks(HeatmapGrid(kMapping), kKernel).empty()); }

TEST(Peaks, SingleContactRoundTrip) {
  Rng rng(3);
  const double margin = 3.0 * KernelSigma(6.0, kKernel);
  double worst_pos = 0.0, worst_depth = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const ContactPoint c{rng.Uniform(-16 + margin, 16 - margin), rng.Uniform(-16 + margin, 16 - margin),
                         rng.Uniform(0.5, 6.0)};
    const auto peaks = ExtractPeaks(EncodeHeatmap({c}, kMapping, kKernel), kKernel);
    ASSERT_EQ(peaks.size(), 1u) << "contact " << i;
    worst_pos = std::max(worst_pos, std::hypot(peaks[0].x_mm - c.x_mm, peaks[0].y_mm - c.y_mm));
    worst_depth = std::max(worst_depth, std::abs(peaks[0].depth_mm - c.depth_mm));
  }
  EXPECT_LE(worst_pos, 0.15);
  EXPECT_LE(worst_depth, 0.12);
}

TEST(Peaks, DualContactTwelveMillimetresApart) {
  const auto peaks = ExtractPeaks(EncodeHeatmap({{-6.0, 0.0, 3.0}, {6.0, 0.0, 3.0}}, kMapping, kKernel), kKernel);
  ASSERT_EQ(peaks.size(), 2u);
  EXPECT_NEAR(std::hypot(peaks[0].x_mm - peaks[1].x_mm, peaks[0].y_mm - peaks[1].y_mm), 12.0, 0.2);
}

TEST(Peaks, WellSeparatedContactsGiveExactlyKPeaks) {
  Rng rng(4);
  for (std::size_t k = 1; k <= 3; ++k) {
    for (int trial = 0; trial < 200; ++trial) {
      ContactSet contacts;
      while (contacts.size() < k) {
        const ContactPoint c{rng.Uniform(-9.0, 9.0), rng.Uniform(-9.0, 9.0), rng.Uniform(0.5, 6.0)};
        bool ok = true;
        for (const ContactPoint& o : contacts) ok = ok && std::hypot(o.x_mm - c.x_mm, o.y_mm - c.y_mm) >= 6.5;
        if (ok) contacts.push_back(c);
      }
      EXPECT_EQ(ExtractPeaks(EncodeHeatmap(contacts, kMapping, kKernel), kKernel).size(), k);
    }
  }
}

TEST(Peaks, SortedByValueAndAboveThreshold) {
  const auto peaks = ExtractPeaks(
      EncodeHeatmap({{-8.0, -8.0, 1.0}, {8.0, 8.0, 5.0}, {8.0, -8.0, 3.0}}, kMapping, kKernel), kKernel);
  ASSERT_EQ(peaks.size(), 3u);
  for (std::size_t i = 0; i + 1 < peaks.size(); ++i) EXPECT_GE(peaks[i].peak_value, peaks[i + 1].peak_value);
  for (const auto& p : peaks) EXPECT_GE(p.peak_value, PeakOptions{}.threshold);
  EXPECT_NEAR(peaks[0].depth_mm, 5.0, 0.12);
}

TEST(Peaks, ShallowContactBelowThresholdIsDropped) {
  // 0.3 mm gives a value of 0.05 < 0.06.
  EXPECT_TRUE(ExtractPeaks(EncodeHeatmap({{0.0, 0.0, 0.3}}, kMapping, kKernel), kKernel).empty());
}

TEST(Subpixel, SymmetricBorderAndQuarterPixel) {
  HeatmapGrid h(kMapping);
  h.at(10, 10) = 1.0f;
  h.at(9, 10) = h.at(11, 10) = h.at(10, 9) = h.at(10, 11) = 0.5f;
  const SubpixelOffset sym = RefineSubpixel(h, 10, 10);
  EXPECT_EQ(sym.d_row, 0.0);
  EXPECT_EQ(sym.d_col, 0.0);

  h.at(0, 5) = 1.0f;
  const SubpixelOffset border = RefineSubpixel(h, 0, 5);
  EXPECT_EQ(border.d_row, 0.0);
  EXPECT_EQ(border.d_col, 0.0);

  // Gaussian centred 0.25 px right of and 0.25 px below pixel (32, 32).
  const double sigma_px = KernelSigma(3.0, kKernel) / kMapping.pixel_pitch_mm();
  HeatmapGrid g(kMapping);
  for (std::size_t r = 0; r < 64; ++r) {
    for (std::size_t c = 0; c < 64; ++c) {
      const double dr = r - 32.25, dc = c - 32.25;
      g.at(r, c) = static_cast<float>(0.5 * std::exp(-(dr * dr + dc * dc) / (2 * sigma_px * sigma_px)));
    }
  }
  const SubpixelOffset off = RefineSubpixel(g, 32, 32);
  EXPECT_NEAR(off.d_row, 0.25, 0.05);
  EXPECT_NEAR(off.d_col, 0.25, 0.05);
}

TEST(Peaks, CsvHeaderAndFormat) {
  EXPECT_EQ(PeaksToCsv({}), "x_mm,y_mm,depth_mm,peak_value\n");
  PeakDetection p;
  p.x_mm = 1.5;
  p.y_mm = -2.25;
  p.depth_mm = 3.0;
  p.peak_value = 0.5;
  EXPECT_EQ(PeaksToCsv({p}), "x_mm,y_mm,depth_mm,peak_value\n1.500000,-2.250000,3.000000,0.500000\n");
}

TEST(Grid, TensorRoundTrip) {
  const HeatmapGrid h = EncodeHeatmap({{1.0, 2.0, 3.0}}, kMapping, kKernel);
  const nn::Tensor t = h.ToTensor();
  EXPECT_EQ(t.shape(), (nn::Shape{1, 64, 64}));
  EXPECT_EQ(HeatmapGrid::FromTensor(t, kMapping), h);
  EXPECT_THROW(HeatmapGrid::FromTensor(nn::Tensor({1, 32, 32}, 0.0f), kMapping), ShapeError);
}

TEST(Config, StrictJson) {
  KernelParams k;
  FromJson(nlohmann::json{{"sigma_blur_mm", 1.5}}, k);
  EXPECT_EQ(k.sigma_blur_mm, 1.5);
  EXPECT_EQ(k.d_max_mm, 6.0);
  EXPECT_THROW(FromJson(nlohmann::json{{"sigma", 1.5}}, k), ConfigError);
  PeakOptions p;
  EXPECT_THROW(FromJson(nlohmann::json{{"threshold", 1.5}}, p), ConfigError);
  GridMapping m;
  FromJson(ToJson(GridMapping{32, 16.0}), m);
  EXPECT_EQ(m.resolution, 32u);
}

}  // namespace
}  // namespace tacmap::codec

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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tacmap/codec/heatmap.hpp"
#include "tacmap/nn/models.hpp"
#include "tacmap/sim/dataset.hpp"

namespace tacmap::train {

using codec::PeakDetection;
using Detections = std::vector<PeakDetection>;

struct CodecParams {
  codec::KernelParams kernel;
  codec::GridMapping mapping;
  codec::PeakOptions peaks;
};

// Runs the model on (N, C, R, R) images. The U-Net output goes through peak
// extraction; the regression baseline yields exactly one detection per image.
std::vector<Detections> PredictContacts(nn::Model& model, const nn::Tensor& images, const CodecParams& params);

// Batched PredictContacts over samples; no tape is recorded.
std::vector<Detections> PredictSamples(nn::Model& model, std::span<const sim::Sample* const> samples,
                                       const CodecParams& params, std::size_t batch_size = 16);

// Peaks of each sample's stored ground-truth heatmap, bypassing any model.
std::vector<Detections> GroundTruthDetections(std::span<const sim::Sample* const> samples, const CodecParams& params);

struct AxisMetrics {
  double r2 = 0.0;
  double mae_mm = 0.0;
  double rmse_mm = 0.0;
};

struct EvalReport {
  AxisMetrics x, y, z;
  AxisMetrics average;  // mean of the three axes
  std::size_t count = 0;   // samples that entered the statistics
  std::size_t misses = 0;  // samples without any detection
};

// R^2 = 1 - SSE / SST per axis; rows are (x, y, z).
EvalReport ComputeEvalReport(std::span<const std::array<double, 3>> predicted,
                             std::span<const std::array<double, 3>> truth, std::size_t misses = 0);

// Strongest detection per single-contact sample against its label.
EvalReport EvaluateSinglePoint(std::span<const Detections> predictions, std::span<const sim::Sample* const> samples);

// `axis,r2,mae_mm,rmse_mm` with rows average, x, y, z.
std::string EvalReportToCsv(const EvalReport& report);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (prediction, ground truth)
  std::vector<std::size_t> false_positives;               // unmatched predictions
  std::vector<std::size_t> misses;                        // unmatched ground truths
};

inline constexpr double kMatchGateMm = 5.0;

// Minimum-total-distance assignment (Hungarian method). Pairs farther apart
// than `gate_mm` are split into a miss and a false positive.
MatchResult MatchPeaks(std::span<const Point2> predictions, std::span<const Point2> truths,
                       double gate_mm = kMatchGateMm);

// Rectangular min-cost assignment. cost is rows x cols, row-major; returns
// for each row the assigned column or -1 when rows > cols.
std::vector<long> SolveAssignment(std::span<const double> cost, std::size_t rows, std::size_t cols);

struct SeparationBin {
  double separation_mm = 0.0;
  double distance_mae_mm = 0.0;
  std::size_t n = 0;         // samples with exactly two detections
  std::size_t failures = 0;  // samples with any other count
};

struct TwoPointReport {
  std::vector<SeparationBin> bins;  // one per nominal separation, ascending
  double distance_mae_mm = 0.0;     // over all valid samples
  double position_error_mm = 0.0;   // mean 2D error over matched pairs
  double depth_mae_mm = 0.0;        // over matched pairs
  std::size_t valid = 0;
  std::size_t failures = 0;
  std::size_t matched_pairs = 0;
};

TwoPointReport TwoPointDiscrimination(std::span<const Detections> predictions,
                                      std::span<const sim::Sample* const> samples);

// `separation_mm,distance_mae_mm,n`
std::string TwoPointReportToCsv(const TwoPointReport& report);

struct MultiplicityStats {
  std::size_t samples = 0;
  std::size_t exact_count = 0;  // samples whose detection count equals the contact count
  std::size_t matched_pairs = 0;
  double position_error_mm = 0.0;  // mean 2D error over matched pairs
  double depth_error_mm = 0.0;     // mean |depth error| over matched pairs
  std::size_t misses = 0;
  std::size_t false_positives = 0;
};

struct MultiContactReport {
  MultiplicityStats dual;
  MultiplicityStats triple;
};

// Samples holding two contacts feed `dual`, three feed `triple`; others are
// ignored.
MultiContactReport MultiContactEval(std::span<const Detections> predictions,
                                    std::span<const sim::Sample* const> samples);

// `multiplicity,samples,exact_count,matched_pairs,position_error_mm,depth_error_mm,misses,false_positives`
std::string MultiContactReportToCsv(const MultiContactReport& report);

// Row-labelled numeric table used to lay reports side by side.
struct MetricTable {
  std::vector<std::string> columns;
  std::vector<std::pair<std::string, std::vector<double>>> rows;
};

MetricTable ToTable(const EvalReport& report);
MetricTable ToTable(const MultiContactReport& report);

// `model,row,<columns...>`: rows of a, rows of b, then b - a. Tables must have
// identical columns and row labels.
std::string CompareModels(const std::string& name_a, const MetricTable& a, const std::string& name_b,
                          const MetricTable& b);

// Spearman rank correlation with average ranks for ties. NaN when either side
// is constant.
double SpearmanCorrelation(std::span<const double> a, std::span<const double> b);

}  // namespace tacmap::train

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

#include "tacmap/train/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "tacmap/error.hpp"
#include "tacmap/nn/autograd.hpp"
#include "tacmap/train/trainer.hpp"

namespace tacmap::train {
namespace {

std::string Format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

Point2 ToPoint(const PeakDetection& d) { return {d.x_mm, d.y_mm}; }
Point2 ToPoint(const codec::ContactPoint& c) { return {c.x_mm, c.y_mm}; }

double Distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

void CheckSizes(std::size_t predictions, std::size_t samples) {
  if (predictions != samples) {
    throw ShapeError("got " + std::to_string(predictions) + " prediction lists for " + std::to_string(samples) +
                     " samples");
  }
}

}  // namespace

std::vector<Detections> PredictContacts(nn::Model& model, const nn::Tensor& images, const CodecParams& params) {
  nn::NoGradGuard no_grad;
  const nn::Tensor out = model.Forward(images).value();
  const std::size_t n = images.dim(0);
  std::vector<Detections> result(n);
  if (model.architecture() == nn::Architecture::kUNet) {
    const std::size_t r = params.mapping.resolution;
    if (out.shape() != nn::Shape{n, 1, r, r}) {
      throw ShapeError("model output " + nn::ShapeToString(out.shape()) + " does not match the heatmap grid");
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<float> values(out.ptr() + i * r * r, out.ptr() + (i + 1) * r * r);
      result[i] = codec::ExtractPeaks(codec::HeatmapGrid(params.mapping, std::move(values)), params.kernel,
                                      params.peaks);
    }
    return result;
  }
  for (std::size_t i = 0; i < n; ++i) {
    PeakDetection d;
    d.x_mm = out[3 * i + 0];
    d.y_mm = out[3 * i + 1];
    d.depth_mm = out[3 * i + 2];
    d.peak_value = d.depth_mm / params.kernel.d_max_mm;
    const double pitch = params.mapping.pixel_pitch_mm();
    const double last = static_cast<double>(params.mapping.resolution - 1);
    d.col = static_cast<std::size_t>(std::clamp(std::floor((d.x_mm + params.mapping.half_side_mm()) / pitch), 0.0, last));
    d.row = static_cast<std::size_t>(std::clamp(std::floor((d.y_mm + params.mapping.half_side_mm()) / pitch), 0.0, last));
    result[i].push_back(d);
  }
  return result;
}

std::vector<Detections> PredictSamples(nn::Model& model, std::span<const sim::Sample* const> samples,
                                       const CodecParams& params, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  std::vector<Detections> result;
  result.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const auto batch = samples.subspan(start, std::min(batch_size, samples.size() - start));
    for (Detections& d : PredictContacts(model, StackImages(batch), params)) result.push_back(std::move(d));
  }
  return result;
}

std::vector<Detections> GroundTruthDetections(std::span<const sim::Sample* const> samples, const CodecParams& params) {
  std::vector<Detections> result;
  result.reserve(samples.size());
  for (const sim::Sample* s : samples) result.push_back(codec::ExtractPeaks(s->heatmap, params.kernel, params.peaks));
  return result;
}

EvalReport ComputeEvalReport(std::span<const std::array<double, 3>> predicted,
                             std::span<const std::array<double, 3>> truth, std::size_t misses) {
  if (predicted.size() != truth.size()) throw ShapeError("prediction and truth counts differ");
  EvalReport report;
  report.count = predicted.size();
  report.misses = misses;
  if (predicted.empty()) return report;
  const double n = static_cast<double>(predicted.size());
  AxisMetrics* axes[3] = {&report.x, &report.y, &report.z};
  for (std::size_t a = 0; a < 3; ++a) {
    double mean = 0.0;
    for (const auto& t : truth) mean += t[a];
    mean /= n;
    double sse = 0.0, sst = 0.0, sae = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      const double e = predicted[i][a] - truth[i][a];
      sse += e * e;
      sae += std::abs(e);
      sst += (truth[i][a] - mean) * (truth[i][a] - mean);
    }
    axes[a]->mae_mm = sae / n;
    axes[a]->rmse_mm = std::sqrt(sse / n);
    // A constant target has no variance to explain.
    axes[a]->r2 = sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity());
  }
  report.average.r2 = (report.x.r2 + report.y.r2 + report.z.r2) / 3.0;
  report.average.mae_mm = (report.x.mae_mm + report.y.mae_mm + report.z.mae_mm) / 3.0;
  report.average.rmse_mm = (report.x.rmse_mm + report.y.rmse_mm + report.z.rmse_mm) / 3.0;
  return report;
}

EvalReport EvaluateSinglePoint(std::span<const Detections> predictions, std::span<const sim::Sample* const> samples) {
  CheckSizes(predictions.size(), samples.size());
  std::vector<std::array<double, 3>> pred, truth;
  std::size_t misses = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i]->contacts.size() != 1) {
      throw ShapeError("single-point evaluation got sample " + std::to_string(samples[i]->index) + " with " +
                       std::to_string(samples[i]->contacts.size()) + " contacts");
    }
    if (predictions[i].empty()) {
      ++misses;
      continue;
    }
    const auto best = std::max_element(predictions[i].begin(), predictions[i].end(),
                                       [](const PeakDetection& a, const PeakDetection& b) {
                                         return a.peak_value < b.peak_value;
                                       });
    const codec::ContactPoint& c = samples[i]->contacts.front();
    pred.push_back({best->x_mm, best->y_mm, best->depth_mm});
    truth.push_back({c.x_mm, c.y_mm, c.depth_mm});
  }
  return ComputeEvalReport(pred, truth, misses);
}

std::string EvalReportToCsv(const EvalReport& report) {
  std::string out = "axis,r2,mae_mm,rmse_mm\n";
  const std::pair<const char*, const AxisMetrics*> rows[] = {
      {"average", &report.average}, {"x", &report.x}, {"y", &report.y}, {"z", &report.z}};
  for (const auto& [name, m] : rows) {
    out += std::string(name) + "," + Format(m->r2) + "," + Format(m->mae_mm) + "," + Format(m->rmse_mm) + "\n";
  }
  return out;
}

std::vector<long> SolveAssignment(std::span<const double> cost, std::size_t rows, std::size_t cols) {
  if (cost.size() != rows * cols) throw ShapeError("cost matrix size does not match its dimensions");
  if (rows == 0) return {};
  if (rows > cols) {
    std::vector<double> transposed(cost.size());
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) transposed[j * rows + i] = cost[i * cols + j];
    }
    const std::vector<long> by_col = SolveAssignment(transposed, cols, rows);
    std::vector<long> by_row(rows, -1);
    for (std::size_t j = 0; j < cols; ++j) by_row[static_cast<std::size_t>(by_col[j])] = static_cast<long>(j);
    return by_row;
  }

  // Shortest augmenting paths with potentials, 1-based with a virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t n = rows, m = cols;
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<long> result(n, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) result[p[j] - 1] = static_cast<long>(j - 1);
  }
  return result;
}

MatchResult MatchPeaks(std::span<const Point2> predictions, std::span<const Point2> truths, double gate_mm) {
  std::vector<double> cost(predictions.size() * truths.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    for (std::size_t j = 0; j < truths.size(); ++j) cost[i * truths.size() + j] = Distance(predictions[i], truths[j]);
  }
  const std::vector<long> assign = SolveAssignment(cost, predictions.size(), truths.size());
  MatchResult result;
  std::vector<bool> truth_used(truths.size(), false);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const long j = assign[i];
    if (j >= 0 && cost[i * truths.size() + static_cast<std::size_t>(j)] <= gate_mm) {
      result.pairs.emplace_back(i, static_cast<std::size_t>(j));
      truth_used[static_cast<std::size_t>(j)] = true;
    } else {
      result.false_positives.push_back(i);
    }
  }
  for (std::size_t j = 0; j < truths.size(); ++j) {
    if (!truth_used[j]) result.misses.push_back(j);
  }
  return result;
}

TwoPointReport TwoPointDiscrimination(std::span<const Detections> predictions,
                                      std::span<const sim::Sample* const> samples) {
  CheckSizes(predictions.size(), samples.size());
  const std::vector<double> separations = sim::DualSweepSeparations();
  TwoPointReport report;
  for (double s : separations) report.bins.push_back({s, 0.0, 0, 0});

  double distance_total = 0.0, position_total = 0.0, depth_total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const sim::Sample& sample = *samples[i];
    const auto bin = std::find_if(report.bins.begin(), report.bins.end(), [&](const SeparationBin& b) {
      return std::abs(b.separation_mm - sample.separation_mm) < 1e-9;
    });
    if (sample.contacts.size() != 2 || bin == report.bins.end()) {
      throw ShapeError("two-point evaluation needs dual-indenter samples at a nominal separation; sample " +
                       std::to_string(sample.index) + " does not qualify");
    }
    if (predictions[i].size() != 2) {
      ++bin->failures;
      ++report.failures;
      continue;
    }
    const double err =
        std::abs(Distance(ToPoint(predictions[i][0]), ToPoint(predictions[i][1])) - sample.separation_mm);
    bin->distance_mae_mm += err;
    ++bin->n;
    distance_total += err;
    ++report.valid;

    const Point2 p[2] = {ToPoint(predictions[i][0]), ToPoint(predictions[i][1])};
    const Point2 t[2] = {ToPoint(sample.contacts[0]), ToPoint(sample.contacts[1])};
    for (const auto& [pi, ti] : MatchPeaks(p, t).pairs) {
      position_total += Distance(p[pi], t[ti]);
      depth_total += std::abs(predictions[i][pi].depth_mm - sample.contacts[ti].depth_mm);
      ++report.matched_pairs;
    }
  }
  for (SeparationBin& b : report.bins) {
    if (b.n > 0) b.distance_mae_mm /= static_cast<double>(b.n);
  }
  if (report.valid > 0) report.distance_mae_mm = distance_total / static_cast<double>(report.valid);
  if (report.matched_pairs > 0) {
    report.position_error_mm = position_total / static_cast<double>(report.matched_pairs);
    report.depth_mae_mm = depth_total / static_cast<double>(report.matched_pairs);
  }
  return report;
}

std::string TwoPointReportToCsv(const TwoPointReport& report) {
  std::string out = "separation_mm,distance_mae_mm,n\n";
  for (const SeparationBin& b : report.bins) {
    out += Format(b.separation_mm) + "," + Format(b.distance_mae_mm) + "," + std::to_string(b.n) + "\n";
  }
  return out;
}

MultiContactReport MultiContactEval(std::span<const Detections> predictions,
                                    std::span<const sim::Sample* const> samples) {
  CheckSizes(predictions.size(), samples.size());
  MultiContactReport report;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const sim::Sample& sample = *samples[i];
    MultiplicityStats* stats = sample.contacts.size() == 2   ? &report.dual
                               : sample.contacts.size() == 3 ? &report.triple
                                                             : nullptr;
    if (stats == nullptr) continue;
    ++stats->samples;
    if (predictions[i].size() == sample.contacts.size()) ++stats->exact_count;
    std::vector<Point2> p, t;
    for (const PeakDetection& d : predictions[i]) p.push_back(ToPoint(d));
    for (const codec::ContactPoint& c : sample.contacts) t.push_back(ToPoint(c));
    const MatchResult match = MatchPeaks(p, t);
    for (const auto& [pi, ti] : match.pairs) {
      stats->position_error_mm += Distance(p[pi], t[ti]);
      stats->depth_error_mm += std::abs(predictions[i][pi].depth_mm - sample.contacts[ti].depth_mm);
      ++stats->matched_pairs;
    }
    stats->misses += match.misses.size();
    stats->false_positives += match.false_positives.size();
  }
  for (MultiplicityStats* s : {&report.dual, &report.triple}) {
    if (s->matched_pairs > 0) {
      s->position_error_mm /= static_cast<double>(s->matched_pairs);
      s->depth_error_mm /= static_cast<double>(s->matched_pairs);
    }
  }
  return report;
}

std::string MultiContactReportToCsv(const MultiContactReport& report) {
  std::string out =
      "multiplicity,samples,exact_count,matched_pairs,position_error_mm,depth_error_mm,misses,false_positives\n";
  const std::pair<const char*, const MultiplicityStats*> rows[] = {{"dual", &report.dual}, {"triple", &report.triple}};
  for (const auto& [name, s] : rows) {
    out += std::string(name) + "," + std::to_string(s->samples) + "," + std::to_string(s->exact_count) + "," +
           std::to_string(s->matched_pairs) + "," + Format(s->position_error_mm) + "," +
           Format(s->depth_error_mm) + "," + std::to_string(s->misses) + "," + std::to_string(s->false_positives) +
           "\n";
  }
  return out;
}

MetricTable ToTable(const EvalReport& report) {
  MetricTable table;
  table.columns = {"r2", "mae_mm", "rmse_mm"};
  const std::pair<const char*, const AxisMetrics*> rows[] = {
      {"average", &report.average}, {"x", &report.x}, {"y", &report.y}, {"z", &report.z}};
  for (const auto& [name, m] : rows) table.rows.push_back({name, {m->r2, m->mae_mm, m->rmse_mm}});
  return table;
}

MetricTable ToTable(const MultiContactReport& report) {
  MetricTable table;
  table.columns = {"position_error_mm", "depth_error_mm"};
  table.rows.push_back({"dual", {report.dual.position_error_mm, report.dual.depth_error_mm}});
  table.rows.push_back({"triple", {report.triple.position_error_mm, report.triple.depth_error_mm}});
  return table;
}

std::string CompareModels(const std::string& name_a, const MetricTable& a, const std::string& name_b,
                          const MetricTable& b) {
  auto check = [](const MetricTable& t, const std::string& name) {
    for (const auto& [label, values] : t.rows) {
      if (values.size() != t.columns.size()) throw ShapeError("table " + name + " row " + label + " is ragged");
    }
  };
  check(a, name_a);
  check(b, name_b);
  if (a.columns != b.columns) throw ShapeError("tables " + name_a + " and " + name_b + " have different columns");
  if (a.rows.size() != b.rows.size()) throw ShapeError("tables " + name_a + " and " + name_b + " have different rows");
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    if (a.rows[r].first != b.rows[r].first) {
      throw ShapeError("row " + a.rows[r].first + " of " + name_a + " has no counterpart in " + name_b);
    }
  }

  std::string out = "model,row";
  for (const std::string& c : a.columns) out += "," + c;
  out += "\n";
  auto emit = [&](const std::string& model, const MetricTable& t) {
    for (const auto& [label, values] : t.rows) {
      out += model + "," + label;
      for (double v : values) out += "," + Format(v);
      out += "\n";
    }
  };
  emit(name_a, a);
  emit(name_b, b);
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    out += "delta," + a.rows[r].first;
    for (std::size_t c = 0; c < a.columns.size(); ++c) out += "," + Format(b.rows[r].second[c] - a.rows[r].second[c]);
    out += "\n";
  }
  return out;
}

namespace {

std::vector<double> AverageRanks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    while (end + 1 < order.size() && values[order[end + 1]] == values[order[start]]) ++end;
    const double rank = 0.5 * static_cast<double>(start + end) + 1.0;
    for (std::size_t k = start; k <= end; ++k) ranks[order[k]] = rank;
    start = end + 1;
  }
  return ranks;
}

}  // namespace

double SpearmanCorrelation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ShapeError("Spearman correlation needs two equal series of length >= 2");
  const std::vector<double> ra = AverageRanks(a), rb = AverageRanks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

}  // namespace tacmap::train

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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "tacmap/error.hpp"
#include "tacmap/train/eval.hpp"
#include "tacmap/train/trainer.hpp"

namespace tacmap::train {
namespace {

// A 32x32 sensor keeps training tests fast.
sim::SensorModel SmallModel() {
  sim::SensorModel m;
  m.mapping.resolution = 32;
  m.sim.image_resolution = 32;
  m.sim.marker_grid = 9;
  m.sim.marker_disc_radius_px = 0.8;
  return m;
}

nn::UNetSpec SmallUNet() {
  nn::UNetSpec spec;
  spec.base_channels = 4;
  spec.depth = 2;
  spec.resolution = 32;
  return spec;
}

std::vector<const sim::Sample*> Pointers(const std::vector<sim::Sample>& samples) {
  std::vector<const sim::Sample*> out;
  for (const auto& s : samples) out.push_back(&s);
  return out;
}

TEST(Split, SizesDisjointExhaustiveAndSeeded) {
  const Split s = SplitDataset(5000, 0.8, 1);
  EXPECT_EQ(s.train.size(), 4000u);
  EXPECT_EQ(s.test.size(), 1000u);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), 5000u);
  EXPECT_EQ(*all.rbegin(), 4999u);
  EXPECT_EQ(SplitDataset(5000, 0.8, 1).train, s.train);
  EXPECT_NE(SplitDataset(5000, 0.8, 2).train, s.train);
  EXPECT_THROW(SplitDataset(10, 1.0, 0), ConfigError);
  EXPECT_THROW(SplitDataset(10, 0.0, 0), ConfigError);
  EXPECT_THROW(SplitDataset(0, 0.8, 0), ConfigError);
}

TEST(TrainConfig, DefaultsAndValidation) {
  const TrainConfig c;
  EXPECT_EQ(c.lr, 3e-4);
  EXPECT_EQ(c.batch_size, 8u);
  EXPECT_EQ(c.max_epochs, 50u);
  EXPECT_EQ(c.early_stop_patience, 10u);
  TrainConfig bad;
  bad.batch_size = 0;
  EXPECT_THROW(bad.Validate(), ConfigError);
  TrainConfig parsed;
  FromJson(ToJson(c), parsed);
  EXPECT_EQ(ToJson(parsed), ToJson(c));
  EXPECT_THROW(FromJson(nlohmann::json{{"epochs", 3}}, parsed), ConfigError);
}

class TrainingTest : public ::testing::Test {
 protected:
  void SetUp() override {
    model_ = SmallModel();
    samples_ = sim::GenerateSamples(3, sim::ScenarioSpec::Parse("single:60"), model_, 1);
    const Split split = SplitDataset(samples_.size(), 0.8, 3);
    train_ = Select(samples_, split.train);
    val_ = Select(samples_, split.test);
  }

  sim::SensorModel model_;
  std::vector<sim::Sample> samples_;
  std::vector<const sim::Sample*> train_, val_;
};

TEST_F(TrainingTest, IdenticalSeedsGiveIdenticalCurvesAndWeights) {
  TrainConfig cfg;
  cfg.max_epochs = 3;
  cfg.lr = 1e-3;
  nn::UNet a(SmallUNet(), 5), b(SmallUNet(), 5);
  const TrainResult ra = Train(a, train_, val_, cfg);
  const TrainResult rb = Train(b, train_, val_, cfg);
  EXPECT_EQ(LossCurveToCsv(ra.curve), LossCurveToCsv(rb.curve));
  EXPECT_EQ(a.State(), b.State());
  EXPECT_EQ(ra.curve.size(), 3u);
}

TEST_F(TrainingTest, LossDropsWellBelowInitial) {
  nn::UNet net(SmallUNet(), 1);
  const double initial = EvaluateLoss(net, train_, 8);
  TrainConfig cfg;
  cfg.max_epochs = 10;
  cfg.lr = 3e-3;
  const TrainResult r = Train(net, train_, val_, cfg);
  EXPECT_LT(r.curve.back().train_loss, 0.25 * initial);
}

TEST_F(TrainingTest, ReturnsBestValidationCheckpoint) {
  nn::UNet net(SmallUNet(), 2);
  TrainConfig cfg;
  cfg.max_epochs = 6;
  cfg.lr = 2e-2;  // large enough to make the validation curve bumpy
  const TrainResult r = Train(net, train_, val_, cfg);
  double best = std::numeric_limits<double>::infinity();
  for (const EpochStats& e : r.curve) best = std::min(best, e.val_loss);
  EXPECT_EQ(r.best_val_loss, best);
  EXPECT_EQ(r.curve[r.best_epoch - 1].val_loss, best);
  EXPECT_NEAR(EvaluateLoss(net, val_, cfg.batch_size), best, 1e-12);
}

TEST_F(TrainingTest, PatienceZeroStopsAtFirstNonImprovingEpoch) {
  nn::UNet net(SmallUNet(), 3);
  TrainConfig cfg;
  cfg.max_epochs = 30;
  cfg.early_stop_patience = 0;
  cfg.lr = 5e-2;
  const TrainResult r = Train(net, train_, val_, cfg);
  for (std::size_t i = 1; i + 1 < r.curve.size(); ++i) EXPECT_LT(r.curve[i].val_loss, r.curve[i - 1].val_loss);
  if (r.stopped_early) {
    EXPECT_GE(r.curve.back().val_loss, r.curve[r.curve.size() - 2].val_loss);
  } else {
    EXPECT_EQ(r.curve.size(), 30u);
  }
}

TEST_F(TrainingTest, DivergenceIsReportedWithLocation) {
  nn::UNet net(SmallUNet(), 4);
  auto state = net.State();
  for (auto& [name, t] : state) {
    if (name == "head.weight") t.Fill(std::numeric_limits<float>::quiet_NaN());
  }
  net.LoadState(state);
  TrainConfig cfg;
  cfg.max_epochs = 1;
  try {
    Train(net, train_, val_, cfg);
    FAIL() << "expected a training error";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("batch 0"), std::string::npos) << e.what();
  }
}

TEST_F(TrainingTest, BaselineTrainsOnLabels) {
  nn::CnnBaselineSpec spec;
  spec.resolution = 32;
  nn::CnnBaseline cnn(spec, 1);
  TrainConfig cfg;
  cfg.max_epochs = 2;
  const TrainResult r = Train(cnn, train_, val_, cfg);
  EXPECT_EQ(r.curve.size(), 2u);
  const CodecParams params{model_.kernel, model_.mapping, {}};
  for (const Detections& d : PredictSamples(cnn, val_, params)) EXPECT_EQ(d.size(), 1u);

  auto multi = sim::GenerateSamples(4, sim::ScenarioSpec::Parse("dual:2"), model_, 1);
  const auto multi_ptrs = Pointers(multi);
  EXPECT_THROW(Train(cnn, multi_ptrs, val_, cfg), ShapeError);
}

TEST(Csv, LossCurveHeader) {
  EXPECT_EQ(LossCurveToCsv({{1, 0.5, 0.25}}), "epoch,train_loss,val_loss\n1,0.5,0.25\n");
}

TEST(Report, PerfectPredictions) {
  std::vector<std::array<double, 3>> truth = {{1, 2, 3}, {-1, 0, 2}, {4, -3, 1}};
  const EvalReport r = ComputeEvalReport(truth, truth);
  for (const AxisMetrics* m : {&r.x, &r.y, &r.z, &r.average}) {
    EXPECT_EQ(m->mae_mm, 0.0);
    EXPECT_EQ(m->rmse_mm, 0.0);
    EXPECT_EQ(m->r2, 1.0);
  }
}

TEST(Report, ConstantPredictorHasNonPositiveR2) {
  Rng rng(1);
  std::vector<std::array<double, 3>> truth, constant;
  for (int i = 0; i < 200; ++i) {
    truth.push_back({rng.Uniform(-10, 10), rng.Uniform(-10, 10), rng.Uniform(0.5, 6)});
    constant.push_back({1.0, -2.0, 3.0});
  }
  const EvalReport r = ComputeEvalReport(constant, truth);
  EXPECT_LE(r.x.r2, 0.0);
  EXPECT_LE(r.y.r2, 0.0);
  EXPECT_LE(r.z.r2, 0.0);
}

TEST(Report, RmseDominatesMaeAndR2AtMostOne) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::array<double, 3>> truth, pred;
    const int n = 2 + static_cast<int>(rng.Below(30));
    for (int i = 0; i < n; ++i) {
      truth.push_back({rng.Uniform(-10, 10), rng.Uniform(-10, 10), rng.Uniform(0.5, 6)});
      pred.push_back({truth.back()[0] + rng.Normal(), truth.back()[1] + 3 * rng.Normal(), rng.Uniform(0, 6)});
    }
    const EvalReport r = ComputeEvalReport(pred, truth);
    for (const AxisMetrics* m : {&r.x, &r.y, &r.z}) {
      EXPECT_GE(m->rmse_mm, m->mae_mm);
      EXPECT_GE(m->mae_mm, 0.0);
      EXPECT_LE(m->r2, 1.0);
    }
  }
}

TEST(Report, SinglePointMissesAreExcluded) {
  sim::Sample a, b;
  a.contacts = {{1.0, 2.0, 3.0}};
  b.contacts = {{-1.0, 0.5, 2.0}};
  const std::vector<const sim::Sample*> samples = {&a, &b};
  PeakDetection weak{0.0, 0.0, 1.0, 0.1, 0, 0}, strong{1.0, 2.0, 3.0, 0.5, 0, 0};
  const std::vector<Detections> preds = {{weak, strong}, {}};
  const EvalReport r = EvaluateSinglePoint(preds, samples);
  EXPECT_EQ(r.count, 1u);
  EXPECT_EQ(r.misses, 1u);
  EXPECT_EQ(r.x.mae_mm, 0.0);
  EXPECT_EQ(r.z.mae_mm, 0.0);
  EXPECT_EQ(EvalReportToCsv(r).substr(0, 23), "axis,r2,mae_mm,rmse_mm\n");
}

double BruteForceCost(const std::vector<Point2>& p, const std::vector<Point2>& t) {
  // Minimum over injective maps from the smaller set into the larger.
  const bool swap = p.size() > t.size();
  const auto& small = swap ? t : p;
  const auto& large = swap ? p : t;
  std::vector<std::size_t> perm(large.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0;
    for (std::size_t i = 0; i < small.size(); ++i) {
      c += std::hypot(small[i].x - large[perm[i]].x, small[i].y - large[perm[i]].y);
    }
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

TEST(Matching, AgreesWithPermutationSearch) {
  Rng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Point2> p(1 + rng.Below(3)), t(1 + rng.Below(3));
    for (auto& q : p) q = {rng.Uniform(-10, 10), rng.Uniform(-10, 10)};
    for (auto& q : t) q = {rng.Uniform(-10, 10), rng.Uniform(-10, 10)};
    const MatchResult m = MatchPeaks(p, t, std::numeric_limits<double>::infinity());
    ASSERT_EQ(m.pairs.size(), std::min(p.size(), t.size()));
    double cost = 0;
    std::set<std::size_t> used_p, used_t;
    for (auto [i, j] : m.pairs) {
      cost += std::hypot(p[i].x - t[j].x, p[i].y - t[j].y);
      EXPECT_TRUE(used_p.insert(i).second);
      EXPECT_TRUE(used_t.insert(j).second);
    }
    EXPECT_NEAR(cost, BruteForceCost(p, t), 1e-9);
    EXPECT_EQ(m.pairs.size() + m.false_positives.size(), p.size());
    EXPECT_EQ(m.pairs.size() + m.misses.size(), t.size());
  }
}

TEST(Matching, LargerSetsAgreeWithPermutationSearch) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Point2> p(1 + rng.Below(7)), t(1 + rng.Below(7));
    for (auto& q : p) q = {rng.Uniform(-10, 10), rng.Uniform(-10, 10)};
    for (auto& q : t) q = {rng.Uniform(-10, 10), rng.Uniform(-10, 10)};
    const MatchResult m = MatchPeaks(p, t, std::numeric_limits<double>::infinity());
    double cost = 0;
    for (auto [i, j] : m.pairs) cost += std::hypot(p[i].x - t[j].x, p[i].y - t[j].y);
    EXPECT_NEAR(cost, BruteForceCost(p, t), 1e-9);
  }
}

TEST(Matching, IdentityCrossedAndGate) {
  const std::vector<Point2> pts = {{0, 0}, {5, 5}, {-3, 2}};
  const MatchResult id = MatchPeaks(pts, pts);
  ASSERT_EQ(id.pairs.size(), 3u);
  for (auto [i, j] : id.pairs) EXPECT_EQ(i, j);

  const std::vector<Point2> preds = {{0, 0}, {10, 0}}, truths = {{10, 0.5}, {0, 0.5}};
  const MatchResult crossed = MatchPeaks(preds, truths);
  ASSERT_EQ(crossed.pairs.size(), 2u);
  for (auto [i, j] : crossed.pairs) EXPECT_EQ(j, 1 - i);

  const std::vector<Point2> one = {{0, 0}};
  const MatchResult partial = MatchPeaks(one, truths);
  EXPECT_EQ(partial.pairs.size(), 1u);
  EXPECT_EQ(partial.misses.size(), 1u);

  const std::vector<Point2> far = {{0, 6}};
  const MatchResult gated = MatchPeaks(far, std::vector<Point2>{{0, 0}});
  EXPECT_TRUE(gated.pairs.empty());
  EXPECT_EQ(gated.misses.size(), 1u);
  EXPECT_EQ(gated.false_positives.size(), 1u);
}

PeakDetection AtContact(const codec::ContactPoint& c) { return {c.x_mm, c.y_mm, c.depth_mm, c.depth_mm / 6, 0, 0}; }

TEST(TwoPoint, PerfectPeaksGiveZeroReport) {
  const auto samples = sim::GenerateSamples(1, sim::ScenarioSpec::Parse("dual_sweep:2"), sim::SensorModel{}, 1);
  std::vector<Detections> preds;
  for (const auto& s : samples) preds.push_back({AtContact(s.contacts[0]), AtContact(s.contacts[1])});
  const TwoPointReport r = TwoPointDiscrimination(preds, Pointers(samples));
  ASSERT_EQ(r.bins.size(), 12u);
  for (const auto& b : r.bins) {
    EXPECT_EQ(b.n, 2u);
    EXPECT_NEAR(b.distance_mae_mm, 0.0, 1e-12);
  }
  EXPECT_EQ(r.valid, 24u);
  EXPECT_NEAR(r.position_error_mm, 0.0, 1e-12);
  EXPECT_NEAR(r.depth_mae_mm, 0.0, 1e-12);
  const std::string csv = TwoPointReportToCsv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 13);
  EXPECT_EQ(csv.substr(0, 32), "separation_mm,distance_mae_mm,n\n");
}

TEST(TwoPoint, GroundTruthHeatmapsBoundCodecError) {
  const auto samples = sim::GenerateSamples(2, sim::ScenarioSpec::Parse("dual_sweep:20"), sim::SensorModel{}, 2);
  const auto ptrs = Pointers(samples);
  const CodecParams params;
  const TwoPointReport r = TwoPointDiscrimination(GroundTruthDetections(ptrs, params), ptrs);
  EXPECT_EQ(r.failures, 0u);
  EXPECT_LE(r.distance_mae_mm, 0.2);
}

TEST(TwoPoint, WrongCountIsAFailure) {
  const auto samples = sim::GenerateSamples(1, sim::ScenarioSpec::Parse("dual_sweep:1"), sim::SensorModel{}, 1);
  std::vector<Detections> preds(samples.size());
  preds[0] = {AtContact(samples[0].contacts[0])};
  const TwoPointReport r = TwoPointDiscrimination(preds, Pointers(samples));
  EXPECT_EQ(r.failures, 12u);
  EXPECT_EQ(r.valid, 0u);
}

TEST(MultiContact, ExactPredictionsAndSections) {
  const auto samples = sim::GenerateSamples(3, sim::ScenarioSpec::Parse("dual:10,triple:10"), sim::SensorModel{}, 1);
  std::vector<Detections> preds;
  for (const auto& s : samples) {
    Detections d;
    for (const auto& c : s.contacts) d.push_back(AtContact(c));
    preds.push_back(d);
  }
  const MultiContactReport r = MultiContactEval(preds, Pointers(samples));
  EXPECT_EQ(r.dual.samples, 10u);
  EXPECT_GT(r.triple.samples, 0u);
  EXPECT_EQ(r.dual.position_error_mm, 0.0);
  EXPECT_EQ(r.triple.depth_error_mm, 0.0);
  EXPECT_EQ(r.dual.misses + r.triple.misses + r.dual.false_positives + r.triple.false_positives, 0u);
  const std::string csv = MultiContactReportToCsv(r);
  EXPECT_NE(csv.find("\ndual,"), std::string::npos);
  EXPECT_NE(csv.find("\ntriple,"), std::string::npos);
}

TEST(Compare, ZeroDeltasLayoutAndSchemaErrors) {
  EvalReport a;
  a.x = {0.9, 0.1, 0.2};
  a.y = {0.8, 0.2, 0.3};
  a.z = {0.7, 0.3, 0.4};
  a.average = {0.8, 0.2, 0.3};
  const std::string csv = CompareModels("cnn", ToTable(a), "unet", ToTable(a));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "model,row,r2,mae_mm,rmse_mm");
  std::size_t cnn_rows = 0, unet_rows = 0, delta_rows = 0;
  std::size_t pos = csv.find('\n') + 1;
  while (pos < csv.size()) {
    const std::string line = csv.substr(pos, csv.find('\n', pos) - pos);
    if (line.starts_with("cnn,")) ++cnn_rows;
    if (line.starts_with("unet,")) ++unet_rows;
    if (line.starts_with("delta,")) {
      ++delta_rows;
      EXPECT_NE(line.find(",0.000000,0.000000,0.000000"), std::string::npos) << line;
    }
    pos = csv.find('\n', pos) + 1;
  }
  EXPECT_EQ(cnn_rows, 4u);
  EXPECT_EQ(unet_rows, 4u);
  EXPECT_EQ(delta_rows, 4u);

  MetricTable missing = ToTable(a);
  missing.rows.pop_back();
  EXPECT_THROW(CompareModels("a", ToTable(a), "b", missing), ShapeError);
  EXPECT_THROW(CompareModels("a", ToTable(a), "b", ToTable(MultiContactReport{})), ShapeError);
}

TEST(Spearman, KnownValues) {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> up = {2, 4, 6, 8, 100}, down = {5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(SpearmanCorrelation(x, up), 1.0);
  EXPECT_DOUBLE_EQ(SpearmanCorrelation(x, down), -1.0);
  const std::vector<double> ties = {1, 1, 2, 2, 3};
  // Average ranks 1.5,1.5,3.5,3.5,5 against 1..5.
  EXPECT_NEAR(SpearmanCorrelation(x, ties), 0.9486832980505138, 1e-12);
}

}  // namespace
}  // namespace tacmap::train

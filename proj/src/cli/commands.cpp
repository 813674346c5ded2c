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

#include "tacmap/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "tacmap/cli/run_config.hpp"
#include "tacmap/error.hpp"
#include "tacmap/io/tensor_file.hpp"
#include "tacmap/nn/gradcheck.hpp"
#include "tacmap/sim/dataset.hpp"

namespace tacmap::cli {
namespace fs = std::filesystem;

int ExitCodeFor(const std::exception& e) {
  if (dynamic_cast<const MissingInputError*>(&e)) return kExitMissingInput;
  if (dynamic_cast<const ShapeError*>(&e)) return kExitShapeMismatch;
  if (dynamic_cast<const FormatError*>(&e)) return kExitFormatCorruption;
  return kExitFailure;
}

void SaveModel(const fs::path& path, const nn::Model& model) {
  io::NamedTensors named;
  for (const nn::Parameter& p : model.parameters()) named.emplace_back(p.name(), p.value());
  io::SaveCheckpoint(path, named);
}

std::unique_ptr<nn::Model> LoadModel(const fs::path& path, std::size_t resolution) {
  const fs::path file = fs::is_directory(path) ? path / "model.tvm" : path;
  std::map<std::string, nn::Tensor> state;
  for (auto& [name, tensor] : io::LoadCheckpoint(file)) {
    if (!state.emplace(name, std::move(tensor)).second) {
      throw FormatError(FormatError::Kind::kBadHeader, "checkpoint repeats parameter " + name);
    }
  }
  return nn::ModelFromState(state, resolution);
}

namespace {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::size_t threads = 1;
};

RunConfig LoadRunConfig(const GlobalOptions& g) {
  RunConfig config = g.config_path.empty() ? RunConfig{} : RunConfig::Load(g.config_path);
  if (g.seed) config.train.seed = *g.seed;
  return config;
}

std::string Fixed(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void WriteJson(const fs::path& path, const nlohmann::json& json) { io::WriteTextFile(path, json.dump(2) + "\n"); }

// Echo written next to every artifact. Holds no paths or timestamps so reruns
// compare byte for byte.
nlohmann::json Echo(const std::string& command, const RunConfig& config) {
  return {{"command", command}, {"run_config", config.ToJson()}};
}

train::CodecParams CodecFor(const sim::Dataset& data, const RunConfig& config) {
  return {data.model.kernel, data.model.mapping, config.eval.peaks};
}

// Samples the report commands look at: everything, or one side of the split
// recorded with the model.
std::vector<const sim::Sample*> SelectSplit(const sim::Dataset& data, const std::string& split,
                                            const fs::path& model_path) {
  std::vector<std::size_t> indices(data.samples.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  if (split != "all") {
    const fs::path dir = fs::is_directory(model_path) ? model_path : model_path.parent_path();
    const nlohmann::json echo = nlohmann::json::parse(io::ReadTextFile(dir / "config.json"));
    train::TrainConfig tc;
    train::FromJson(echo.at("run_config").at("train"), tc);
    const train::Split s = train::SplitDataset(data.samples.size(), tc.split_ratio, tc.seed);
    indices = split == "train" ? s.train : s.test;
  }
  return train::Select(data.samples, indices);
}

void AddSplitOption(CLI::App* cmd, std::string& split) {
  cmd->add_option("--split", split, "Samples to evaluate: all, or the train/test side of the model's split")
      ->check(CLI::IsMember({"all", "train", "test"}));
}

int GenData(const GlobalOptions& g, const std::string& out_dir, const std::string& scenario_text, std::ostream& out) {
  const RunConfig config = LoadRunConfig(g);
  const sim::ScenarioSpec scenario = sim::ScenarioSpec::Parse(scenario_text);
  const std::uint64_t seed = config.train.seed;
  sim::BuildDataset(out_dir, seed, scenario, config.sensor(), g.threads, Echo("gen-data", config));
  out << "dataset " << out_dir << ": " << scenario.total() << " samples (" << scenario.ToString() << "), seed "
      << seed << "\n";
  return kExitOk;
}

struct TrainFlags {
  std::string data, out, arch;
  std::optional<std::size_t> epochs, batch, patience;
  std::optional<double> lr;
};

int Train(const GlobalOptions& g, const TrainFlags& flags, std::ostream& out, std::ostream& err) {
  RunConfig config = LoadRunConfig(g);
  if (!flags.arch.empty()) config.model.arch = flags.arch;
  if (flags.epochs) config.train.max_epochs = *flags.epochs;
  if (flags.batch) config.train.batch_size = *flags.batch;
  if (flags.patience) config.train.early_stop_patience = *flags.patience;
  if (flags.lr) config.train.lr = *flags.lr;
  config.Validate();

  const sim::Dataset data = sim::LoadDataset(flags.data);
  if (data.samples.empty()) throw ConfigError("dataset " + flags.data + " is empty");
  const train::Split split = train::SplitDataset(data.samples.size(), config.train.split_ratio, config.train.seed);
  const auto train_set = train::Select(data.samples, split.train);
  const auto test_set = train::Select(data.samples, split.test);
  const nn::Shape& image = data.samples.front().image.shape();
  auto model = BuildModel(config.model, image.at(0), data.model.mapping.resolution, config.train.seed);
  if (image.at(1) != model->resolution() || image.at(2) != model->resolution()) {
    throw ShapeError("dataset images are " + nn::ShapeToString(image) + " but the heatmap grid is " +
                     std::to_string(model->resolution()));
  }

  const train::TrainResult result =
      train::Train(*model, train_set, test_set, config.train, [&](const train::EpochStats& e) {
        err << "epoch " << e.epoch << " train_loss " << Fixed(e.train_loss, 6) << " val_loss " << Fixed(e.val_loss, 6)
            << "\n";
      });

  fs::create_directories(flags.out);
  SaveModel(fs::path(flags.out) / "model.tvm", *model);
  io::WriteTextFile(fs::path(flags.out) / "loss.csv", train::LossCurveToCsv(result.curve));
  nlohmann::json echo = Echo("train", config);
  echo["dataset"] = {{"master_seed", data.master_seed},
                     {"scenario", data.scenario.ToString()},
                     {"samples", data.samples.size()},
                     {"train_samples", train_set.size()},
                     {"test_samples", test_set.size()}};
  echo["result"] = {{"epochs_run", result.curve.size()},
                    {"best_epoch", result.best_epoch},
                    {"best_val_loss", result.best_val_loss},
                    {"stopped_early", result.stopped_early}};
  WriteJson(fs::path(flags.out) / "config.json", echo);
  out << config.model.arch << ": " << result.curve.size() << " epochs, best epoch " << result.best_epoch
      << " val_loss " << Fixed(result.best_val_loss, 6) << " -> " << flags.out << "\n";
  return kExitOk;
}

struct ReportFlags {
  std::string data, model, report, split = "all", compare;
};

int Eval(const GlobalOptions& g, const ReportFlags& flags, std::ostream& out) {
  const RunConfig config = LoadRunConfig(g);
  const sim::Dataset data = sim::LoadDataset(flags.data);
  std::vector<const sim::Sample*> samples;
  for (const sim::Sample* s : SelectSplit(data, flags.split, flags.model)) {
    if (s->contacts.size() == 1) samples.push_back(s);
  }
  if (samples.empty()) throw ConfigError("dataset " + flags.data + " holds no single-contact samples");
  const train::CodecParams codec = CodecFor(data, config);

  auto model = LoadModel(flags.model, codec.mapping.resolution);
  const auto report =
      train::EvaluateSinglePoint(train::PredictSamples(*model, samples, codec, config.eval.batch_size), samples);
  fs::create_directories(flags.report);
  io::WriteTextFile(fs::path(flags.report) / "eval.csv", train::EvalReportToCsv(report));

  std::string summary = "single-point evaluation, " + nn::ArchitectureName(model->architecture()) + ", " +
                        std::to_string(report.count) + " samples, " + std::to_string(report.misses) + " misses\n";
  for (const auto& [axis, m] : {std::pair{"average", report.average}, {"x", report.x}, {"y", report.y},
                                {"z", report.z}}) {
    summary += std::string(axis) + ": R2 " + Fixed(m.r2) + "  MAE " + Fixed(m.mae_mm) + " mm  RMSE " +
               Fixed(m.rmse_mm) + " mm\n";
  }
  if (!flags.compare.empty()) {
    auto other = LoadModel(flags.compare, codec.mapping.resolution);
    const auto other_report =
        train::EvaluateSinglePoint(train::PredictSamples(*other, samples, codec, config.eval.batch_size), samples);
    io::WriteTextFile(fs::path(flags.report) / "compare.csv",
                      train::CompareModels(nn::ArchitectureName(model->architecture()), train::ToTable(report),
                                           nn::ArchitectureName(other->architecture()), train::ToTable(other_report)));
  }
  io::WriteTextFile(fs::path(flags.report) / "summary.txt", summary);
  WriteJson(fs::path(flags.report) / "config.json", Echo("eval", config));
  out << summary;
  return kExitOk;
}

int TwoPoint(const GlobalOptions& g, const ReportFlags& flags, std::ostream& out) {
  const RunConfig config = LoadRunConfig(g);
  const sim::Dataset data = sim::LoadDataset(flags.data);
  std::vector<const sim::Sample*> samples;
  for (const sim::Sample* s : SelectSplit(data, flags.split, flags.model)) {
    if (s->contacts.size() == 2 && s->separation_mm > 0.0) samples.push_back(s);
  }
  if (samples.empty()) throw ConfigError("dataset " + flags.data + " holds no dual-indenter samples");
  const train::CodecParams codec = CodecFor(data, config);
  auto model = LoadModel(flags.model, codec.mapping.resolution);
  const auto report =
      train::TwoPointDiscrimination(train::PredictSamples(*model, samples, codec, config.eval.batch_size), samples);
  fs::create_directories(flags.report);
  io::WriteTextFile(fs::path(flags.report) / "two_point.csv", train::TwoPointReportToCsv(report));
  const std::string summary = "two-point discrimination, " + std::to_string(samples.size()) + " samples, " +
                              std::to_string(report.valid) + " resolved, " + std::to_string(report.failures) +
                              " failures\ndistance MAE " + Fixed(report.distance_mae_mm) + " mm, position error " +
                              Fixed(report.position_error_mm) + " mm, depth MAE " + Fixed(report.depth_mae_mm) +
                              " mm\n";
  io::WriteTextFile(fs::path(flags.report) / "summary.txt", summary);
  WriteJson(fs::path(flags.report) / "config.json", Echo("two-point", config));
  out << summary;
  return kExitOk;
}

int MultiContact(const GlobalOptions& g, const ReportFlags& flags, std::ostream& out) {
  const RunConfig config = LoadRunConfig(g);
  const sim::Dataset data = sim::LoadDataset(flags.data);
  const auto samples = SelectSplit(data, flags.split, flags.model);
  const train::CodecParams codec = CodecFor(data, config);
  auto model = LoadModel(flags.model, codec.mapping.resolution);
  const auto report =
      train::MultiContactEval(train::PredictSamples(*model, samples, codec, config.eval.batch_size), samples);
  fs::create_directories(flags.report);
  io::WriteTextFile(fs::path(flags.report) / "multi_contact.csv", train::MultiContactReportToCsv(report));
  std::string summary;
  for (const auto& [name, s] : {std::pair{"dual", report.dual}, {"triple", report.triple}}) {
    summary += std::string(name) + ": " + std::to_string(s.samples) + " samples, position error " +
               Fixed(s.position_error_mm) + " mm, depth error " + Fixed(s.depth_error_mm) + " mm, " +
               std::to_string(s.misses) + " misses, " + std::to_string(s.false_positives) + " false positives\n";
  }
  if (!flags.compare.empty()) {
    auto other = LoadModel(flags.compare, codec.mapping.resolution);
    const auto other_report =
        train::MultiContactEval(train::PredictSamples(*other, samples, codec, config.eval.batch_size), samples);
    io::WriteTextFile(fs::path(flags.report) / "compare.csv",
                      train::CompareModels(flags.model, train::ToTable(report), flags.compare,
                                           train::ToTable(other_report)));
  }
  io::WriteTextFile(fs::path(flags.report) / "summary.txt", summary);
  WriteJson(fs::path(flags.report) / "config.json", Echo("multi-contact", config));
  out << summary;
  return kExitOk;
}

int Infer(const GlobalOptions& g, const std::string& model_path, const std::string& image_path,
          const std::string& out_path, std::ostream& out) {
  const RunConfig config = LoadRunConfig(g);
  nn::Tensor image = io::LoadTensor(image_path);
  if (image.ndim() == 2) image = image.Reshaped({1, 1, image.dim(0), image.dim(1)});
  if (image.ndim() == 3) image = image.Reshaped({1, image.dim(0), image.dim(1), image.dim(2)});
  if (image.ndim() != 4 || image.dim(0) != 1) {
    throw ShapeError("infer expects one image (H,W), (C,H,W) or (1,C,H,W), got " + nn::ShapeToString(image.shape()));
  }
  const train::CodecParams codec{config.kernel, config.mapping, config.eval.peaks};
  const std::size_t r = config.mapping.resolution;

  std::vector<codec::PeakDetection> peaks;
  if (model_path == "passthrough") {
    // The image's first channel is taken to already be a heatmap.
    if (image.dim(2) != r || image.dim(3) != r) {
      throw ShapeError("image is " + nn::ShapeToString(image.shape()) + " but the heatmap grid is " +
                       std::to_string(r));
    }
    std::vector<float> values(image.ptr(), image.ptr() + r * r);
    peaks = codec::ExtractPeaks(codec::HeatmapGrid(config.mapping, std::move(values)), codec.kernel, codec.peaks);
  } else {
    auto model = LoadModel(model_path, config.mapping.resolution);
    if (model->resolution() != r) {
      throw ShapeError("model resolution " + std::to_string(model->resolution()) + " differs from the grid " +
                       std::to_string(r));
    }
    peaks = train::PredictContacts(*model, image, codec).front();
  }
  io::WriteTextFile(out_path, codec::PeaksToCsv(peaks));
  WriteJson(out_path + ".config.json", Echo("infer", config));
  out << peaks.size() << " peaks -> " << out_path << "\n";
  return kExitOk;
}

int GradCheck(const GlobalOptions& g, const std::string& op, double tol, std::size_t instances, bool corrupt,
              std::ostream& out) {
  const auto& names = nn::GradCheckOpNames();
  std::vector<std::string> ops;
  if (op == "all") {
    ops = names;
  } else if (std::find(names.begin(), names.end(), op) != names.end()) {
    ops = {op};
  } else {
    throw ConfigError("unknown op '" + op + "'");
  }
  const std::uint64_t seed = g.seed.value_or(0);
  bool all_passed = true;
  char line[160];
  std::snprintf(line, sizeof(line), "%-20s %9s %9s %14s  %s\n", "op", "instances", "elements", "max_rel_error",
                "result");
  out << line;
  for (const std::string& name : ops) {
    const nn::GradCheckReport r = nn::RunOpGradCheck(name, seed, instances, tol, corrupt);
    all_passed = all_passed && r.passed;
    std::snprintf(line, sizeof(line), "%-20s %9zu %9zu %14.3e  %s\n", name.c_str(), r.instances, r.elements_checked,
                  r.max_rel_error, r.passed ? "PASS" : "FAIL");
    out << line;
  }
  return all_passed ? kExitOk : kExitFailure;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tactile contact localization via heatmap regression", "tacmap"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Master seed (default: train.seed from the config, else 0)");
  app.add_option("--config", g.config_path, "RunConfig JSON");
  app.add_option("--threads", g.threads, "Worker threads; affects speed only")->check(CLI::PositiveNumber);

  std::string out_path, scenario;
  auto* gen = app.add_subcommand("gen-data", "Simulate a labelled dataset");
  gen->add_option("--out", out_path, "Output directory")->required();
  gen->add_option("--scenario", scenario, "e.g. single:5000,dual:1000,triple:1000")->required();

  TrainFlags tf;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset");
  train_cmd->add_option("--data", tf.data, "Dataset directory")->required();
  train_cmd->add_option("--arch", tf.arch, "unet or cnn")->check(CLI::IsMember({"unet", "cnn"}));
  train_cmd->add_option("--out", tf.out, "Output directory")->required();
  train_cmd->add_option("--epochs", tf.epochs, "Maximum epochs");
  train_cmd->add_option("--lr", tf.lr, "Adam learning rate");
  train_cmd->add_option("--batch", tf.batch, "Batch size");
  train_cmd->add_option("--patience", tf.patience, "Early-stopping patience in epochs");

  ReportFlags ef, tpf, mcf;
  auto* eval_cmd = app.add_subcommand("eval", "Single-point accuracy report");
  auto* tp_cmd = app.add_subcommand("two-point", "Two-point discrimination sweep report");
  auto* mc_cmd = app.add_subcommand("multi-contact", "Dual/triple contact report");
  for (auto [cmd, f] : {std::pair{eval_cmd, &ef}, {tp_cmd, &tpf}, {mc_cmd, &mcf}}) {
    cmd->add_option("--data", f->data, "Dataset directory")->required();
    cmd->add_option("--model", f->model, "Checkpoint or training output directory")->required();
    cmd->add_option("--report", f->report, "Report output directory")->required();
    AddSplitOption(cmd, f->split);
  }
  eval_cmd->add_option("--compare", ef.compare, "Second model for a side-by-side table");
  mc_cmd->add_option("--compare", mcf.compare, "Second model for a side-by-side table");

  std::string infer_model, infer_image, infer_out;
  auto* infer = app.add_subcommand("infer", "Detect contacts in one image");
  infer->add_option("--model", infer_model, "Checkpoint, training directory, or 'passthrough'")->required();
  infer->add_option("--image", infer_image, "TVT1 image")->required();
  infer->add_option("--out", infer_out, "Peaks CSV")->required();

  std::string op = "all";
  double tol = 1e-5;
  std::size_t instances = 20;
  bool corrupt = false;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gc->add_option("--op", op, "Op name or 'all'");
  gc->add_option("--tol", tol, "Relative error tolerance");
  gc->add_option("--instances", instances, "Random instances per op")->check(CLI::PositiveNumber);
  gc->add_flag("--corrupt", corrupt, "Perturb analytic gradients (negative control)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitFailure;
  }

  try {
    if (gen->parsed()) return GenData(g, out_path, scenario, out);
    if (train_cmd->parsed()) return Train(g, tf, out, err);
    if (eval_cmd->parsed()) return Eval(g, ef, out);
    if (tp_cmd->parsed()) return TwoPoint(g, tpf, out);
    if (mc_cmd->parsed()) return MultiContact(g, mcf, out);
    if (infer->parsed()) return Infer(g, infer_model, infer_image, infer_out, out);
    if (gc->parsed()) return GradCheck(g, op, tol, instances, corrupt, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return ExitCodeFor(e);
  }
  return kExitFailure;
}

}  // namespace tacmap::cli

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

#include "tacmap/sim/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "tacmap/codec/codec_config.hpp"
#include "tacmap/io/tensor_file.hpp"
#include "tacmap/json_fields.hpp"

namespace tacmap::sim {

namespace fs = std::filesystem;

inline constexpr int kDatasetFormatVersion = 1;

std::string ScenarioKindName(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kSingle: return "single";
    case ScenarioKind::kDual: return "dual";
    case ScenarioKind::kTriple: return "triple";
    case ScenarioKind::kDualSweep: return "dual_sweep";
    case ScenarioKind::kEmpty: return "empty";
  }
  return "unknown";
}

ScenarioKind ParseScenarioKind(const std::string& name) {
  for (ScenarioKind k : {ScenarioKind::kSingle, ScenarioKind::kDual, ScenarioKind::kTriple, ScenarioKind::kDualSweep,
                         ScenarioKind::kEmpty}) {
    if (ScenarioKindName(k) == name) return k;
  }
  throw ConfigError("unknown scenario kind '" + name + "'");
}

ScenarioKind ScenarioSpec::KindOf(std::size_t index) const {
  if (index < single) return ScenarioKind::kSingle;
  index -= single;
  if (index < dual) return ScenarioKind::kDual;
  index -= dual;
  if (index < triple) return ScenarioKind::kTriple;
  index -= triple;
  if (index < 12 * dual_sweep) return ScenarioKind::kDualSweep;
  index -= 12 * dual_sweep;
  if (index < empty) return ScenarioKind::kEmpty;
  throw DomainError("sample index beyond the scenario total");
}

ScenarioSpec ScenarioSpec::Parse(const std::string& text) {
  ScenarioSpec spec;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("scenario item '" + item + "' must look like kind:count");
    const std::string key = item.substr(0, colon);
    const std::string value = item.substr(colon + 1);
    std::size_t count = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), count);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      throw ConfigError("scenario count '" + value + "' is not a non-negative integer");
    }
    switch (ParseScenarioKind(key)) {
      case ScenarioKind::kSingle: spec.single = count; break;
      case ScenarioKind::kDual: spec.dual = count; break;
      case ScenarioKind::kTriple: spec.triple = count; break;
      case ScenarioKind::kDualSweep: spec.dual_sweep = count; break;
      case ScenarioKind::kEmpty: spec.empty = count; break;
    }
  }
  if (spec.total() == 0) throw ConfigError("scenario '" + text + "' describes an empty dataset");
  return spec;
}

std::string ScenarioSpec::ToString() const {
  std::string out;
  auto add = [&out](const char* key, std::size_t n) {
    if (n == 0) return;
    if (!out.empty()) out += ",";
    out += std::string(key) + ":" + std::to_string(n);
  };
  add("single", single);
  add("dual", dual);
  add("triple", triple);
  add("dual_sweep", dual_sweep);
  add("empty", empty);
  return out;
}

namespace {

double UsableLimit(const SensorModel& model) {
  return model.mapping.half_side_mm() - model.sampler.Margin(model.kernel);
}

ContactSet RandomDual(Rng& rng, const SensorModel& model, double separation, double depth) {
  const double limit = UsableLimit(model);
  const double angle = rng.Uniform(0.0, std::numbers::pi);
  const double hx = 0.5 * separation * std::abs(std::cos(angle));
  const double hy = 0.5 * separation * std::abs(std::sin(angle));
  if (hx > limit || hy > limit) throw DomainError("workspace too small for the dual indenter");
  const Vec2 center{rng.Uniform(-(limit - hx), limit - hx), rng.Uniform(-(limit - hy), limit - hy)};
  return DualIndenterContacts(center, separation, angle, depth, model);
}

ContactSet RandomTriple(Rng& rng, const SensorModel& model) {
  constexpr double kLayoutRadius = 5.0;
  const double limit = UsableLimit(model) - kLayoutRadius;
  if (limit < 0.0) throw DomainError("workspace too small for the triple indenter");
  std::array<double, 3> heights{};
  for (double& h : heights) h = 0.5 * static_cast<double>(rng.Below(7));
  const auto [lo, hi] = std::minmax_element(heights.begin(), heights.end());
  const double spread = *hi - *lo;
  const double depth_lo = std::min(model.sampler.depth_min_mm + spread, model.sampler.depth_max_mm);
  const double base = rng.Uniform(depth_lo, model.sampler.depth_max_mm);
  const double angle = rng.Uniform(0.0, 2.0 * std::numbers::pi / 3.0);
  const Vec2 center{rng.Uniform(-limit, limit), rng.Uniform(-limit, limit)};
  return TripleIndenterContacts(center, angle, heights, base, model, kLayoutRadius);
}

}  // namespace

Sample GenerateSample(std::size_t index, std::uint64_t master_seed, const ScenarioSpec& scenario,
                      const SensorModel& model) {
  Sample s;
  s.index = index;
  s.kind = scenario.KindOf(index);
  s.seed = HashSeed(master_seed, index);
  Rng rng(s.seed);
  const std::vector<double> separations = DualSweepSeparations();
  switch (s.kind) {
    case ScenarioKind::kSingle:
      s.contacts = {SampleSingleContact(rng, model)};
      break;
    case ScenarioKind::kDual: {
      s.separation_mm = separations[rng.Below(separations.size())];
      const double depth = rng.Uniform(model.sampler.depth_min_mm, model.sampler.depth_max_mm);
      s.contacts = RandomDual(rng, model, s.separation_mm, depth);
      break;
    }
    case ScenarioKind::kTriple:
      s.contacts = RandomTriple(rng, model);
      break;
    case ScenarioKind::kDualSweep: {
      const std::size_t offset = index - scenario.single - scenario.dual - scenario.triple;
      s.separation_mm = separations[offset % separations.size()];
      const double depth = rng.Uniform(model.sampler.depth_min_mm, model.sampler.depth_max_mm);
      s.contacts = RandomDual(rng, model, s.separation_mm, depth);
      break;
    }
    case ScenarioKind::kEmpty:
      break;
  }
  s.image = SimulateImage(s.contacts, model, &rng);
  s.heatmap = codec::EncodeHeatmap(s.contacts, model.mapping, model.kernel);
  return s;
}

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
// handled exactly once; the first exception is rethrown.
template <typename Fn>
void ParallelFor(std::size_t n, std::size_t threads, Fn fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex mutex;
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) fn(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

std::string FormatShortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

nlohmann::json ModelJson(const SensorModel& model) {
  return {{"sim", ToJson(model.sim)},
          {"sampler", ToJson(model.sampler)},
          {"kernel", codec::ToJson(model.kernel)},
          {"mapping", codec::ToJson(model.mapping)}};
}

}  // namespace

std::vector<Sample> GenerateSamples(std::uint64_t master_seed, const ScenarioSpec& scenario, const SensorModel& model,
                                    std::size_t threads) {
  model.Validate();
  std::vector<Sample> samples(scenario.total());
  ParallelFor(samples.size(), threads,
              [&](std::size_t i) { samples[i] = GenerateSample(i, master_seed, scenario, model); });
  return samples;
}

std::string SampleStem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu", index);
  return buf;
}

std::string LabelsToCsv(const ContactSet& contacts) {
  std::string out = "x_mm,y_mm,depth_mm\n";
  for (const ContactPoint& c : contacts) {
    out += FormatShortest(c.x_mm) + "," + FormatShortest(c.y_mm) + "," + FormatShortest(c.depth_mm) + "\n";
  }
  return out;
}

ContactSet LabelsFromCsv(const std::string& text) {
  ContactSet contacts;
  std::stringstream stream(text);
  std::string line;
  bool first = true;
  while (std::getline(stream, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first && line.rfind("x_mm", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    double values[3];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int k = 0; k < 3; ++k) {
      auto [next, ec] = std::from_chars(p, end, values[k]);
      if (ec != std::errc()) throw ConfigError("malformed labels line '" + line + "'");
      p = next;
      if (k < 2) {
        if (p == end || *p != ',') throw ConfigError("malformed labels line '" + line + "'");
        ++p;
      }
    }
    if (p != end) throw ConfigError("malformed labels line '" + line + "'");
    contacts.push_back({values[0], values[1], values[2]});
  }
  return contacts;
}

void BuildDataset(const fs::path& root, std::uint64_t master_seed, const ScenarioSpec& scenario,
                  const SensorModel& model, std::size_t threads, const nlohmann::json& run_config) {
  model.Validate();
  std::error_code ec;
  fs::create_directories(root / "samples", ec);
  if (ec) throw IoError("cannot create dataset directory " + root.string() + ": " + ec.message());

  const std::size_t n = scenario.total();
  std::vector<nlohmann::json> entries(n);
  ParallelFor(n, threads, [&](std::size_t i) {
    const Sample s = GenerateSample(i, master_seed, scenario, model);
    const fs::path stem = root / "samples" / SampleStem(i);
    io::SaveTensor(stem.string() + ".img.tvt", s.image);
    io::SaveTensor(stem.string() + ".hm.tvt", s.heatmap.ToTensor());
    io::WriteTextFile(stem.string() + ".labels.csv", LabelsToCsv(s.contacts));
    nlohmann::json entry = {{"index", i}, {"kind", ScenarioKindName(s.kind)}, {"seed", s.seed}};
    if (s.separation_mm > 0.0) entry["separation_mm"] = s.separation_mm;
    entries[i] = std::move(entry);
  });

  const nlohmann::json manifest = {{"format_version", kDatasetFormatVersion},
                                   {"master_seed", master_seed},
                                   {"scenario", scenario.ToString()},
                                   {"counts",
                                    {{"single", scenario.single},
                                     {"dual", scenario.dual},
                                     {"triple", scenario.triple},
                                     {"dual_sweep", 12 * scenario.dual_sweep},
                                     {"empty", scenario.empty},
                                     {"total", n}}},
                                   {"model", ModelJson(model)},
                                   {"run_config", run_config},
                                   {"samples", entries}};
  io::WriteTextFile(root / "manifest.json", manifest.dump(2) + "\n");
}

Dataset LoadDataset(const fs::path& root) {
  if (!fs::exists(root / "manifest.json")) throw MissingInputError("no dataset manifest at " + root.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(io::ReadTextFile(root / "manifest.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("dataset manifest is not valid JSON: " + std::string(e.what()));
  }
  if (manifest.value("format_version", 0) != kDatasetFormatVersion) {
    throw ConfigError("unsupported dataset format version");
  }

  Dataset data;
  data.master_seed = manifest.value("master_seed", std::uint64_t{0});
  if (manifest.contains("scenario")) data.scenario = ScenarioSpec::Parse(manifest["scenario"].get<std::string>());
  if (manifest.contains("model")) {
    const nlohmann::json& m = manifest["model"];
    JsonFields fields(m, "model");
    nlohmann::json sim_json = nlohmann::json::object(), sampler_json = nlohmann::json::object();
    nlohmann::json kernel_json = nlohmann::json::object(), mapping_json = nlohmann::json::object();
    fields.Get("sim", sim_json);
    fields.Get("sampler", sampler_json);
    fields.Get("kernel", kernel_json);
    fields.Get("mapping", mapping_json);
    fields.Finish();
    FromJson(sim_json, data.model.sim);
    FromJson(sampler_json, data.model.sampler);
    codec::FromJson(kernel_json, data.model.kernel);
    codec::FromJson(mapping_json, data.model.mapping);
  }
  data.run_config = manifest.value("run_config", nlohmann::json());

  const nlohmann::json& entries = manifest.at("samples");
  data.samples.reserve(entries.size());
  for (const nlohmann::json& entry : entries) {
    Sample s;
    s.index = entry.at("index").get<std::size_t>();
    s.seed = entry.value("seed", std::uint64_t{0});
    s.separation_mm = entry.value("separation_mm", 0.0);
    const fs::path stem = root / "samples" / SampleStem(s.index);
    s.image = io::LoadTensor(stem.string() + ".img.tvt");
    s.contacts = LabelsFromCsv(io::ReadTextFile(stem.string() + ".labels.csv"));
    if (entry.contains("kind")) {
      s.kind = ParseScenarioKind(entry["kind"].get<std::string>());
    } else {
      s.kind = s.contacts.empty()       ? ScenarioKind::kEmpty
               : s.contacts.size() == 1 ? ScenarioKind::kSingle
               : s.contacts.size() == 2 ? ScenarioKind::kDual
                                        : ScenarioKind::kTriple;
    }
    const fs::path hm = stem.string() + ".hm.tvt";
    if (fs::exists(hm)) {
      s.heatmap = codec::HeatmapGrid::FromTensor(io::LoadTensor(hm), data.model.mapping);
    } else {
      s.heatmap = codec::EncodeHeatmap(s.contacts, data.model.mapping, data.model.kernel);
    }
    data.samples.push_back(std::move(s));
  }
  return data;
}

}  // namespace tacmap::sim

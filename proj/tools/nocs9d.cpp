// Copyright 2026 The nocs9d Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "nocs9d/pipeline.hpp"

namespace {

using namespace nocs9d;

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;

#ifndef NOCS9D_DATA_DIR
#define NOCS9D_DATA_DIR "data"
#endif

// "5:5,10:5,10:10" -> operating points
std::vector<OperatingPoint> parse_operating_points(const std::string& text) {
  std::vector<OperatingPoint> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "threshold '" + item + "' is not of the form a:b");
    }
    try {
      out.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "threshold '" + item + "' is not numeric");
    }
    if (!(out.back().a_deg > 0.0) || !(out.back().b_cm > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "threshold '" + item + "' must be positive");
    }
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, "empty threshold list");
  return out;
}

void require_ascending(const std::vector<double>& v, const char* what) {
  if (v.empty()) throw Error(ErrorCode::kInvalidArgument, fmt::format("{} is empty", what));
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, fmt::format("{} must be strictly ascending", what));
    }
  }
}

void print_summary(const RunSummary& s, const std::string& what) {
  spdlog::info("{}: {} succeeded, {} failed", what, s.succeeded, s.failures.size());
  for (const auto& f : s.failures) std::cerr << "FAILED " << f << '\n';
}

std::string pct(const nlohmann::json& v) {
  return v.is_null() ? std::string("N/A") : fmt::format("{:.1f}", 100.0 * v.get<double>());
}

// Prints report.json from an evaluation directory as a fixed-width table.
int print_report(const fs::path& dir) {
  std::ifstream in(dir / "report.json");
  if (!in) throw Error(ErrorCode::kIo, "cannot read '" + (dir / "report.json").string() + "'");
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  std::vector<std::string> cols;
  for (const auto& [k, _] : j["overall"]["iou"].items()) cols.push_back("Abs " + k);
  for (const auto& [k, _] : j["overall"]["abs"].items()) cols.push_back("Abs " + k);
  for (const auto& [k, _] : j["overall"]["rel"].items()) cols.push_back("Rel " + k);
  std::string line = fmt::format("{:<14}", "category");
  for (const auto& c : cols) line += fmt::format("{:>16}", c);
  std::cout << line << '\n';
  auto row = [&](const std::string& name, const nlohmann::ordered_json& m) {
    std::string out = fmt::format("{:<14}", name);
    for (const char* group : {"iou", "abs", "rel"}) {
      for (const auto& [_, v] : m[group].items()) out += fmt::format("{:>16}", pct(v));
    }
    std::cout << out << '\n';
  };
  for (const auto& c : j["categories"]) row(c["category_id"].get<std::string>(), c);
  row("all", j["overall"]);
  return kExitOk;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("nocs9d");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("NOCS9D_LOG")) spdlog::cfg::helpers::load_levels(env);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"9-DoF pose and size recovery from NOCS maps, with evaluation tools"};
  app.require_subcommand(1);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic BOP-format dataset");
  fs::path synth_out;
  std::string camera_path = std::string(NOCS9D_DATA_DIR) + "/camera_ycbv.json";
  SynthConfig synth_cfg;
  std::vector<std::string> shapes{"box", "cylinder", "prism", "lshape"};
  synth_cmd->add_option("--out", synth_out, "dataset root to create")->required();
  synth_cmd->add_option("--camera", camera_path, "intrinsics JSON")->capture_default_str();
  synth_cmd->add_option("--views", synth_cfg.views, "views per object")->capture_default_str()
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--shapes", shapes, "subset of box,cylinder,prism,lshape")->delimiter(',');
  synth_cmd->add_option("--nocs-sigma", synth_cfg.noise.nocs_sigma, "NOCS noise std")->capture_default_str();
  synth_cmd->add_option("--depth-sigma", synth_cfg.noise.depth_sigma, "depth noise std [m]")->capture_default_str();
  synth_cmd->add_option("--outliers", synth_cfg.noise.outlier_fraction, "NOCS outlier fraction")
      ->capture_default_str();
  synth_cmd->add_option("--multi-object-views", synth_cfg.multi_object_views,
                        "views of an extra scene with all objects")->capture_default_str();
  synth_cmd->add_option("--seed", synth_cfg.seed, "viewpoint seed")->capture_default_str();
  synth_cmd->add_option("--noise-seed", synth_cfg.noise.seed, "noise seed")->capture_default_str();
  synth_cmd->add_option("--jobs", synth_cfg.jobs, "worker threads")->capture_default_str();

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit 9-DoF poses from NOCS + depth");
  FitOptions fit_opt;
  fs::path fit_dataset;
  fit_cmd->add_option("--dataset", fit_dataset, "dataset root")->required();
  fit_cmd->add_option("--split", fit_opt.dataset.split, "split directory")->capture_default_str();
  fit_cmd->add_option("--out", fit_opt.output, "predictions CSV")->required();
  fit_cmd->add_option("--ransac-iters", fit_opt.ransac.max_iterations)->capture_default_str();
  fit_cmd->add_option("--inlier-thresh", fit_opt.ransac.inlier_threshold, "meters")->capture_default_str();
  fit_cmd->add_option("--min-inliers", fit_opt.ransac.min_inliers)->capture_default_str();
  fit_cmd->add_option("--confidence", fit_opt.ransac.confidence,
                      "adaptive stop confidence, 1 disables")->capture_default_str();
  fit_cmd->add_option("--seed", fit_opt.ransac.seed)->capture_default_str();
  fit_cmd->add_option("--jobs", fit_opt.jobs, "worker threads")->capture_default_str();

  // baseline
  auto* base_cmd = app.add_subcommand("baseline", "run a baseline pose estimator");
  BaselineOptions base_opt;
  fs::path base_dataset;
  std::string method = "pca";
  base_cmd->add_option("method", method, "baseline method")->check(CLI::IsMember({"pca"}))
      ->capture_default_str();
  base_cmd->add_option("--dataset", base_dataset, "dataset root")->required();
  base_cmd->add_option("--split", base_opt.dataset.split, "split directory")->capture_default_str();
  base_cmd->add_option("--out", base_opt.output, "predictions CSV")->required();
  base_cmd->add_option("--jobs", base_opt.jobs, "worker threads")->capture_default_str();

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "score predictions against ground truth");
  EvaluateOptions eval_opt;
  fs::path eval_dataset;
  std::string iou_mode = "aabb";
  std::string thresholds = "5:5,10:5,10:10";
  std::vector<double> iou_thresholds{0.5};
  eval_cmd->add_option("--dataset", eval_dataset, "dataset root")->required();
  eval_cmd->add_option("--split", eval_opt.dataset.split, "split directory")->capture_default_str();
  eval_cmd->add_option("--predictions", eval_opt.predictions, "predictions CSV")->required();
  eval_cmd->add_option("--out", eval_opt.output_dir, "report directory")->required();
  eval_cmd->add_option("--iou-mode", iou_mode)->check(CLI::IsMember({"aabb", "oriented"}))
      ->capture_default_str();
  eval_cmd->add_option("--thresholds", thresholds, "operating points a:b (deg:cm)")->capture_default_str();
  eval_cmd->add_option("--iou-thresholds", iou_thresholds, "IoU thresholds")->delimiter(',');
  eval_cmd->add_option("--jobs", eval_opt.eval.jobs, "worker threads")->capture_default_str();

  // report
  auto* report_cmd = app.add_subcommand("report", "print an evaluation report as a table");
  fs::path report_dir;
  report_cmd->add_option("--out", report_dir, "report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; usage errors are fatal
    return app.exit(e) == 0 ? kExitOk : kExitFatal;
  }

  try {
    if (synth_cmd->parsed()) {
      synth_cfg.camera = read_intrinsics(camera_path);
      std::vector<SynthObject> objects;
      for (const auto& o : default_objects()) {
        if (std::find(shapes.begin(), shapes.end(), o.category) != shapes.end()) objects.push_back(o);
      }
      for (const auto& s : shapes) synth::parse_shape_kind(s);
      synth_cfg.objects = objects;
      generate_dataset({synth_out}, synth_cfg);
      return kExitOk;
    }
    if (fit_cmd->parsed()) {
      fit_opt.dataset.root = fit_dataset;
      const auto summary = cmd_fit(fit_opt);
      print_summary(summary, "fit");
      return summary.exit_code();
    }
    if (base_cmd->parsed()) {
      base_opt.dataset.root = base_dataset;
      const auto summary = cmd_baseline_pca(base_opt);
      print_summary(summary, "baseline " + method);
      return summary.exit_code();
    }
    if (eval_cmd->parsed()) {
      eval_opt.dataset.root = eval_dataset;
      eval_opt.eval.operating_points = parse_operating_points(thresholds);
      require_ascending(iou_thresholds, "--iou-thresholds");
      eval_opt.eval.iou_thresholds = iou_thresholds;
      eval_opt.eval.iou_mode = iou_mode == "oriented" ? IouMode::kOriented : IouMode::kAabb;
      cmd_evaluate(eval_opt);
      return print_report(eval_opt.output_dir);
    }
    if (report_cmd->parsed()) return print_report(report_dir);
  } catch (const Error& e) {
    spdlog::error("{}: {}", to_string(e.code()), e.what());
    return kExitFatal;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFatal;
  }
  return kExitFatal;
}

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
#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "nocs9d/metrics.hpp"

// Report files written by `evaluate`:
//
//   report.json     stable key order:
//                   {version, iou_mode, iou_thresholds, operating_points,
//                    categories: [{category_id, num_samples, num_failed, flags,
//                                  iou, abs, rel, rel_anchor,
//                                  mean_relative_scale}],
//                    overall: {iou, abs, rel}}
//                   metric objects are keyed "IoU@50", "5deg_5cm", ...; N/A is null.
//   report.csv      one row per category plus "all"; columns follow the
//                   results-table layout (Abs IoU, Abs a°b cm, Rel a°b cm),
//                   values in percent, N/A empty.
//   ap_curves.csv   long format: category,curve,threshold,precision

namespace nocs9d {

inline std::string iou_key(double t) { return fmt::format("IoU@{:g}", 100.0 * t); }
inline std::string op_key(const OperatingPoint& op) {
  return fmt::format("{:g}deg_{:g}cm", op.a_deg, op.b_cm);
}

namespace detail {

using OJson = nlohmann::ordered_json;

inline OJson optional_json(const std::optional<double>& v) {
  return v ? OJson(*v) : OJson(nullptr);
}

inline OJson metric_json(const MetricSet& m, const EvalConfig& cfg) {
  OJson iou = OJson::object();
  for (std::size_t i = 0; i < cfg.iou_thresholds.size(); ++i) {
    iou[iou_key(cfg.iou_thresholds[i])] = optional_json(m.iou[i]);
  }
  OJson abs = OJson::object();
  OJson rel = OJson::object();
  for (std::size_t i = 0; i < cfg.operating_points.size(); ++i) {
    abs[op_key(cfg.operating_points[i])] = optional_json(m.abs[i]);
    rel[op_key(cfg.operating_points[i])] = optional_json(m.rel[i]);
  }
  OJson j = OJson::object();
  j["iou"] = std::move(iou);
  j["abs"] = std::move(abs);
  j["rel"] = std::move(rel);
  return j;
}

inline std::string percent(const std::optional<double>& v) {
  return v ? fmt::format("{:.2f}", 100.0 * *v) : std::string();
}

}  // namespace detail

inline nlohmann::ordered_json report_to_json(const MetricReport& report) {
  using detail::OJson;
  const auto& cfg = report.config;
  OJson j = OJson::object();
  j["version"] = 1;
  j["iou_mode"] = cfg.iou_mode == IouMode::kAabb ? "aabb" : "oriented";
  j["iou_thresholds"] = cfg.iou_thresholds;
  OJson ops = OJson::array();
  for (const auto& op : cfg.operating_points) ops.push_back(OJson::array({op.a_deg, op.b_cm}));
  j["operating_points"] = std::move(ops);
  OJson cats = OJson::array();
  for (const auto& c : report.categories) {
    OJson e = OJson::object();
    e["category_id"] = c.category_id;
    e["num_samples"] = c.num_samples;
    e["num_failed"] = c.num_failed;
    e["flags"] = c.flags;
    const OJson m = detail::metric_json(c.metrics, cfg);
    e["iou"] = m["iou"];
    e["abs"] = m["abs"];
    e["rel"] = m["rel"];
    e["rel_anchor"] = c.rel_anchor ? OJson(*c.rel_anchor) : OJson(nullptr);
    e["mean_relative_scale"] =
        c.mean_relative_scale
            ? OJson::array({c.mean_relative_scale->x(), c.mean_relative_scale->y(),
                            c.mean_relative_scale->z()})
            : OJson(nullptr);
    cats.push_back(std::move(e));
  }
  j["categories"] = std::move(cats);
  j["overall"] = detail::metric_json(report.overall, cfg);
  return j;
}

inline std::string report_table_csv(const MetricReport& report) {
  const auto& cfg = report.config;
  std::string out = "category";
  for (double t : cfg.iou_thresholds) out += fmt::format(",Abs IoU@{:g}", 100.0 * t);
  for (const auto& op : cfg.operating_points) out += fmt::format(",Abs {:g}deg{:g}cm", op.a_deg, op.b_cm);
  for (const auto& op : cfg.operating_points) out += fmt::format(",Rel {:g}deg{:g}cm", op.a_deg, op.b_cm);
  out += '\n';
  auto row = [&](const std::string& name, const MetricSet& m) {
    out += name;
    for (const auto& v : m.iou) out += "," + detail::percent(v);
    for (const auto& v : m.abs) out += "," + detail::percent(v);
    for (const auto& v : m.rel) out += "," + detail::percent(v);
    out += '\n';
  };
  for (const auto& c : report.categories) row(c.category_id, c.metrics);
  row("all", report.overall);
  return out;
}

inline std::string ap_curves_csv(const MetricReport& report) {
  const auto& cfg = report.config;
  std::string out = "category,curve,threshold,precision\n";
  auto emit = [&](const std::string& cat, const char* name, const std::vector<double>& grid,
                  const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size() && i < grid.size(); ++i) {
      out += fmt::format("{},{},{:g},{:.6f}\n", cat, name, grid[i], values[i]);
    }
  };
  for (const auto& c : report.categories) {
    emit(c.category_id, "abs_iou", cfg.iou_grid, c.curves.iou);
    emit(c.category_id, "abs_rotation_deg", cfg.rotation_grid_deg, c.curves.abs_rotation);
    emit(c.category_id, "abs_translation_cm", cfg.translation_grid_cm, c.curves.abs_translation);
    emit(c.category_id, "rel_rotation_deg", cfg.rotation_grid_deg, c.curves.rel_rotation);
    emit(c.category_id, "rel_translation_cm", cfg.translation_grid_cm, c.curves.rel_translation);
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

/// Writes report.json, report.csv and ap_curves.csv into `dir`.
inline void write_report(const std::filesystem::path& dir, const MetricReport& report) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  write_text(dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_text(dir / "report.csv", report_table_csv(report));
  write_text(dir / "ap_curves.csv", ap_curves_csv(report));
}

}  // namespace nocs9d

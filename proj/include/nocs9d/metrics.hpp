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

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "nocs9d/box_iou.hpp"
#include "nocs9d/core_geometry.hpp"
#include "nocs9d/symmetry.hpp"

namespace nocs9d {

/// One evaluated instance. A missing prediction (failed fit) counts as a
/// miss for every metric.
struct PredictionRecord {
  std::string sample_id;
  std::string category_id;
  std::optional<Pose9D> predicted;
  Pose9D ground_truth;
  SymmetryAnnotation symmetry;
};

struct OperatingPoint {
  double a_deg = 0.0;
  double b_cm = 0.0;

  friend bool operator==(const OperatingPoint&, const OperatingPoint&) = default;
};

inline double translation_error_cm(const Vector3d& a, const Vector3d& b) {
  return 100.0 * (a - b).norm();
}

namespace detail {

inline void require_single_category(std::span<const PredictionRecord> records) {
  for (const auto& r : records) {
    if (r.category_id != records.front().category_id) {
      throw Error(ErrorCode::kInvalidArgument,
                  "records mix categories '" + records.front().category_id + "' and '" +
                      r.category_id + "'");
    }
  }
}

inline bool within(double rot_deg, double trans_cm, double a_deg, double b_cm) {
  return rot_deg < a_deg && trans_cm < b_cm;
}

}  // namespace detail

/// Fraction of records whose symmetry-aware rotation error is below a_deg
/// and translation error below b_cm.
inline double abs_precision(std::span<const PredictionRecord> records, double a_deg,
                            double b_cm) {
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "abs_precision: no records");
  detail::require_single_category(records);
  std::size_t hits = 0;
  for (const auto& r : records) {
    if (!r.predicted) continue;
    const double rot =
        sym_rotation_error_deg(r.predicted->rotation, r.ground_truth.rotation, r.symmetry);
    const double trans = translation_error_cm(r.predicted->translation, r.ground_truth.translation);
    hits += detail::within(rot, trans, a_deg, b_cm);
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

/// Predicted-to-ground-truth relative pose: invert(gt) ∘ pred, rigid parts.
inline SimilarityTransform relative_pose(const Pose9D& pred, const Pose9D& gt) {
  return compose(invert(rigid_part(gt)), rigid_part(pred));
}

/// Binary consistency test between two relative poses.
///
/// Rotations are compared as the ground-truth frame seen from each predicted
/// frame (the inverse rotations), which is where the object-frame symmetry
/// acts; translations are compared in the ground-truth object frame.
inline bool relative_within(const SimilarityTransform& rel_k, const SimilarityTransform& rel_j,
                            const SymmetryAnnotation& sym, double a_deg, double b_cm) {
  const double rot = sym_rotation_error_deg(rel_k.rotation.transpose(),
                                            rel_j.rotation.transpose(), sym);
  const double trans = translation_error_cm(rel_k.translation, rel_j.translation);
  return detail::within(rot, trans, a_deg, b_cm);
}

struct RelativePrecision {
  double precision = 0.0;
  std::size_t anchor = 0;  // lowest index among the maximizing anchors
};

inline RelativePrecision rel_precision_detail(std::span<const PredictionRecord> records,
                                              double a_deg, double b_cm) {
  if (records.size() < 2) {
    throw Error(ErrorCode::kInsufficientSamples, "relative precision needs >= 2 records");
  }
  detail::require_single_category(records);
  std::vector<std::optional<SimilarityTransform>> rel;
  rel.reserve(records.size());
  for (const auto& r : records) {
    rel.push_back(r.predicted ? std::optional(relative_pose(*r.predicted, r.ground_truth))
                              : std::nullopt);
  }
  RelativePrecision best;
  std::size_t best_count = 0;
  bool first = true;
  for (std::size_t j = 0; j < rel.size(); ++j) {
    std::size_t count = 0;
    if (rel[j]) {
      for (std::size_t k = 0; k < rel.size(); ++k) {
        if (k == j || !rel[k]) continue;
        count += relative_within(*rel[k], *rel[j], records[k].symmetry, a_deg, b_cm);
      }
    }
    if (first || count > best_count) {
      best_count = count;
      best.anchor = j;
      first = false;
    }
  }
  best.precision = static_cast<double>(best_count) / static_cast<double>(records.size() - 1);
  return best;
}

/// Anchor-maximized pairwise consistency of the relative poses.
inline double rel_precision(std::span<const PredictionRecord> records, double a_deg,
                            double b_cm) {
  return rel_precision_detail(records, a_deg, b_cm).precision;
}

/// Fraction of records with IoU >= threshold.
inline double iou_precision(std::span<const PredictionRecord> records, double threshold,
                            IouMode mode = IouMode::kAabb) {
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "iou_precision: no records");
  std::size_t hits = 0;
  for (const auto& r : records) {
    if (r.predicted && iou3d(*r.predicted, r.ground_truth, mode) >= threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

inline std::vector<double> linear_grid(double lo, double hi, double step) {
  std::vector<double> g;
  const auto n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= n; ++i) g.push_back(lo + step * i);
  return g;
}

struct EvalConfig {
  std::vector<double> iou_thresholds{0.5};
  std::vector<OperatingPoint> operating_points{{5, 5}, {10, 5}, {10, 10}};
  // AP-curve grids; the other threshold is unconstrained along each curve.
  std::vector<double> iou_grid = linear_grid(0.0, 1.0, 0.01);
  std::vector<double> rotation_grid_deg = linear_grid(0.0, 60.0, 1.0);
  std::vector<double> translation_grid_cm = linear_grid(0.0, 20.0, 0.5);
  IouMode iou_mode = IouMode::kAabb;
  unsigned jobs = 1;
};

/// Per-category (or overall) metric values; std::nullopt marks N/A.
struct MetricSet {
  std::vector<std::optional<double>> iou;  // parallel to EvalConfig::iou_thresholds
  std::vector<std::optional<double>> abs;  // parallel to operating_points
  std::vector<std::optional<double>> rel;
};

struct ApCurves {
  std::vector<double> iou;               // over iou_grid
  std::vector<double> abs_rotation;      // over rotation_grid_deg
  std::vector<double> abs_translation;   // over translation_grid_cm
  std::vector<double> rel_rotation;      // empty when relative is N/A
  std::vector<double> rel_translation;
};

struct CategoryReport {
  std::string category_id;
  std::size_t num_samples = 0;
  std::size_t num_failed = 0;
  std::vector<std::string> flags;
  MetricSet metrics;
  std::optional<std::size_t> rel_anchor;  // for the first operating point
  std::optional<Vector3d> mean_relative_scale;  // diagnostic: pred / gt per axis
  ApCurves curves;
};

struct MetricReport {
  EvalConfig config;
  std::vector<CategoryReport> categories;  // sorted by category_id
  MetricSet overall;                       // unweighted mean over categories
};

namespace detail {

inline CategoryReport evaluate_category(const std::string& category,
                                        const std::vector<PredictionRecord>& records,
                                        const EvalConfig& cfg) {
  CategoryReport rep;
  rep.category_id = category;
  rep.num_samples = records.size();
  rep.metrics.iou.assign(cfg.iou_thresholds.size(), std::nullopt);
  rep.metrics.abs.assign(cfg.operating_points.size(), std::nullopt);
  rep.metrics.rel.assign(cfg.operating_points.size(), std::nullopt);
  try {
    if (records.empty()) throw Error(ErrorCode::kEmptyInput, "category has no records");
    for (const auto& r : records) rep.num_failed += !r.predicted;
    if (records.front().symmetry.continuous.size() > 1) rep.flags.push_back("multi_axis_continuous");
    if (rep.num_failed > 0) rep.flags.push_back("failed_predictions");

    constexpr double kInf = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cfg.iou_thresholds.size(); ++i) {
      rep.metrics.iou[i] = iou_precision(records, cfg.iou_thresholds[i], cfg.iou_mode);
    }
    for (std::size_t i = 0; i < cfg.operating_points.size(); ++i) {
      const auto& op = cfg.operating_points[i];
      rep.metrics.abs[i] = abs_precision(records, op.a_deg, op.b_cm);
    }
    for (double t : cfg.iou_grid) rep.curves.iou.push_back(iou_precision(records, t, cfg.iou_mode));
    for (double a : cfg.rotation_grid_deg) {
      rep.curves.abs_rotation.push_back(abs_precision(records, a, kInf));
    }
    for (double b : cfg.translation_grid_cm) {
      rep.curves.abs_translation.push_back(abs_precision(records, kInf, b));
    }

    if (records.size() < 2) {
      rep.flags.push_back("relative_na_single_sample");
    } else {
      for (std::size_t i = 0; i < cfg.operating_points.size(); ++i) {
        const auto& op = cfg.operating_points[i];
        const auto rp = rel_precision_detail(records, op.a_deg, op.b_cm);
        rep.metrics.rel[i] = rp.precision;
        if (i == 0) rep.rel_anchor = rp.anchor;
      }
      for (double a : cfg.rotation_grid_deg) {
        rep.curves.rel_rotation.push_back(rel_precision(records, a, kInf));
      }
      for (double b : cfg.translation_grid_cm) {
        rep.curves.rel_translation.push_back(rel_precision(records, kInf, b));
      }
    }

    Vector3d log_sum = Vector3d::Zero();
    std::size_t n = 0;
    for (const auto& r : records) {
      if (!r.predicted) continue;
      log_sum += (r.predicted->scale.array() / r.ground_truth.scale.array()).log().matrix();
      ++n;
    }
    if (n > 0) rep.mean_relative_scale = (log_sum / static_cast<double>(n)).array().exp().matrix();
  } catch (const std::exception& e) {
    rep.flags.push_back(std::string("error: ") + e.what());
  }
  return rep;
}

inline std::vector<std::optional<double>> mean_over(
    const std::vector<CategoryReport>& cats,
    std::vector<std::optional<double>> MetricSet::*field, std::size_t size) {
  std::vector<std::optional<double>> out(size);
  for (std::size_t i = 0; i < size; ++i) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& c : cats) {
      const auto& v = (c.metrics.*field)[i];
      if (v) {
        sum += *v;
        ++n;
      }
    }
    if (n > 0) out[i] = sum / static_cast<double>(n);
  }
  return out;
}

}  // namespace detail

/// Per-category precisions at the configured operating points plus dense AP
/// curves; the overall row is the unweighted mean over categories that have
/// a value. Errors inside a category become flags on that category.
inline MetricReport evaluate(const std::map<std::string, std::vector<PredictionRecord>>& groups,
                             const EvalConfig& cfg = {}) {
  MetricReport report;
  report.config = cfg;
  std::vector<const std::pair<const std::string, std::vector<PredictionRecord>>*> items;
  for (const auto& kv : groups) items.push_back(&kv);
  report.categories.resize(items.size());

  const unsigned jobs = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(items.size())));
  auto work = [&](unsigned worker) {
    for (std::size_t i = worker; i < items.size(); i += jobs) {
      report.categories[i] = detail::evaluate_category(items[i]->first, items[i]->second, cfg);
    }
  };
  if (jobs <= 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(work, w);
  }

  report.overall.iou = detail::mean_over(report.categories, &MetricSet::iou, cfg.iou_thresholds.size());
  report.overall.abs = detail::mean_over(report.categories, &MetricSet::abs, cfg.operating_points.size());
  report.overall.rel = detail::mean_over(report.categories, &MetricSet::rel, cfg.operating_points.size());
  return report;
}

}  // namespace nocs9d

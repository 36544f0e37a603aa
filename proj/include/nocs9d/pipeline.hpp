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
#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "nocs9d/baseline_pca.hpp"
#include "nocs9d/bop_io.hpp"
#include "nocs9d/metrics.hpp"
#include "nocs9d/nocs.hpp"
#include "nocs9d/predictions.hpp"
#include "nocs9d/report_io.hpp"
#include "nocs9d/solver.hpp"
#include "nocs9d/synth.hpp"

// End-to-end operations behind the CLI subcommands. All of them are
// deterministic in (inputs, seed) and independent of the worker count.

namespace nocs9d {

namespace fs = std::filesystem;

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < jobs; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

inline CameraIntrinsics read_intrinsics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read intrinsics '" + path.string() + "'");
  try {
    const auto j = nlohmann::json::parse(in);
    CameraIntrinsics k{j.at("fx").get<double>(), j.at("fy").get<double>(),
                       j.at("cx").get<double>(), j.at("cy").get<double>(),
                       j.at("width").get<int>(), j.at("height").get<int>()};
    k.validate();
    return k;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, "'" + path.string() + "': " + e.what());
  }
}

// ---------------------------------------------------------------- synth

struct SynthObject {
  int obj_id = 0;
  std::string category;
  std::string description;
  synth::ShapeSpec shape;
};

/// The four standard benchmark objects (obj ids 1..4).
inline std::vector<SynthObject> default_objects() {
  return {
      {1, "box", "rectangular box", synth::make_box(Vector3d(0.20, 0.14, 0.10))},
      {2, "cylinder", "cylindrical can", synth::make_cylinder(0.05, 0.16)},
      {3, "prism", "hexagonal prism", synth::make_prism(6, 0.07, 0.12)},
      {4, "lshape", "L-shaped bracket", synth::make_lshape(Vector3d(0.18, 0.14, 0.08))},
  };
}

struct SynthConfig {
  std::vector<SynthObject> objects = default_objects();
  int views = 50;
  synth::NoiseSpec noise;
  std::uint64_t seed = 0;
  CameraIntrinsics camera;
  double depth_scale = bop::kDefaultDepthScale;
  int multi_object_views = 0;  // extra scene with all objects composited
  unsigned jobs = 1;
};

inline synth::NoiseSpec view_noise(const synth::NoiseSpec& base, int scene_id, int image_id) {
  synth::NoiseSpec n = base;
  n.seed = hash_counter(base.seed, static_cast<std::uint64_t>(scene_id),
                        static_cast<std::uint64_t>(image_id));
  return n;
}

inline bop::SceneRecord scene_record(int scene_id, int image_id, const CameraIntrinsics& k,
                                     double depth_scale) {
  bop::SceneRecord rec;
  rec.scene_id = scene_id;
  rec.image_id = image_id;
  rec.rgb_path = bop::rgb_rel(image_id);
  rec.depth_path = bop::depth_rel(image_id);
  rec.depth_scale = depth_scale;
  rec.camera = k;
  return rec;
}

/// Writes a BOP dataset: one scene per object (scene id = obj id) with
/// `views` single-object images, plus an optional composited scene.
inline void generate_dataset(const bop::DatasetLayout& layout, const SynthConfig& cfg) {
  cfg.camera.validate();
  cfg.noise.validate();
  std::map<int, bop::ModelInfo> models;
  std::map<int, bop::CategoryLabel> cats;
  for (const auto& o : cfg.objects) {
    bop::ModelInfo info;
    info.obj_id = o.obj_id;
    info.diameter = o.shape.diagonal();
    info.min = -0.5 * o.shape.extents;
    info.size = o.shape.extents;
    info.symmetry = o.shape.symmetry;
    models[o.obj_id] = info;
    cats[o.obj_id] = {o.category, o.description};
  }
  bop::write_models_info(layout.models_info(), models);
  bop::write_categories(layout.categories(), cats);

  for (const auto& o : cfg.objects) {
    std::vector<bop::SceneRecord> records(static_cast<std::size_t>(cfg.views));
    std::vector<NocsMap> nocs(records.size());
    SplitMix64 view_rng(hash_counter(cfg.seed, static_cast<std::uint64_t>(o.obj_id)));
    std::vector<synth::CameraPose> cams;
    for (int v = 0; v < cfg.views; ++v) cams.push_back(synth::sample_viewpoint(o.shape, view_rng));
    parallel_for(records.size(), cfg.jobs, [&](std::size_t v) {
      const int image_id = static_cast<int>(v);
      auto r = synth::render(o.shape, cams[v], cfg.camera);
      synth::corrupt(r.depth, r.nocs, view_noise(cfg.noise, o.obj_id, image_id));
      auto rec = scene_record(o.obj_id, image_id, cfg.camera, cfg.depth_scale);
      rec.instances.push_back({o.obj_id, r.pose.rotation, r.pose.translation});
      rec.mask_paths.push_back(bop::mask_rel(image_id, 0));
      rec.masks.push_back(r.mask);
      rec.depth = std::move(r.depth);
      records[v] = std::move(rec);
      nocs[v] = std::move(r.nocs);
    });
    bop::write_scene(records, layout.split_root(), o.obj_id);
    for (std::size_t v = 0; v < records.size(); ++v) {
      bop::write_nocs(layout.split_root(), o.obj_id, static_cast<int>(v), 0, nocs[v]);
    }
    spdlog::info("synth: scene {} ({}) with {} views", o.obj_id, o.category, cfg.views);
  }

  if (cfg.multi_object_views > 0 && !cfg.objects.empty()) {
    // Objects spread on a circle in the world xy-plane with random yaw.
    const int scene_id = 1 + std::max_element(cfg.objects.begin(), cfg.objects.end(),
                                              [](const auto& a, const auto& b) {
                                                return a.obj_id < b.obj_id;
                                              })->obj_id;
    double spacing = 0.0;
    for (const auto& o : cfg.objects) spacing = std::max(spacing, o.shape.diagonal());
    const double ring = cfg.objects.size() > 1
                            ? spacing / (2.0 * std::sin(std::numbers::pi / cfg.objects.size()))
                            : 0.0;
    SplitMix64 rng(hash_counter(cfg.seed, static_cast<std::uint64_t>(scene_id)));
    std::vector<bop::SceneRecord> records;
    for (int v = 0; v < cfg.multi_object_views; ++v) {
      std::vector<SimilarityTransform> placement;
      for (std::size_t i = 0; i < cfg.objects.size(); ++i) {
        const double ang = 2.0 * std::numbers::pi * i / cfg.objects.size();
        placement.push_back(SimilarityTransform::rigid(
            axis_angle(Vector3d::UnitZ(), rng.uniform(0.0, 2.0 * std::numbers::pi)),
            ring * Vector3d(std::cos(ang), std::sin(ang), 0.0)));
      }
      const double group = 2.0 * ring + spacing;
      const auto cam = synth::sample_viewpoint(synth::make_box(Vector3d::Constant(group / std::sqrt(3.0))), rng);
      std::vector<synth::Render> renders;
      for (std::size_t i = 0; i < cfg.objects.size(); ++i) {
        renders.push_back(synth::render_pose(cfg.objects[i].shape,
                                             cam.object_pose(cfg.objects[i].shape, placement[i]),
                                             cfg.camera));
      }
      renders = synth::composite(std::move(renders));
      auto rec = scene_record(scene_id, v, cfg.camera, cfg.depth_scale);
      rec.depth = renders.front().depth;
      // Depth noise once on the shared map, NOCS noise per instance.
      auto depth_noise = view_noise(cfg.noise, scene_id, v);
      depth_noise.nocs_sigma = 0.0;
      depth_noise.outlier_fraction = 0.0;
      NocsMap no_nocs(rec.depth.width(), rec.depth.height());
      synth::corrupt(rec.depth, no_nocs, depth_noise);
      for (std::size_t i = 0; i < renders.size(); ++i) {
        auto nocs_noise = cfg.noise;
        nocs_noise.seed = hash_counter(cfg.noise.seed, static_cast<std::uint64_t>(scene_id),
                                       static_cast<std::uint64_t>(v), i + 1);
        nocs_noise.depth_sigma = 0.0;
        auto scratch = renders[i].depth;
        synth::corrupt(scratch, renders[i].nocs, nocs_noise);
        rec.instances.push_back({cfg.objects[i].obj_id, renders[i].pose.rotation,
                                 renders[i].pose.translation});
        rec.mask_paths.push_back(bop::mask_rel(v, static_cast<int>(i)));
        rec.masks.push_back(renders[i].mask);
        bop::write_nocs(layout.split_root(), scene_id, v, static_cast<int>(i), renders[i].nocs);
      }
      records.push_back(std::move(rec));
    }
    bop::write_scene(records, layout.split_root(), scene_id);
    spdlog::info("synth: multi-object scene {} with {} views", scene_id, cfg.multi_object_views);
  }
}

// ------------------------------------------------------------------ fit

struct FitOptions {
  bop::DatasetLayout dataset;
  fs::path output;  // predictions CSV
  RansacConfig ransac;
  unsigned jobs = 1;
};

struct RunSummary {
  std::size_t succeeded = 0;
  std::vector<std::string> failures;  // "scene/image/inst: reason"

  int exit_code() const { return failures.empty() ? 0 : 2; }
};

namespace detail {

using InstanceFn = std::function<PredictionRow(const bop::SceneRecord&, std::size_t inst)>;

inline RunSummary run_instances(const bop::DatasetLayout& dataset, const fs::path& output,
                                unsigned jobs, const InstanceFn& fn) {
  std::vector<PredictionRow> rows;
  std::mutex rows_mutex;
  for (int scene_id : bop::list_scenes(dataset.split_root())) {
    const auto records = bop::read_scene(dataset.split_root(), scene_id);
    parallel_for(records.size(), jobs, [&](std::size_t r) {
      std::vector<PredictionRow> local;
      for (std::size_t i = 0; i < records[r].instances.size(); ++i) {
        local.push_back(fn(records[r], i));
      }
      std::lock_guard lock(rows_mutex);
      rows.insert(rows.end(), local.begin(), local.end());
    });
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
  RunSummary summary;
  for (const auto& row : rows) {
    if (row.pose) {
      ++summary.succeeded;
    } else {
      summary.failures.push_back(
          fmt::format("{}/{}/{}: {}", row.scene_id, row.image_id, row.inst_id, row.message));
    }
  }
  write_predictions(output, rows);
  return summary;
}

inline PredictionRow row_for(const bop::SceneRecord& rec, std::size_t inst) {
  PredictionRow row;
  row.scene_id = rec.scene_id;
  row.image_id = rec.image_id;
  row.inst_id = static_cast<int>(inst);
  row.obj_id = rec.instances[inst].obj_id;
  return row;
}

}  // namespace detail

/// NOCS + depth -> pose for every ground-truth instance. Instance failures
/// become FAILED rows; a missing NOCS sidecar is fatal.
inline RunSummary cmd_fit(const FitOptions& opt) {
  opt.ransac.validate();
  const auto split = opt.dataset.split_root();
  return detail::run_instances(opt.dataset, opt.output, opt.jobs,
                               [&](const bop::SceneRecord& rec, std::size_t inst) {
    PredictionRow row = detail::row_for(rec, inst);
    const NocsMap nocs = bop::read_nocs(split, rec.scene_id, rec.image_id, static_cast<int>(inst));
    try {
      const auto corr = build_correspondences(nocs, rec.depth, rec.camera, rec.masks[inst]);
      RansacConfig cfg = opt.ransac;
      cfg.seed = hash_counter(opt.ransac.seed, static_cast<std::uint64_t>(rec.scene_id),
                              static_cast<std::uint64_t>(rec.image_id), inst);
      const FitResult fit = fit_pose(corr, cfg);
      fit.pose.validate();
      row.pose = fit.pose;
      row.rms = fit.rms_residual;
      row.inliers = fit.inlier_indices.size();
    } catch (const Error& e) {
      row.message = e.what();
    }
    return row;
  });
}

struct BaselineOptions {
  bop::DatasetLayout dataset;
  fs::path output;
  unsigned jobs = 1;
};

/// PCA baseline over the masked depth points of every instance.
inline RunSummary cmd_baseline_pca(const BaselineOptions& opt) {
  return detail::run_instances(opt.dataset, opt.output, opt.jobs,
                               [&](const bop::SceneRecord& rec, std::size_t inst) {
    PredictionRow row = detail::row_for(rec, inst);
    try {
      std::vector<Vector3d> pts;
      for (const auto& p : backproject(rec.depth, rec.camera, rec.masks[inst])) pts.push_back(p.point);
      Pose9D pose = pca_fit(pts);
      pose.validate();
      row.pose = pose;
      row.inliers = pts.size();
    } catch (const Error& e) {
      row.message = e.what();
    }
    return row;
  });
}

// ------------------------------------------------------------- evaluate

struct EvaluateOptions {
  bop::DatasetLayout dataset;
  fs::path predictions;
  fs::path output_dir;
  EvalConfig eval;
};

/// Joins predictions with the dataset ground truth, grouped by category
/// (categories.json label, or "obj_<id>" without a sidecar).
inline std::map<std::string, std::vector<PredictionRecord>> load_records(
    const bop::DatasetLayout& dataset, const std::vector<PredictionRow>& rows) {
  const auto models = bop::read_models_info(dataset.models_info());
  std::map<int, bop::CategoryLabel> cats;
  if (fs::exists(dataset.categories())) cats = bop::read_categories(dataset.categories());

  std::map<std::tuple<int, int, int>, const PredictionRow*> by_key;
  for (const auto& r : rows) by_key[r.key()] = &r;

  std::map<std::string, std::vector<PredictionRecord>> groups;
  std::vector<std::string> missing;
  std::set<std::tuple<int, int, int>> matched;
  for (int scene_id : bop::list_scenes(dataset.split_root())) {
    for (const auto& rec : bop::read_scene(dataset.split_root(), scene_id)) {
      for (std::size_t i = 0; i < rec.instances.size(); ++i) {
        const auto& inst = rec.instances[i];
        const auto key = std::tuple(scene_id, rec.image_id, static_cast<int>(i));
        const std::string sid = fmt::format("{}/{}/{}", scene_id, rec.image_id, i);
        const auto it = by_key.find(key);
        if (it == by_key.end() || it->second->obj_id != inst.obj_id) {
          missing.push_back(sid);
          continue;
        }
        matched.insert(key);
        const auto model = models.find(inst.obj_id);
        if (model == models.end()) {
          throw Error(ErrorCode::kIntegrity, fmt::format("obj_id {} not in models_info", inst.obj_id));
        }
        PredictionRecord pr;
        pr.sample_id = sid;
        const auto cat = cats.find(inst.obj_id);
        pr.category_id = cat != cats.end() ? cat->second.category : fmt::format("obj_{}", inst.obj_id);
        pr.predicted = it->second->pose;
        pr.ground_truth = {model->second.size, inst.rotation, inst.translation};
        pr.symmetry = model->second.symmetry;
        groups[pr.category_id].push_back(std::move(pr));
      }
    }
  }
  std::vector<std::string> extra;
  for (const auto& r : rows) {
    if (!matched.count(r.key())) {
      extra.push_back(fmt::format("{}/{}/{}", r.scene_id, r.image_id, r.inst_id));
    }
  }
  if (!missing.empty() || !extra.empty()) {
    throw Error(ErrorCode::kReconciliation,
                fmt::format("ground truth without matching prediction: [{}]; predictions without "
                            "matching ground truth: [{}]",
                            fmt::join(missing, ", "), fmt::join(extra, ", ")));
  }
  return groups;
}

inline MetricReport cmd_evaluate(const EvaluateOptions& opt) {
  const auto rows = read_predictions(opt.predictions);
  const auto groups = load_records(opt.dataset, rows);
  MetricReport report = evaluate(groups, opt.eval);
  write_report(opt.output_dir, report);
  return report;
}

}  // namespace nocs9d

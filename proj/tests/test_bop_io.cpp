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

#include <random>

#include <gtest/gtest.h>

#include "nocs9d/bop_io.hpp"
#include "nocs9d/predictions.hpp"
#include "test_util.hpp"

namespace nocs9d {
namespace {

namespace fs = std::filesystem;
using testing::slurp;
using testing::temp_dir;

const fs::path kFixture = fs::path(NOCS9D_FIXTURE_DIR) / "bop_mini";
const fs::path kFixtureSplit = kFixture / "test";

fs::path copy_fixture(const std::string& name) {
  const auto dir = temp_dir(name);
  fs::copy(kFixture, dir, fs::copy_options::recursive);
  return dir;
}

template <typename Fn>
Error error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected an error";
  return Error(ErrorCode::kInvalidArgument, "");
}

TEST(BopRead, Fixture) {
  EXPECT_EQ(bop::list_scenes(kFixtureSplit), std::vector<int>{1});
  const auto recs = bop::read_scene(kFixtureSplit, 1);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].image_id, 0);
  EXPECT_EQ(recs[1].image_id, 3);

  const auto& r0 = recs[0];
  ASSERT_EQ(r0.instances.size(), 2u);
  EXPECT_EQ(r0.instances[0].obj_id, 1);
  EXPECT_EQ(r0.instances[0].rotation, Matrix3d::Identity());
  EXPECT_EQ(r0.instances[0].translation, Vector3d(0.01, -0.02, 1.0));
  EXPECT_EQ(r0.instances[1].obj_id, 2);
  EXPECT_EQ(r0.instances[1].rotation, axis_angle(Vector3d::UnitZ(), deg2rad(90.0)).array().round().matrix());
  EXPECT_EQ(r0.instances[1].translation, Vector3d(-50.5 / 1000.0, 0.0, 1200.25 / 1000.0));
  EXPECT_EQ(r0.depth_scale, 0.1);
  EXPECT_EQ(r0.camera.fx, 100.0);
  EXPECT_EQ(r0.camera.cx, 2.0);
  EXPECT_EQ(r0.camera.width, 4);
  EXPECT_EQ(r0.camera.height, 3);
  EXPECT_EQ(r0.depth(0, 0), 0.0);
  EXPECT_NEAR(r0.depth(1, 0), 1.0, 1e-12);
  EXPECT_NEAR(r0.depth(2, 1), 1.2003, 1e-12);
  EXPECT_EQ(count_set(r0.masks[0]), 4u);
  EXPECT_EQ(count_set(r0.masks[1]), 3u);
  EXPECT_TRUE(r0.masks[1](3, 1));
  EXPECT_EQ(r0.mask_paths[1], fs::path("mask_visib/000000_000001.png"));
  EXPECT_EQ(r0.depth_path, fs::path("depth/000000.png"));

  const auto& r3 = recs[1];
  EXPECT_EQ(r3.depth_scale, 1.0);
  EXPECT_EQ(r3.depth(1, 1), 0.75);
  EXPECT_EQ(r3.instances[0].translation, Vector3d(0, 0, 0.75));
  EXPECT_EQ(count_set(r3.masks[0]), 3u);
}

TEST(BopRoundTrip, ReadWriteReadIsFixedPoint) {
  const auto first = bop::read_scene(kFixtureSplit, 1);
  const auto a = temp_dir("bop_rt_a");
  const auto b = temp_dir("bop_rt_b");
  bop::write_scene(first, a, 1);
  const auto second = bop::read_scene(a, 1);
  EXPECT_EQ(second, first);
  bop::write_scene(second, b, 1);
  EXPECT_EQ(bop::read_scene(b, 1), first);
  for (const auto& e : fs::recursive_directory_iterator(a / "000001")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
  }
  // depth samples survive unchanged through meters
  EXPECT_EQ(png::read(a / "000001/depth/000000.png").samples,
            png::read(kFixtureSplit / "000001/depth/000000.png").samples);
  EXPECT_EQ(png::read(a / "000001/depth/000003.png").samples,
            png::read(kFixtureSplit / "000001/depth/000003.png").samples);
}

TEST(BopRoundTrip, ModelsInfoIsFixedPoint) {
  const auto first = bop::read_models_info(kFixture / "models/models_info.json");
  const auto dir = temp_dir("bop_models_rt");
  bop::write_models_info(dir / "a.json", first);
  const auto second = bop::read_models_info(dir / "a.json");
  bop::write_models_info(dir / "b.json", second);
  EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
  ASSERT_EQ(second.size(), first.size());
  for (const auto& [id, info] : first) {
    const auto& other = second.at(id);
    EXPECT_EQ(other.diameter, info.diameter);
    EXPECT_EQ(other.min, info.min);
    EXPECT_EQ(other.size, info.size);
    ASSERT_EQ(other.symmetry.discrete.size(), info.symmetry.discrete.size());
    ASSERT_EQ(other.symmetry.continuous.size(), info.symmetry.continuous.size());
    for (std::size_t i = 0; i < info.symmetry.continuous.size(); ++i) {
      EXPECT_EQ(other.symmetry.continuous[i].axis, info.symmetry.continuous[i].axis);
      EXPECT_EQ(other.symmetry.continuous[i].offset, info.symmetry.continuous[i].offset);
    }
  }
}

TEST(BopWrite, DepthOneMetreIsTenThousand) {
  bop::SceneRecord r;
  r.scene_id = 7;
  r.image_id = 2;
  r.camera = {100, 100, 1, 1, 2, 2};
  r.depth = DepthMap(2, 2, 0.0);
  r.depth(0, 0) = 1.0;
  r.depth(1, 1) = 0.5;
  const auto dir = temp_dir("bop_depth");
  bop::write_scene({r}, dir, 7);
  const auto img = png::read(dir / "000007/depth/000002.png");
  EXPECT_EQ(img.bit_depth, 16);
  EXPECT_EQ(img.samples, (std::vector<std::uint16_t>{10000, 0, 0, 5000}));
  const auto back = bop::read_scene(dir, 7);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].depth(0, 0), 1.0);
  EXPECT_EQ(back[0].depth(1, 1), 0.5);

  r.depth(0, 1) = 7.0;  // 70000 > 65535 at 0.1 mm
  EXPECT_EQ(error_of([&] { bop::write_scene({r}, dir, 7); }).code(), ErrorCode::kIo);
}

TEST(BopRead, MissingMaskNamesTheInstance) {
  const auto root = copy_fixture("bop_missing_mask");
  fs::remove(root / "test/000001/mask_visib/000000_000001.png");
  const auto e = error_of([&] { bop::read_scene(root / "test", 1); });
  EXPECT_EQ(e.code(), ErrorCode::kIntegrity);
  const std::string msg = e.what();
  EXPECT_NE(msg.find("image 0 instance 1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("obj_id 2"), std::string::npos) << msg;
}

TEST(BopRead, EmptyScene) {
  const auto root = temp_dir("bop_empty");
  fs::create_directories(root / "000004");
  std::ofstream(root / "000004/scene_gt.json") << "{}";
  std::ofstream(root / "000004/scene_camera.json") << "{}";
  EXPECT_TRUE(bop::read_scene(root, 4).empty());
  const auto out = temp_dir("bop_empty_out");
  bop::write_scene({}, out, 4);
  EXPECT_EQ(slurp(out / "000004/scene_gt.json"), "{}\n");
  EXPECT_TRUE(bop::read_scene(out, 4).empty());
}

TEST(BopRead, InconsistentScenes) {
  auto edit = [](const fs::path& file, const std::string& content) {
    std::ofstream(file, std::ios::trunc) << content;
  };
  {
    const auto root = copy_fixture("bop_extra_camera");
    const auto cam = root / "test/000001/scene_camera.json";
    std::string s = slurp(cam);
    s.insert(s.rfind('}'), R"(, "9": {"cam_K": [1,0,0,0,1,0,0,0,1], "depth_scale": 1.0})");
    edit(cam, s);
    EXPECT_EQ(error_of([&] { bop::read_scene(root / "test", 1); }).code(), ErrorCode::kIntegrity);
  }
  {
    const auto root = copy_fixture("bop_bad_rotation");
    const auto gt = root / "test/000001/scene_gt.json";
    std::string s = slurp(gt);
    s.replace(s.find("[1, 0, 0, 0, 0, -1"), 18, "[2, 0, 0, 0, 0, -1");
    edit(gt, s);
    EXPECT_EQ(error_of([&] { bop::read_scene(root / "test", 1); }).code(), ErrorCode::kValidation);
  }
  {
    const auto root = copy_fixture("bop_bad_json");
    edit(root / "test/000001/scene_gt.json", "{\"0\": [");
    EXPECT_EQ(error_of([&] { bop::read_scene(root / "test", 1); }).code(), ErrorCode::kParse);
  }
  {
    const auto root = copy_fixture("bop_missing_depth");
    fs::remove(root / "test/000001/depth/000003.png");
    EXPECT_THROW(bop::read_scene(root / "test", 1), Error);
  }
  EXPECT_EQ(error_of([&] { bop::list_scenes(kFixture / "nope"); }).code(), ErrorCode::kIo);
}

TEST(BopRead, ListScenesIgnoresOtherEntries) {
  const auto root = temp_dir("bop_list");
  for (const char* d : {"000010", "000002", "notes", "00x1"}) fs::create_directories(root / d);
  std::ofstream(root / "000005") << "file, not a scene";
  EXPECT_EQ(bop::list_scenes(root), (std::vector<int>{2, 10}));
}

TEST(ModelsInfo, Symmetries) {
  const auto models = bop::read_models_info(kFixture / "models/models_info.json");
  ASSERT_EQ(models.size(), 3u);
  const auto& box = models.at(1);
  EXPECT_EQ(box.size, Vector3d(0.2, 0.14, 0.1));
  EXPECT_EQ(box.min, Vector3d(-0.1, -0.07, -0.05));
  EXPECT_DOUBLE_EQ(box.diameter, 0.2645751);
  ASSERT_EQ(box.symmetry.discrete.size(), 1u);
  EXPECT_EQ(box.symmetry.discrete[0].rotation, Vector3d(-1, -1, 1).asDiagonal().toDenseMatrix());
  EXPECT_TRUE(box.symmetry.continuous.empty());

  const auto& can = models.at(2);
  EXPECT_TRUE(can.symmetry.discrete.empty());
  ASSERT_EQ(can.symmetry.continuous.size(), 1u);
  EXPECT_EQ(can.symmetry.continuous[0].axis, Vector3d::UnitZ());

  const auto& odd = models.at(3);
  ASSERT_EQ(odd.symmetry.continuous.size(), 1u);
  EXPECT_EQ(odd.symmetry.continuous[0].axis, Vector3d::UnitZ());  // normalized from (0, 0, 2)
  EXPECT_EQ(odd.symmetry.continuous[0].offset, Vector3d(0, 0, 0.005));
}

TEST(ModelsInfo, NoSymmetryKeysMeansEmpty) {
  const auto dir = temp_dir("models_plain");
  std::ofstream(dir / "m.json") << R"({"5": {"diameter": 10, "min_x": -1, "min_y": -1, "min_z": -1,
    "size_x": 2, "size_y": 2, "size_z": 2}})";
  const auto models = bop::read_models_info(dir / "m.json");
  EXPECT_TRUE(models.at(5).symmetry.empty());
}

TEST(ModelsInfo, RejectsNonOrthonormalDiscreteSymmetry) {
  const auto dir = temp_dir("models_bad");
  std::ofstream(dir / "m.json") << R"({"5": {"diameter": 10, "min_x": -1, "min_y": -1, "min_z": -1,
    "size_x": 2, "size_y": 2, "size_z": 2,
    "symmetries_discrete": [[1, 0.2, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1]]}})";
  const auto e = error_of([&] { bop::read_models_info(dir / "m.json"); });
  EXPECT_EQ(e.code(), ErrorCode::kValidation);
  EXPECT_NE(std::string(e.what()).find("obj 5"), std::string::npos);

  std::ofstream(dir / "z.json") << R"({"5": {"diameter": 10, "min_x": -1, "min_y": -1, "min_z": -1,
    "size_x": 2, "size_y": 2, "size_z": 0}})";
  EXPECT_EQ(error_of([&] { bop::read_models_info(dir / "z.json"); }).code(), ErrorCode::kValidation);
}

TEST(Categories, ReadAndWrite) {
  const auto cats = bop::read_categories(kFixture / "categories.json");
  ASSERT_EQ(cats.size(), 2u);
  EXPECT_EQ(cats.at(1).category, "box");
  EXPECT_EQ(cats.at(1).description, "cardboard box");
  EXPECT_EQ(cats.at(2).category, "can");
  EXPECT_EQ(cats.at(2).description, "");
  const auto dir = temp_dir("categories");
  bop::write_categories(dir / "c.json", cats);
  const auto back = bop::read_categories(dir / "c.json");
  EXPECT_EQ(back.at(1).description, "cardboard box");
  EXPECT_EQ(back.at(2).category, "can");
}

TEST(Units, MetreMillimetreRoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5000.0, 5000.0);
  for (int i = 0; i < 100000; ++i) {
    // any value read from a file comes back unchanged
    const double m = bop::mm_to_m(u(rng));
    EXPECT_EQ(bop::mm_to_m(bop::m_to_mm(m)), m);
    // arbitrary meters are off by at most one ulp (mm/1000 does not reach every double)
    const double any = u(rng) / 997.0;
    EXPECT_LE(std::abs(bop::mm_to_m(bop::m_to_mm(any)) - any),
              std::nextafter(std::abs(any), HUGE_VAL) - std::abs(any));
  }
  EXPECT_EQ(bop::m_to_mm(0.25), 250.0);
  EXPECT_EQ(bop::mm_to_m(1000.0), 1.0);
}

TEST(NocsSidecar, RoundTripAndMissing) {
  const auto root = temp_dir("nocs_sidecar");
  NocsMap nocs(3, 2);
  nocs.values[1] = Vector3d(0.25, 0.5, 1.0);
  nocs.valid[1] = 1;
  nocs.values[4] = Vector3d(1.0, 0.0, 0.0);
  nocs.valid[4] = 1;
  bop::write_nocs(root, 1, 5, 2, nocs);
  EXPECT_TRUE(fs::exists(root / "000001/nocs/000005_000002.png"));
  const auto back = bop::read_nocs(root, 1, 5, 2);
  EXPECT_EQ(back.valid, nocs.valid);
  EXPECT_NEAR((back.values[1] - nocs.values[1]).norm(), 0.0, 1.0 / 65535.0);
  EXPECT_EQ(back.values[4], nocs.values[4]);
  EXPECT_EQ(error_of([&] { bop::read_nocs(root, 1, 5, 3); }).code(), ErrorCode::kIo);
}

int ulps(double a, double b) {
  int n = 0;
  while (a != b && n < 100) {
    a = std::nextafter(a, b);
    ++n;
  }
  return n;
}

TEST(Predictions, CsvRoundTrip) {
  std::mt19937_64 rng(2);
  std::vector<PredictionRow> rows;
  for (int i = 0; i < 20; ++i) {
    PredictionRow r;
    r.scene_id = 3 - i % 3;
    r.image_id = 19 - i;
    r.inst_id = i % 2;
    r.obj_id = 1 + i % 4;
    if (i % 5 == 4) {
      r.message = "no consensus, 3 inliers\nof 40";
    } else {
      r.pose = Pose9D{testing::random_vector(rng, 0.01, 0.3), testing::random_rotation(rng),
                      testing::random_vector(rng, -1, 1)};
      r.rms = 0.0012345678901234;
      r.inliers = 100 + static_cast<std::size_t>(i);
    }
    rows.push_back(r);
  }
  const auto dir = temp_dir("predictions");
  write_predictions(dir / "p.csv", rows);
  const auto back = read_predictions(dir / "p.csv");
  ASSERT_EQ(back.size(), rows.size());
  auto sorted = rows;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].key(), sorted[i].key());
    EXPECT_EQ(back[i].obj_id, sorted[i].obj_id);
    ASSERT_EQ(back[i].pose.has_value(), sorted[i].pose.has_value());
    if (sorted[i].pose) {
      EXPECT_EQ(back[i].pose->rotation, sorted[i].pose->rotation);
      // lengths pass through millimeters: within one ulp, exact from then on
      for (int k = 0; k < 3; ++k) {
        EXPECT_LE(ulps(back[i].pose->translation(k), sorted[i].pose->translation(k)), 1);
        EXPECT_LE(ulps(back[i].pose->scale(k), sorted[i].pose->scale(k)), 1);
      }
      EXPECT_LE(ulps(back[i].rms, sorted[i].rms), 1);
      EXPECT_EQ(back[i].inliers, sorted[i].inliers);
    } else {
      EXPECT_EQ(back[i].message, "no consensus; 3 inliers of 40");
    }
  }
  write_predictions(dir / "q.csv", back);
  EXPECT_EQ(slurp(dir / "p.csv"), slurp(dir / "q.csv"));
  const auto again = read_predictions(dir / "q.csv");
  for (std::size_t i = 0; i < back.size(); ++i) {
    if (!back[i].pose) continue;
    EXPECT_EQ(again[i].pose->translation, back[i].pose->translation);
    EXPECT_EQ(again[i].pose->scale, back[i].pose->scale);
  }
  const std::string text = slurp(dir / "p.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "# nocs9d predictions v1");
}

TEST(Predictions, Malformed) {
  const auto dir = temp_dir("predictions_bad");
  std::ofstream(dir / "noversion.csv") << kPredictionsHeader << "\n";
  EXPECT_EQ(error_of([&] { read_predictions(dir / "noversion.csv"); }).code(), ErrorCode::kParse);
  std::ofstream(dir / "short.csv") << kPredictionsVersionLine << "\n" << kPredictionsHeader << "\n1,2,3\n";
  EXPECT_EQ(error_of([&] { read_predictions(dir / "short.csv"); }).code(), ErrorCode::kParse);
  std::ofstream(dir / "status.csv") << kPredictionsVersionLine << "\n" << kPredictionsHeader << "\n"
                                    << "1,2,3,4,MAYBE" << std::string(17, ',') << ",\n";
  EXPECT_EQ(error_of([&] { read_predictions(dir / "status.csv"); }).code(), ErrorCode::kParse);
  EXPECT_EQ(error_of([&] { read_predictions(dir / "absent.csv"); }).code(), ErrorCode::kParse);
}

}  // namespace
}  // namespace nocs9d

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "lidarup/commands.hpp"

namespace lidarup {
namespace {

namespace fs = std::filesystem;

FrameSynthesisPlan two_point_plan() {
  FrameSynthesisPlan p;
  p.source_cloud.push_back({1, 0, 0}, 0.1f);
  p.source_cloud.push_back({0, 1, 0}, 0.2f);
  p.source_cloud.push_back({0, 0, 1}, 0.3f);
  p.t_static = RigidTransform::from_translation({-1, 0, 0});
  p.object_memberships[4] = {1};
  p.t_dynamic[4] = {rot_z(kPi / 2), Vec3(0, 0, 2)};
  return p;
}

TEST(Synthesis, MovesObjectsByTheirTransformAndTheRestByTheStaticOne) {
  const auto out = synthesize_frame(two_point_plan());
  EXPECT_EQ(out.labels, (std::vector<int>{kStaticLabel, 4, kStaticLabel}));
  EXPECT_LT((out.cloud.points[0] - Vec3(0, 0, 0)).norm(), 1e-15);
  EXPECT_LT((out.cloud.points[1] - Vec3(-1, 0, 2)).norm(), 1e-15);
  EXPECT_LT((out.cloud.points[2] - Vec3(-1, 0, 1)).norm(), 1e-15);
  EXPECT_EQ(out.cloud.intensity[1], 0.2f);
}

TEST(Synthesis, PlanValidation) {
  auto p = two_point_plan();
  p.object_memberships[5] = {1};
  p.t_dynamic[5] = RigidTransform::identity();
  EXPECT_THROW((void)synthesize_frame(p), Error);  // owned twice
  p = two_point_plan();
  p.object_memberships[4] = {7};
  EXPECT_THROW((void)synthesize_frame(p), Error);  // out of range
  p = two_point_plan();
  p.t_dynamic.clear();
  EXPECT_THROW((void)synthesize_frame(p), Error);  // no transform
}

TEST(Synthesis, CameraFovKeepsPointsInFrontAndInsideTheImage) {
  const auto cam = CameraModel::from_params(100, 100, 50, 50, 100, 100);
  PointCloud c;
  c.points = {{0, 0, 5}, {0, 0, -5}, {100, 0, 5}};
  EXPECT_EQ(camera_fov_indices(c, RigidTransform::identity(), cam),
            (std::vector<std::size_t>{0}));
}

class StaticSequence : public ::testing::Test {
 protected:
  void SetUp() override {
    root = fs::path(LIDARUP_WORK_DIR) / "pipeline" /
           ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::remove_all(root);
    synth = synth_sequence(std::string(LIDARUP_SCENARIO_DIR) + "/static.txt",
                           (root / "synth").string());
    RunOptions opt;
    opt.manifest_path = (root / "synth" / "manifest.txt").string();
    opt.out_dir = (root / "run").string();
    run = run_sequence(opt);
  }
  fs::path root;
  SynthSummary synth;
  RunSummary run;
};

TEST_F(StaticSequence, EveryCameraOnlyFrameGetsAVirtualCloud) {
  EXPECT_EQ(run.exit_code, kExitOk);
  EXPECT_EQ(run.failed_frames, 0);
  EXPECT_EQ(run.lidar_frames, synth.lidar_frames);
  EXPECT_EQ(run.virtual_frames, synth.virtual_frames);
  std::size_t bins = 0;
  for (const auto& e : fs::directory_iterator(root / "run" / "virtual"))
    bins += e.path().extension() == ".bin";
  EXPECT_EQ(bins, static_cast<std::size_t>(synth.virtual_frames));
}

TEST_F(StaticSequence, ParkedCarsAreLabelledStatic) {
  std::ifstream in(root / "run" / "motions.json");
  ASSERT_TRUE(in);
  const auto j = nlohmann::json::parse(in);
  int objects = 0;
  for (const auto& frame : j["frames"])
    for (const auto& o : frame["objects"]) {
      ++objects;
      if (o["status"] == "estimated") EXPECT_EQ(o["label"], "static");
    }
  EXPECT_GT(objects, 0);
}

TEST_F(StaticSequence, VirtualCloudsMatchGroundTruth) {
  EvalOptions opt;
  opt.virtual_dir = (root / "run" / "virtual").string();
  opt.ground_truth_dir = (root / "synth" / "gt" / "virtual").string();
  opt.report_path = (root / "eval.json").string();
  const auto s = evaluate_directories(opt);
  EXPECT_EQ(s.exit_code, kExitOk);
  ASSERT_EQ(s.rows.size(), static_cast<std::size_t>(synth.virtual_frames));
  for (const auto& r : s.rows) EXPECT_LT(r.cd, 0.01) << r.frame;
}

}  // namespace
}  // namespace lidarup

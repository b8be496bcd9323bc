#include <random>

#include <gtest/gtest.h>

#include "lidarup/pose.hpp"
#include "oracles.hpp"

namespace lidarup {
namespace {

const CameraModel kCam = CameraModel::from_params(700, 700, 320, 240, 640, 480);

std::vector<Correspondence> observe(const RigidTransform& t, const std::vector<Vec3>& world) {
  std::vector<Correspondence> out;
  for (const auto& w : world) {
    const auto px = project(t.apply(w), kCam);
    if (px) out.push_back({w, *px});
  }
  return out;
}

RigidTransform looking_at(std::mt19937_64& gen, const Vec3& target, double distance) {
  const Mat3 r = oracle::random_rotation(gen);
  return {r, Vec3(0, 0, distance) - r * target};
}

TEST(Pnp, DltRecoversExactPoseFromSpreadPoints) {
  std::mt19937_64 gen(40);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int rep = 0; rep < 100; ++rep) {
    const Vec3 target(u(gen) * 5, u(gen) * 5, u(gen));
    const auto t = looking_at(gen, target, 8.0);
    std::vector<Vec3> world;
    for (int i = 0; i < 12; ++i) world.push_back(target + Vec3(u(gen), u(gen), u(gen)));
    const auto est = pnp_dlt(observe(t, world), kCam);
    EXPECT_LT((est.rotation - t.rotation).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((est.translation - t.translation).norm(), 1e-6);
  }
}

TEST(Pnp, CoplanarPointsUseThePlanarSolver) {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    const Vec3 target(3, -2, 1);
    const auto t = looking_at(gen, target, 7.0);
    const Mat3 face = oracle::random_rotation(gen);
    std::vector<Vec3> world;
    for (int i = 0; i < 10; ++i) world.push_back(target + face * Vec3(2 * u(gen), u(gen), 0));
    const auto corrs = observe(t, world);
    if (corrs.size() < 6) continue;
    // Skip faces seen nearly edge-on.
    if (std::abs((t.rotation * face).col(2).z()) < 0.2) continue;
    const auto est = pnp_dlt(corrs, kCam);
    EXPECT_LT((est.rotation - t.rotation).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_LT((est.translation - t.translation).norm(), 1e-5);
  }
}

TEST(Pnp, DltNeedsSixNonDegeneratePoints) {
  const RigidTransform t = RigidTransform::from_translation({0, 0, 5});
  const std::vector<Vec3> five{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}};
  EXPECT_THROW((void)pnp_dlt(observe(t, five), kCam), Error);
  std::vector<Vec3> line;
  for (int i = 0; i < 8; ++i) line.emplace_back(0.1 * i, 0, 0);
  EXPECT_THROW((void)pnp_dlt(observe(t, line), kCam), Error);
}

TEST(Pnp, GaussNewtonConvergesFromAPerturbedStart) {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto t = looking_at(gen, Vec3::Zero(), 6.0);
  std::vector<Vec3> world;
  for (int i = 0; i < 30; ++i) world.emplace_back(u(gen), u(gen), u(gen));
  const auto corrs = observe(t, world);
  RigidTransform start = t;
  start.rotation = so3_exp(Vec3(0.02, -0.01, 0.015)) * start.rotation;
  start.translation += Vec3(0.1, -0.05, 0.2);
  const auto est = refine_pose_gn(corrs, kCam, start, 20);
  EXPECT_LT(max_abs_diff(est, t), 1e-8);
}

TEST(Mlesac, RejectsOutliersAndReportsInliers) {
  std::mt19937_64 gen(43);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pu(0, 640), pv(0, 480);
  const auto t = looking_at(gen, Vec3::Zero(), 6.0);
  std::vector<Vec3> world;
  for (int i = 0; i < 80; ++i) world.emplace_back(2 * u(gen), u(gen), u(gen));
  auto corrs = observe(t, world);
  for (std::size_t i = 0; i < corrs.size(); i += 3) corrs[i].pixel = {pu(gen), pv(gen)};
  MlesacParams p;
  const auto est = mlesac_pnp(corrs, kCam, p, 7);
  EXPECT_LT(max_abs_diff(est.transform, t), 1e-6);
  EXPECT_GE(est.inlier_indices.size(), corrs.size() * 6 / 10);
  for (auto i : est.inlier_indices) EXPECT_NE(i % 3, 0u);
  EXPECT_LT(est.mean_reprojection_error, 1e-6);
}

TEST(Mlesac, SameSeedSameResult) {
  std::mt19937_64 gen(44);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> n(0.0, 0.7);
  const auto t = looking_at(gen, Vec3::Zero(), 6.0);
  std::vector<Vec3> world;
  for (int i = 0; i < 40; ++i) world.emplace_back(u(gen), u(gen), u(gen));
  auto corrs = observe(t, world);
  for (auto& c : corrs) c.pixel.u += n(gen), c.pixel.v += n(gen);
  const auto a = mlesac_pnp(corrs, kCam, {}, 3), b = mlesac_pnp(corrs, kCam, {}, 3);
  EXPECT_EQ(max_abs_diff(a.transform, b.transform), 0.0);
  EXPECT_EQ(a.inlier_indices, b.inlier_indices);
}

TEST(Mlesac, TooFewCorrespondences) {
  std::vector<Correspondence> c(5);
  EXPECT_THROW((void)mlesac_pnp(c, kCam, {}, 0), Error);
}

TEST(Mlesac, PureNoiseHasNoConsensus) {
  std::mt19937_64 gen(45);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pu(0, 640), pv(0, 480);
  std::vector<Correspondence> c;
  for (int i = 0; i < 30; ++i) c.push_back({Vec3(u(gen), u(gen), u(gen)), {pu(gen), pv(gen)}});
  MlesacParams p;
  p.sigma = 0.5;
  EXPECT_THROW((void)mlesac_pnp(c, kCam, p, 1), Error);
}

}  // namespace
}  // namespace lidarup

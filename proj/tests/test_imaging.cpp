#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "lidarup/imaging.hpp"
#include "oracles.hpp"

namespace lidarup {
namespace {

GrayImage render(const oracle::Texture& tex, int w, int h, double dx, double dy) {
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y) = static_cast<float>(tex(x - dx, y - dy));
  return img;
}

TEST(Gray, LumaWeightsAndSizeCheck) {
  const std::vector<std::uint8_t> rgb{255, 0, 0, 0, 255, 0, 0, 0, 255, 255, 255, 255};
  const auto g = to_gray(rgb, 2, 2);
  EXPECT_NEAR(g.at(0, 0), 0.299, 1e-6);
  EXPECT_NEAR(g.at(1, 0), 0.587, 1e-6);
  EXPECT_NEAR(g.at(0, 1), 0.114, 1e-6);
  EXPECT_NEAR(g.at(1, 1), 1.0, 1e-6);
  EXPECT_THROW((void)to_gray(rgb, 3, 2), Error);
}

TEST(Pnm, PgmRoundTripQuantisesTo8Bits) {
  GrayImage img(7, 5);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>(i) / 34.0f;
  const auto path = (std::filesystem::path(LIDARUP_WORK_DIR) / "roundtrip.pgm").string();
  std::filesystem::create_directories(LIDARUP_WORK_DIR);
  write_pgm(img, path);
  const auto back = read_pnm(path);
  ASSERT_EQ(back.width, 7);
  ASSERT_EQ(back.height, 5);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    EXPECT_NEAR(back.data[i], img.data[i], 0.5 / 255 + 1e-6);
  EXPECT_THROW((void)read_pnm(path + ".missing"), Error);
}

TEST(Pyramid, HalvesUntilTheMinimumSide) {
  GrayImage img(100, 70, 0.5f);
  img.at(0, 0) = 1.0f;
  const auto p = build_pyramid(img, 6);
  ASSERT_EQ(p.levels.size(), 3u);  // 100x70, 50x35, 25x17
  EXPECT_EQ(p.levels[2].width, 25);
  EXPECT_EQ(p.levels[2].height, 17);
  EXPECT_FLOAT_EQ(p.levels[1].at(0, 0), 0.625f);
  EXPECT_THROW((void)build_pyramid(img, 0), Error);
}

TEST(Klt, RecoversSubpixelShiftsOfASmoothTexture) {
  std::mt19937_64 gen(50);
  std::uniform_real_distribution<double> shift(-4.0, 4.0);
  for (int rep = 0; rep < 5; ++rep) {
    const oracle::Texture tex(gen);
    const double dx = shift(gen), dy = shift(gen);
    const auto a = build_pyramid(render(tex, 200, 160, 0, 0), 3);
    const auto b = build_pyramid(render(tex, 200, 160, dx, dy), 3);
    std::vector<Pixel> pts;
    for (int y = 40; y <= 120; y += 20)
      for (int x = 40; x <= 160; x += 20) pts.push_back({double(x), double(y)});
    const auto tracked = klt_track(a, b, pts);
    ASSERT_EQ(tracked.size(), pts.size());
    for (const auto& t : tracked) {
      ASSERT_EQ(t.status, TrackStatus::kConverged);
      EXPECT_NEAR(t.target.u - t.source.u, dx, 0.1);
      EXPECT_NEAR(t.target.v - t.source.v, dy, 0.1);
    }
  }
}

TEST(Klt, FlatRegionsAreLostAndEdgesLeaveTheImage) {
  const GrayImage flat(64, 64, 0.3f);
  const auto p = build_pyramid(flat, 2);
  const std::vector<Pixel> pts{{32, 32}, {-5, 10}};
  const auto t = klt_track(p, p, pts);
  EXPECT_EQ(t[0].status, TrackStatus::kLost);
  EXPECT_EQ(t[1].status, TrackStatus::kOutOfBounds);
}

TEST(Klt, RejectsMismatchedPyramidsAndEvenWindows) {
  const auto a = build_pyramid(GrayImage(64, 64), 2), b = build_pyramid(GrayImage(64, 32), 2);
  EXPECT_THROW((void)klt_track(a, b, {}), Error);
  KltParams even;
  even.window = 8;
  EXPECT_THROW((void)klt_track(a, a, {}, even), Error);
}

}  // namespace
}  // namespace lidarup

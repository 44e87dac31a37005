#include <gtest/gtest.h>

#include <cmath>

#include "omnimask/localization.hpp"
#include "omnimask/oracle.hpp"
#include "omnimask/tessellation.hpp"

using namespace omnimask;

TEST(Harmonics, AreOrthonormalOnTheSphere) {
  const int n = 200000;
  const auto dirs = fibonacci_directions(n);
  std::array<std::array<double, kHarmonicCount>, kHarmonicCount> gram{};
  for (const Direction& d : dirs) {
    const auto y = real_harmonics(d);
    for (int i = 0; i < kHarmonicCount; ++i)
      for (int j = 0; j < kHarmonicCount; ++j) gram[i][j] += y[i] * y[j];
  }
  const double w = 4 * kPi / n;
  for (int i = 0; i < kHarmonicCount; ++i)
    for (int j = 0; j < kHarmonicCount; ++j) EXPECT_NEAR(gram[i][j] * w, i == j ? 1.0 : 0.0, 2e-3) << i << "," << j;
}

TEST(Scene, HarmonicTextureStaysInBounds) {
  const SphericalScene s = SphericalScene::harmonic(42);
  Rng rng(1);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 50000; ++i) {
    const Rgb c = s.texture(rng.direction());
    for (float v : c) {
      lo = std::min<double>(lo, v);
      hi = std::max<double>(hi, v);
    }
  }
  EXPECT_GE(lo, 0.5 - 0.45 - 1e-6);
  EXPECT_LE(hi, 0.5 + 0.45 + 1e-6);
  EXPECT_LT(lo, 0.45);  // the texture actually varies
  EXPECT_GT(hi, 0.55);
  EXPECT_THROW(SphericalScene::harmonic(1, 5), std::invalid_argument);
  EXPECT_THROW(SphericalScene::harmonic(1, 4, 0.6), std::invalid_argument);
}

TEST(Render, ConstantSceneGivesConstantImage) {
  const SphericalScene s = SphericalScene::constant({0.25f, 0.5f, 0.75f});
  const ImageF img = render(s, CameraModel::pinhole(64, 48, 1.0), Rng(2).rotation());
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) {
      EXPECT_FLOAT_EQ(img.at(x, y, 0), 0.25f);
      EXPECT_FLOAT_EQ(img.at(x, y, 2), 0.75f);
    }
}

TEST(Render, IsDeterministic) {
  const CameraModel m = CameraModel::equirectangular(128, 64);
  EXPECT_EQ(render(SphericalScene::harmonic(7), m, Rotation::identity()),
            render(SphericalScene::harmonic(7), m, Rotation::identity()));
  EXPECT_NE(render(SphericalScene::harmonic(7), m, Rotation::identity()),
            render(SphericalScene::harmonic(8), m, Rotation::identity()));
}

TEST(Render, CenteredBlobFollowsEquidistantLaw) {
  const CameraModel fish = CameraModel::fisheye(600, deg2rad(200));
  for (double radius_deg : {10.0, 30.0, 60.0}) {
    SphericalScene s = SphericalScene::constant({0, 0, 0});
    s.blob = Blob{{Direction::normalized(0, 0, -1)}, deg2rad(radius_deg), {1, 1, 1}};
    const ImageF img = render(s, fish, Rotation::identity());
    double area = 0.0;
    for (int y = 0; y < 600; ++y)
      for (int x = 0; x < 600; ++x) area += img.at(x, y, 0);
    const double expected_r = radius_deg / 100.0 * 300.0;
    EXPECT_NEAR(std::sqrt(area / kPi), expected_r, 1.0) << radius_deg;
  }
}

TEST(Render, BlobOverridesTexture) {
  SphericalScene s = SphericalScene::harmonic(3);
  s.blob = Blob{{Direction::normalized(0, 0, -1)}, deg2rad(20), {1.0f, 0.1f, 0.8f}};
  EXPECT_EQ(s.color(Direction::normalized(0.1, 0, -1), 0), s.blob->color);
  EXPECT_EQ(s.color(Direction::normalized(0, 0, 1), 0), s.texture(Direction::normalized(0, 0, 1)));
}

TEST(SequenceRendererTest, MatchesRenderEveryFrame) {
  SphericalScene s = SphericalScene::harmonic(9);
  s.blob = Blob{blob_trajectory(Direction::normalized(0.2, 0.1, -1), {0, 1, 0}, deg2rad(40), 5), deg2rad(15),
                {1, 0.1f, 0.8f}};
  const CameraModel m = CameraModel::fisheye(96, deg2rad(200));
  const Rotation r = Rng(4).rotation();
  const SequenceRenderer seq(s, m, r);
  for (int f = 0; f < 5; ++f) EXPECT_EQ(seq.frame(f), render(s, m, r, f)) << f;
}

TEST(Trajectory, SweepsRequestedAngle) {
  const auto t = blob_trajectory(Direction::normalized(0, 0, -1), {0, 1, 0}, deg2rad(30), 7);
  ASSERT_EQ(t.size(), 7u);
  EXPECT_NEAR(rad2deg(t.front().angle_to(t.back())), 30.0, 1e-9);
  EXPECT_NEAR(rad2deg(t[0].angle_to(t[1])), 5.0, 1e-9);
}

TEST(BlobMask, BehindCameraIsEmpty) {
  SphericalScene s = SphericalScene::constant({0, 0, 0});
  s.blob = Blob{{Direction::normalized(0, 0, 1)}, deg2rad(60), {1, 1, 1}};
  EXPECT_EQ(blob_mask(s, CameraModel::pinhole(100, 100, kPi / 2), Rotation::identity()).count(), 0);
  EXPECT_EQ(blob_mask(s, CameraModel::fisheye(100, kPi), Rotation::identity()).count(), 0);
}

TEST(BlobMask, FacingHemisphereFillsValidDisk) {
  SphericalScene s = SphericalScene::constant({0, 0, 0});
  s.blob = Blob{{Direction::normalized(0, 0, -1)}, kPi / 2 - 1e-9, {1, 1, 1}};
  const CameraModel fish = CameraModel::fisheye(128, kPi);
  const MaskBuffer m = blob_mask(s, fish, Rotation::identity());
  for (int y = 0; y < 128; ++y)
    for (int x = 0; x < 128; ++x) ASSERT_EQ(m.get(x, y), fisheye_unproject({x + 0.5, y + 0.5}, fish).has_value());
}

TEST(BlobMask, EqualsDirectAngleTest) {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    SphericalScene s = SphericalScene::constant({0, 0, 0});
    const Direction c = rng.direction();
    s.blob = Blob{{c}, deg2rad(rng.uniform(5, 80)), {1, 1, 1}};
    const CameraModel m = CameraModel::fisheye(90, deg2rad(220));
    const Rotation r = rng.rotation();
    const MaskBuffer mask = blob_mask(s, m, r);
    for (int y = 0; y < 90; ++y)
      for (int x = 0; x < 90; ++x) {
        const auto d = unproject(m, {x + 0.5, y + 0.5});
        const bool in = d && (r.transposed() * *d).angle_to(c) <= s.blob->angular_radius;
        ASSERT_EQ(mask.get(x, y), in);
      }
  }
}

TEST(BlobMask, CapAreaMatchesAnalyticFraction) {
  const CameraModel omni = CameraModel::equirectangular(1024, 512);
  Rng rng(6);
  for (double radius_deg : {20.0, 45.0, 80.0}) {
    SphericalScene s = SphericalScene::constant({0, 0, 0});
    s.blob = Blob{{rng.direction()}, deg2rad(radius_deg), {1, 1, 1}};
    const MaskBuffer m = blob_mask(s, omni, Rotation::identity());
    double omega = 0.0;
    for (int y = 0; y < 512; ++y)
      for (int x = 0; x < 1024; ++x)
        if (m.get(x, y)) omega += pixel_solid_angle(omni, {x + 0.5, y + 0.5});
    const double expected = (1 - std::cos(deg2rad(radius_deg))) / 2;
    EXPECT_NEAR(omega / (4 * kPi), expected, 0.01 * expected) << radius_deg;
  }
}

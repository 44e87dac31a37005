#include <gtest/gtest.h>

#include <cmath>

#include "omnimask/localization.hpp"
#include "omnimask/oracle.hpp"
#include "test_support.hpp"

using namespace omnimask;

namespace {

VirtualView odd_view(const Rotation& r = Rotation::identity(), int size = 511) {
  return {r, CameraModel::pinhole(size, size, kPi / 2)};
}

ViewMaskStat stat_at(const Direction& d, long long area) {
  ViewMaskStat s;
  s.centroid_dir = d;
  s.area_px = area;
  s.direction_sum = d.vec() * static_cast<double>(area);
  return s;
}

}  // namespace

TEST(MaskStats, SingleCenterPixelGivesOpticalAxis) {
  const Rotation r = Rng(1).rotation();
  const VirtualView v = odd_view(r);
  MaskBuffer m(v.model.size);
  m.set(255, 255);
  const ViewMaskStat s = mask_stats(m, v, 7);
  EXPECT_EQ(s.view_index, 7);
  EXPECT_EQ(s.area_px, 1);
  ASSERT_TRUE(s.centroid_dir);
  EXPECT_LT(s.centroid_dir->angle_to(v.optical_axis()), 1e-12);
}

TEST(MaskStats, SymmetricMaskGivesOpticalAxis) {
  const VirtualView v = odd_view(Rotation::axis_angle({0.3, 1, 0}, 0.7));
  MaskBuffer m(v.model.size);
  for (int y = 0; y < 511; ++y)
    for (int x = 0; x < 511; ++x) {
      const int dx = x - 255, dy = y - 255;
      if (dx * dx + 4 * dy * dy < 120 * 120 || (std::abs(dx) > 200 && std::abs(dy) < 30)) m.set(x, y);
    }
  const ViewMaskStat s = mask_stats(m, v);
  ASSERT_TRUE(s.centroid_dir);
  EXPECT_LT(s.centroid_dir->angle_to(v.optical_axis()), 1e-6);
}

TEST(MaskStats, MatchesDirectSummation) {
  Rng rng(2);
  const VirtualView v{rng.rotation(), CameraModel::pinhole(200, 150, deg2rad(80))};
  const MaskBuffer m = omnimask::testing::random_mask(rng, v.model.size, 0.2);
  Vec3 sum;
  long long n = 0;
  for (int y = 0; y < 150; ++y)
    for (int x = 0; x < 200; ++x)
      if (m.get(x, y)) {
        sum += (v.world_to_camera.transposed() * *unproject(v.model, {x + 0.5, y + 0.5})).vec();
        ++n;
      }
  const ViewMaskStat s = mask_stats(m, v);
  EXPECT_EQ(s.area_px, n);
  const Vec3 expect = sum * (1.0 / sum.norm());
  EXPECT_NEAR(s.centroid_dir->x(), expect.x, 1e-9);
  EXPECT_NEAR(s.centroid_dir->y(), expect.y, 1e-9);
  EXPECT_NEAR(s.centroid_dir->z(), expect.z, 1e-9);
}

TEST(MaskStats, EmptyMaskHasNoDirection) {
  const VirtualView v = odd_view();
  const ViewMaskStat s = mask_stats(MaskBuffer(v.model.size), v);
  EXPECT_EQ(s.area_px, 0);
  EXPECT_FALSE(s.centroid_dir.has_value());
  EXPECT_THROW(mask_stats(MaskBuffer({10, 10}), v), std::invalid_argument);
}

TEST(PixelSolidAngle, SumsToAnalyticTotals) {
  auto total = [](const CameraModel& m) {
    double s = 0.0;
    for (int y = 0; y < m.size.height; ++y)
      for (int x = 0; x < m.size.width; ++x)
        if (unproject(m, {x + 0.5, y + 0.5})) s += pixel_solid_angle(m, {x + 0.5, y + 0.5});
    return s;
  };
  // Square pyramid of half-angle 45 degrees: 4 asin(sin^2 45) = 2 pi / 3.
  EXPECT_NEAR(total(CameraModel::pinhole(400, 400, kPi / 2)), 2 * kPi / 3, 1e-4);
  EXPECT_NEAR(total(CameraModel::cubemap_face(300, 1)), 2 * kPi / 3, 1e-4);
  EXPECT_NEAR(total(CameraModel::equirectangular(800, 400)), 4 * kPi, 1e-4);
  EXPECT_NEAR(total(CameraModel::fisheye(800, kPi)), 2 * kPi, 2e-2);
}

TEST(Fuse, OnePassingStatReturnsItsCentroid) {
  const Direction d = Direction::normalized(0.2, -0.4, 0.7);
  const Direction f = fuse_direction({stat_at(d, 500), stat_at(Direction::normalized(1, 0, 0), 3)}, 100,
                                     FusionMode::area_weighted_centroids);
  EXPECT_LT(f.angle_to(d), 1e-15);
}

TEST(Fuse, SymmetricPairGivesReferenceAxis) {
  const Direction a = Direction::normalized(0.3, 0.1, -1);
  const Direction b = Direction::normalized(-0.3, -0.1, -1);
  const Direction f = fuse_direction({stat_at(a, 1000), stat_at(b, 1000)}, 1, FusionMode::area_weighted_centroids);
  EXPECT_NEAR(f.x(), 0.0, 1e-15);
  EXPECT_NEAR(f.y(), 0.0, 1e-15);
  EXPECT_NEAR(f.z(), -1.0, 1e-15);
}

TEST(Fuse, MatchesWeightedVectorSum) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ViewMaskStat> stats;
    Vec3 expect;
    for (int i = 0; i < 3; ++i) {
      const Direction d = rng.direction();
      const long long area = rng.uniform_int(1, 10000);
      stats.push_back(stat_at(d, area));
      expect += d.vec() * static_cast<double>(area);
    }
    expect = expect * (1.0 / expect.norm());
    const Direction f = fuse_direction(stats, 1, FusionMode::area_weighted_centroids);
    EXPECT_NEAR(f.x(), expect.x, 1e-12);
    EXPECT_NEAR(f.y(), expect.y, 1e-12);
    EXPECT_NEAR(f.z(), expect.z, 1e-12);
  }
}

TEST(Fuse, ScaleInvariantAndRotationEquivariant) {
  Rng rng(4);
  std::vector<ViewMaskStat> stats, scaled, rotated;
  const Rotation r = rng.rotation();
  for (int i = 0; i < 5; ++i) {
    const Direction d = Direction::normalized(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), -1.0);
    const long long a = rng.uniform_int(100, 1000);
    stats.push_back(stat_at(d, a));
    scaled.push_back(stat_at(d, a * 7));
    rotated.push_back(stat_at(r * d, a));
  }
  for (FusionMode mode : {FusionMode::area_weighted_centroids, FusionMode::pixel_average}) {
    const Direction f = fuse_direction(stats, 1, mode);
    EXPECT_LT(fuse_direction(scaled, 7, mode).angle_to(f), 1e-12);
    EXPECT_LT(fuse_direction(rotated, 1, mode).angle_to(r * f), 1e-9);
  }
}

TEST(Fuse, ThresholdAndNotFound) {
  const std::vector<ViewMaskStat> stats{stat_at(Direction::normalized(1, 0, 0), 10),
                                        stat_at(Direction::normalized(0, 1, 0), 99)};
  EXPECT_THROW(fuse_direction(stats, 100), CapturerNotFound);
  EXPECT_THROW(fuse_direction({}, 1), CapturerNotFound);
  ViewMaskStat empty;
  EXPECT_THROW(fuse_direction({empty}, 0), CapturerNotFound);
  EXPECT_LT(fuse_direction(stats, 50, FusionMode::area_weighted_centroids).angle_to(Direction::normalized(0, 1, 0)),
            1e-15);
  EXPECT_EQ(default_min_area({512, 512}), 262);
}

TEST(Fuse, SolidAngleModeRecoversCapCenters) {
  // Analytic cap masks in all 16 views, fused with per-pixel solid-angle
  // weights shared across overlapping views.
  const ViewSet views = tessellate(16, kPi / 2, 256);
  Rng rng(5);
  SphericalScene scene = SphericalScene::constant({0.5f, 0.5f, 0.5f});
  for (int trial = 0; trial < 6; ++trial) {
    const Direction c = rng.direction();
    scene.blob = Blob{{c}, deg2rad(rng.uniform(5.0, 45.0)), {1, 0, 0}};
    std::vector<ViewMaskStat> stats;
    double omega = 0.0;
    for (std::size_t v = 0; v < views.count(); ++v) {
      stats.push_back(mask_stats(blob_mask(scene, views.views[v].model, views.views[v].world_to_camera),
                                 views.views[v], static_cast<int>(v), &views));
      omega += stats.back().solid_angle_sr;
    }
    const Direction f = fuse_direction(stats, 1, FusionMode::solid_angle);
    EXPECT_LT(rad2deg(f.angle_to(c)), 0.1) << "trial " << trial;
    const double cap = 2 * kPi * (1 - std::cos(scene.blob->angular_radius));
    EXPECT_NEAR(omega, cap, 0.02 * cap);
  }
}

TEST(Centering, ReferenceAxisIsIdentity) {
  EXPECT_EQ(centering_rotation(Direction::normalized(0, 0, -1)), Rotation::identity());
}

TEST(Centering, XAxisIsNinetyDegreeYaw) {
  const Rotation r = centering_rotation(Direction::normalized(1, 0, 0));
  const Vec3 m = r.apply({1, 0, 0});
  EXPECT_NEAR(m.x, 0.0, 1e-12);
  EXPECT_NEAR(m.y, 0.0, 1e-12);
  EXPECT_NEAR(m.z, -1.0, 1e-12);
  EXPECT_NEAR(r(1, 1), 1.0, 1e-12);  // rotation about the vertical axis
}

TEST(Centering, AntipodeIsHalfTurnAboutVertical) {
  const Rotation r = centering_rotation(Direction::normalized(0, 0, 1));
  const Rotation expect = Rotation::axis_angle({0, -1, 0}, kPi);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(r(i, j), expect(i, j), 1e-15);
}

TEST(Centering, RandomTargetsProperties) {
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const Direction t = rng.direction();
    const Rotation r = centering_rotation(t);
    const Vec3 m = r.apply(t.vec());
    ASSERT_NEAR(m.x, 0.0, 1e-12);
    ASSERT_NEAR(m.y, 0.0, 1e-12);
    ASSERT_NEAR(m.z, -1.0, 1e-12);
    ASSERT_LT(r.orthonormality_error(), 1e-12);
    ASSERT_NEAR(r.determinant(), 1.0, 1e-12);
    // World-down lands in the plane of the new axis and image-down.
    const Vec3 down = r.apply({0, 1, 0});
    ASSERT_NEAR(down.x, 0.0, 1e-12);
    ASSERT_GE(down.y, 0.0);
  }
}

TEST(Centering, PolesStillMapOntoAxis) {
  for (double y : {-1.0, 1.0}) {
    const Rotation r = centering_rotation(Direction::normalized(0, y, 0));
    const Vec3 m = r.apply({0, y, 0});
    EXPECT_NEAR(m.z, -1.0, 1e-12);
    EXPECT_LT(r.orthonormality_error(), 1e-12);
  }
}

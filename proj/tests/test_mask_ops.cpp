#include <gtest/gtest.h>

#include "omnimask/mask_ops.hpp"
#include "test_support.hpp"

using namespace omnimask;
using omnimask::testing::brute_force_dilate;
using omnimask::testing::random_mask;

TEST(Dilate, SinglePixelBecomesSquare) {
  MaskBuffer m({40, 30});
  m.set(20, 15);
  const MaskBuffer d = dilate_mask(m, 4);
  EXPECT_EQ(d.count(), 81);
  for (int y = 11; y <= 19; ++y)
    for (int x = 16; x <= 24; ++x) EXPECT_TRUE(d.get(x, y));
  EXPECT_FALSE(d.get(15, 15));
  EXPECT_FALSE(d.get(20, 20));
}

TEST(Dilate, ClipsAtBorders) {
  MaskBuffer m({10, 10});
  m.set(0, 0);
  m.set(9, 9);
  const MaskBuffer d = dilate_mask(m, 4);
  EXPECT_EQ(d.count(), 2 * 25);
  EXPECT_TRUE(d.get(4, 4));
  EXPECT_TRUE(d.get(5, 5));
  EXPECT_FALSE(d.get(5, 4));
}

TEST(Dilate, RadiusZeroIsIdentity) {
  Rng rng(1);
  const MaskBuffer m = random_mask(rng, {33, 17}, 0.3);
  EXPECT_EQ(dilate_mask(m, 0), m);
  EXPECT_THROW(dilate_mask(m, -1), std::invalid_argument);
}

TEST(Dilate, MatchesBruteForceMaxFilter) {
  Rng rng(2);
  for (int trial = 0; trial < 24; ++trial) {
    const ImageSize size{rng.uniform_int(1, 70), rng.uniform_int(1, 70)};
    const int r = rng.uniform_int(0, 9);
    const MaskBuffer m = random_mask(rng, size, rng.uniform(0.0, 0.05));
    ASSERT_EQ(dilate_mask(m, r), brute_force_dilate(m, r)) << "trial " << trial << " r=" << r;
  }
}

TEST(Dilate, MonotoneInRadius) {
  Rng rng(3);
  const MaskBuffer m = random_mask(rng, {64, 64}, 0.01);
  MaskBuffer prev = m;
  for (int r = 1; r < 6; ++r) {
    const MaskBuffer d = dilate_mask(m, r);
    EXPECT_EQ(mask_and_not(prev, d).count(), 0) << r;
    prev = d;
  }
}

TEST(BoundaryMask, FullDiskAtZeroMargin) {
  const MaskBuffer m = boundary_mask(CameraModel::fisheye(720, deg2rad(200)), 0);
  EXPECT_TRUE(m.get(360, 360));
  EXPECT_TRUE(m.get(0, 359));
  EXPECT_TRUE(m.get(719, 360));
  EXPECT_FALSE(m.get(0, 0));
  EXPECT_FALSE(m.get(719, 719));
  EXPECT_NEAR(static_cast<double>(m.count()), kPi * 360 * 360, 0.001 * kPi * 360 * 360);
}

TEST(BoundaryMask, HalfWidthMarginIsEmpty) {
  EXPECT_EQ(boundary_mask(CameraModel::fisheye(720, kPi), 360).count(), 0);
  EXPECT_EQ(boundary_mask(CameraModel::fisheye(721, kPi), 400).count(), 0);
}

TEST(BoundaryMask, AreaMatchesAnalyticDisk) {
  const MaskBuffer m = boundary_mask(CameraModel::fisheye(720, kPi), 20);
  const double expected = kPi * 340.0 * 340.0;
  EXPECT_NEAR(static_cast<double>(m.count()), expected, 0.01 * expected);
}

TEST(BoundaryMask, RejectsBadInput) {
  EXPECT_THROW(boundary_mask(CameraModel::fisheye(64, kPi), -1), std::invalid_argument);
  EXPECT_THROW(boundary_mask(CameraModel::pinhole(64, 64, 1.0), 0), std::invalid_argument);
}

TEST(MaskAlgebra, AndNotMatchesBitwiseOracle) {
  Rng rng(4);
  const MaskBuffer a = random_mask(rng, {50, 40}, 0.5);
  const MaskBuffer b = random_mask(rng, {50, 40}, 0.5);
  const MaskBuffer c = mask_and_not(a, b);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 50; ++x) ASSERT_EQ(c.get(x, y), a.get(x, y) && !b.get(x, y));
  EXPECT_THROW(mask_and_not(a, MaskBuffer({5, 5})), std::invalid_argument);
}

TEST(MaskAlgebra, IoU) {
  MaskBuffer a({4, 1}), b({4, 1});
  EXPECT_DOUBLE_EQ(mask_iou(a, b), 1.0);
  a.set(0, 0);
  a.set(1, 0);
  b.set(1, 0);
  b.set(2, 0);
  EXPECT_DOUBLE_EQ(mask_iou(a, b), 1.0 / 3.0);
}

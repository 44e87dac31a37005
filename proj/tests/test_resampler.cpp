#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "omnimask/oracle.hpp"
#include "omnimask/resampler.hpp"
#include "test_support.hpp"

using namespace omnimask;
using omnimask::testing::psnr;

namespace {

ImageF harmonic_omni(int width, std::uint64_t seed = 2024) {
  return render(SphericalScene::harmonic(seed), CameraModel::equirectangular(width, width / 2), Rotation::identity());
}

// Solid-angle weighted channel mean of an equirect image.
double weighted_mean(const ImageF& img) {
  double acc = 0.0, wsum = 0.0;
  for (int y = 0; y < img.height(); ++y) {
    const double w = std::cos((0.5 - (y + 0.5) / img.height()) * kPi);
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        acc += w * img.at(x, y, c);
        wsum += w;
      }
  }
  return acc / wsum;
}

}  // namespace

TEST(Resample, IdentityIsBitExact) {
  Rng rng(1);
  ImageU8 src({64, 32}, 3);
  for (auto& s : src.samples()) s = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  const CameraModel omni = CameraModel::equirectangular(64, 32);
  EXPECT_EQ(resample_image(src, {omni, omni, Rotation::identity(), Interpolation::bilinear, 0}), src);
  EXPECT_EQ(resample_image(src, {omni, omni, Rotation::identity(), Interpolation::nearest, 0}), src);

  ImageF fsrc({48, 48}, 1);
  for (auto& s : fsrc.samples()) s = static_cast<float>(rng.uniform());
  for (const CameraModel& m : {CameraModel::pinhole(48, 48, 1.2), CameraModel::cubemap_face(48, 2)}) {
    EXPECT_EQ(resample_image(fsrc, {m, m, Rotation::identity(), Interpolation::bilinear, 0}), fsrc);
  }
  // Fisheye corners are out of domain and receive the fill value.
  const CameraModel fish = CameraModel::fisheye(48, kPi);
  const ImageF out = resample_image(fsrc, {fish, fish, Rotation::identity(), Interpolation::bilinear, 0});
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) {
      if (fisheye_unproject({x + 0.5, y + 0.5}, fish)) {
        ASSERT_EQ(out.at(x, y), fsrc.at(x, y));
      } else {
        ASSERT_EQ(out.at(x, y), 0.0f);
      }
    }
}

TEST(Resample, ConstantInConstantOut) {
  const ImageU8 src({200, 100}, 3, 77);
  Rng rng(2);
  const CameraModel omni = CameraModel::equirectangular(200, 100);
  const CameraModel fish = CameraModel::fisheye(90, deg2rad(190));
  const ImageU8 out = resample_image(src, {omni, fish, rng.rotation(), Interpolation::bilinear, 0});
  for (int y = 0; y < 90; ++y)
    for (int x = 0; x < 90; ++x) {
      const bool inside = fisheye_unproject({x + 0.5, y + 0.5}, fish).has_value();
      for (int c = 0; c < 3; ++c) ASSERT_EQ(out.at(x, y, c), inside ? 77 : 0);
    }
}

TEST(Resample, RejectsSizeMismatch) {
  const ImageU8 src({100, 50}, 1);
  EXPECT_THROW(resample_image(src, {CameraModel::equirectangular(200, 100), CameraModel::equirectangular(200, 100),
                                    Rotation::identity(), Interpolation::bilinear, 0}),
               std::invalid_argument);
  EXPECT_THROW(resample_mask(MaskBuffer({10, 10}), {CameraModel::fisheye(12, kPi), CameraModel::fisheye(12, kPi),
                                                    Rotation::identity(), Interpolation::nearest, 0}),
               std::invalid_argument);
}

TEST(Resample, PreservesValueRange) {
  const ImageF src = harmonic_omni(256);
  const auto [lo, hi] = std::minmax_element(src.samples().begin(), src.samples().end());
  Rng rng(3);
  const CameraModel omni = CameraModel::equirectangular(256, 128);
  const ImageF out = resample_image(src, {omni, omni, rng.rotation(), Interpolation::bilinear, 0.0});
  for (float v : out.samples()) {
    ASSERT_GE(v, *lo);
    ASSERT_LE(v, *hi);
  }
}

TEST(Resample, DeterministicAcrossThreadCounts) {
  const ImageF src = harmonic_omni(256);
  const CameraModel omni = CameraModel::equirectangular(256, 128);
  const ResampleSpec spec{omni, CameraModel::fisheye(160, kPi), Rng(4).rotation(), Interpolation::bilinear, 0.0};
  set_thread_count(1);
  const ImageF a = resample_image(src, spec);
  set_thread_count(5);
  const ImageF b = resample_image(src, spec);
  set_thread_count(0);
  EXPECT_EQ(a, b);
}

TEST(Resample, CubemapRoundTripFidelity) {
  const ImageF omni = harmonic_omni(1024);
  const auto faces = equirect_to_cubemap(omni, 512);
  const ImageF back = resample_from_cubemap(faces, CameraModel::equirectangular(1024, 512), Rotation::identity());
  EXPECT_GT(psnr(omni, back), 40.0);
}

TEST(Resample, CubemapMatchesDirectRender) {
  const SphericalScene scene = SphericalScene::harmonic(99);
  const ImageF omni = render(scene, CameraModel::equirectangular(1024, 512), Rotation::identity());
  const auto faces = equirect_to_cubemap(omni, 256);
  for (int f = 0; f < 6; ++f) {
    const ImageF direct = render(scene, CameraModel::cubemap_face(256, f), Rotation::identity());
    EXPECT_GT(psnr(faces[f], direct), 40.0) << face_name(f);
  }
}

TEST(Resample, RotationComposition) {
  const ImageF src = harmonic_omni(512);
  const CameraModel omni = CameraModel::equirectangular(512, 256);
  Rng rng(5);
  const Rotation r1 = rng.rotation();
  const Rotation r2 = rng.rotation();
  // Destination of the second pass relates to the source by r2 * r1.
  const ImageF once = resample_image(src, {omni, omni, r2 * r1, Interpolation::bilinear, 0});
  const ImageF twice = resample_image(resample_image(src, {omni, omni, r2, Interpolation::bilinear, 0}),
                                      {omni, omni, r1, Interpolation::bilinear, 0});
  const SphericalScene scene = SphericalScene::harmonic(2024);
  const ImageF truth = render(scene, omni, (r2 * r1).transposed());
  const double single = psnr(truth, once);
  const double dbl = psnr(truth, twice);
  EXPECT_GT(dbl, 35.0);
  EXPECT_LT(single - dbl, 6.0);
}

TEST(Resample, EnergyPreservedOnFullSphere) {
  const ImageF src = harmonic_omni(512);
  const CameraModel omni = CameraModel::equirectangular(512, 256);
  Rng rng(6);
  for (int i = 0; i < 3; ++i) {
    const ImageF out = resample_image(src, {omni, omni, rng.rotation(), Interpolation::bilinear, 0});
    EXPECT_NEAR(weighted_mean(out), weighted_mean(src), 0.02 * weighted_mean(src));
  }
}

TEST(ResampleMask, FullAndEmpty) {
  const CameraModel omni = CameraModel::equirectangular(200, 100);
  const CameraModel fish = CameraModel::fisheye(80, kPi);
  const Rotation r = Rng(7).rotation();
  const MaskBuffer full = resample_mask(MaskBuffer(omni.size, true), {omni, fish, r, Interpolation::bilinear, 0});
  for (int y = 0; y < 80; ++y)
    for (int x = 0; x < 80; ++x)
      ASSERT_EQ(full.get(x, y), fisheye_unproject({x + 0.5, y + 0.5}, fish).has_value());
  EXPECT_EQ(resample_mask(MaskBuffer(omni.size), {omni, fish, r, Interpolation::bilinear, 0}).count(), 0);
}

TEST(ResampleMask, CapRoundTripThroughFisheye) {
  SphericalScene scene = SphericalScene::constant({0.5f, 0.5f, 0.5f});
  Rng rng(8);
  const CameraModel omni = CameraModel::equirectangular(1440, 720);
  const CameraModel fish = CameraModel::fisheye(720, kPi);
  for (int trial = 0; trial < 5; ++trial) {
    const Direction c = rng.direction();
    scene.blob = Blob{{c}, deg2rad(rng.uniform(10.0, 60.0)), {1, 0, 0}};
    const MaskBuffer truth = blob_mask(scene, omni, Rotation::identity());
    // Fisheye looking at the cap center.
    const Rotation to_fish = Rotation::look_at(c.vec(), std::abs(c.y()) > 0.99 ? Vec3{0, 0, 1} : Vec3{0, 1, 0});
    const MaskBuffer in_fish = resample_mask(truth, {omni, fish, to_fish.transposed(), Interpolation::nearest, 0});
    const MaskBuffer back = resample_mask(in_fish, {fish, omni, to_fish, Interpolation::nearest, 0});
    EXPECT_GT(mask_iou(truth, back), 0.98) << "trial " << trial;
  }
}

TEST(ResampleMask, OutputIsBinary) {
  Rng rng(9);
  const MaskBuffer m = omnimask::testing::random_mask(rng, {128, 64}, 0.4);
  const CameraModel omni = CameraModel::equirectangular(128, 64);
  const MaskBuffer out = resample_mask(m, {omni, CameraModel::pinhole(50, 40, 1.0), rng.rotation(),
                                           Interpolation::bilinear, 0});
  for (auto b : out.bits()) ASSERT_TRUE(b == 0 || b == 1);
}

TEST(Rig, WorldProjectAgreesWithResampledOmni) {
  // A tight Gaussian spot in the omni frame must land, after omni -> fisheye
  // resampling, where fisheye_world_project puts its direction.
  const CameraModel omni = CameraModel::equirectangular(2048, 1024);
  const CameraModel fish = CameraModel::fisheye(512, deg2rad(190));
  Rng rng(10);
  RigExtrinsics rig;
  rig.rear = Rotation::axis_angle({0.1, 1, 0.2}, 0.05);
  rig.front = Rotation::axis_angle({1, 0, 0.3}, -0.04);
  int checked = 0;
  while (checked < 6) {
    const Direction d = rng.direction();
    const auto pf = fisheye_world_project(d, rig, FisheyeSide::front, fish);
    const auto pr = fisheye_world_project(d, rig, FisheyeSide::rear, fish);
    if (pf.has_value() == pr.has_value()) continue;  // visible to exactly one camera
    const FisheyeSide side = pf ? FisheyeSide::front : FisheyeSide::rear;
    const PixelCoord expected = pf ? *pf : *pr;
    // Keep away from the image rim so the spot is not truncated.
    if (std::hypot(expected.u - 256, expected.v - 256) > 230) continue;
    ImageF spot(omni.size, 1);
    const double sigma = deg2rad(0.6);
    for (int y = 0; y < omni.size.height; ++y)
      for (int x = 0; x < omni.size.width; ++x) {
        const double a = omni_unproject({x + 0.5, y + 0.5}, omni.size).angle_to(d);
        spot.at(x, y) = static_cast<float>(std::exp(-0.5 * (a / sigma) * (a / sigma)));
      }
    const ImageF seen = resample_image(
        spot, {omni, fish, rig.world_to_camera(side).transposed(), Interpolation::bilinear, 0.0});
    double su = 0, sv = 0, sw = 0;
    for (int y = 0; y < 512; ++y)
      for (int x = 0; x < 512; ++x) {
        const double w = seen.at(x, y) > 0.05 ? seen.at(x, y) : 0.0;
        su += w * (x + 0.5);
        sv += w * (y + 0.5);
        sw += w;
      }
    ASSERT_GT(sw, 0.0);
    EXPECT_NEAR(su / sw, expected.u, 0.5) << to_string(side);
    EXPECT_NEAR(sv / sw, expected.v, 0.5) << to_string(side);
    ++checked;
  }
}

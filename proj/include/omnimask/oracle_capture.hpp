#pragma once

// Writes synthetic dual-fisheye captures in the pipeline's input layout, with
// the generating scene alongside so that the oracle adapter (and tests) can
// reproduce the exact capturer footprint of every frame.

#include <filesystem>
#include <optional>

#include "omnimask/oracle.hpp"
#include "omnimask/pipeline.hpp"
#include "omnimask/serialization.hpp"

namespace omnimask {

struct OracleCaptureSpec {
  int frames = 60;
  int size = 720;
  double fov_deg = 200.0;
  std::uint64_t seed = 0;
  double blob_radius_deg = 30.0;
  std::optional<Direction> blob_center;  ///< mid-trajectory center; random if unset
  double motion_deg = 20.0;              ///< total sweep of the blob center
  RigExtrinsics rig;
};

/// Scene whose blob sweeps `motion_deg` about a random axis through the
/// blob's mid-trajectory center.
inline SphericalScene oracle_scene(const OracleCaptureSpec& spec) {
  if (spec.frames < 1) throw std::invalid_argument("oracle capture needs at least one frame");
  if (!(spec.blob_radius_deg > 0.0 && spec.blob_radius_deg < 90.0))
    throw std::invalid_argument("blob radius must be in (0, 90) degrees");
  Rng rng(spec.seed);
  SphericalScene scene = SphericalScene::harmonic(rng.uniform_int(0, 1 << 30));
  const Direction mid = spec.blob_center ? *spec.blob_center : rng.direction();
  // Motion axis: random, made perpendicular to the mid-trajectory center.
  Vec3 axis = rng.direction().vec();
  axis = axis - mid.vec() * axis.dot(mid.vec());
  if (axis.norm() < 1e-6) axis = Vec3{0.0, 1.0, 0.0}.cross(mid.vec());
  if (axis.norm() < 1e-6) axis = Vec3{1.0, 0.0, 0.0};
  const double m = deg2rad(spec.motion_deg);
  const Direction start = Direction::normalized(Rotation::axis_angle(axis, -0.5 * m).apply(mid.vec()));
  scene.blob = Blob{blob_trajectory(start, axis, m, spec.frames), deg2rad(spec.blob_radius_deg), {1.0f, 0.1f, 0.8f}};
  return scene;
}

inline CameraModel oracle_raw_model(const OracleCaptureSpec& spec) {
  return CameraModel::fisheye(spec.size, deg2rad(spec.fov_deg));
}

/// Renders front/NNNNNN.png and rear/NNNNNN.png plus scene.json and
/// extrinsics.json into `dir`. Returns the scene.
inline SphericalScene write_oracle_capture(const OracleCaptureSpec& spec, const std::filesystem::path& dir,
                                           const ProgressFn& progress = {}) {
  const SphericalScene scene = oracle_scene(spec);
  const CameraModel model = oracle_raw_model(spec);
  for (FisheyeSide side : {FisheyeSide::front, FisheyeSide::rear}) {
    const SequenceRenderer renderer(scene, model, spec.rig.world_to_camera(side));
    for (int f = 0; f < spec.frames; ++f) {
      write_png(dir / std::string(to_string(side)) / frame_file_name(f), to_u8(renderer.frame(f)));
      if (progress) progress(json{{"stage", "oracle"}, {"side", std::string(to_string(side))}, {"frame", f}});
    }
  }
  write_json_file(dir / "scene.json", to_json(scene));
  write_json_file(dir / "extrinsics.json", to_json(spec.rig));
  return scene;
}

}  // namespace omnimask

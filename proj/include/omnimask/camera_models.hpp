#pragma once

// Projection functions between unit directions and pixel coordinates.
//
// Conventions shared by every model:
//   * right-handed frame, camera looks along -z, image v grows with +y
//     (y is "down"), image u grows with -x;
//   * pixel (i, j) has its center at continuous coordinate (i + 0.5, j + 0.5);
//   * latitude phi = asin(-y), longitude lambda = atan2(x, -z).

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "omnimask/geometry.hpp"

namespace omnimask {

struct SphericalCoord {
  double lat = 0.0;  ///< phi in [-pi/2, pi/2]
  double lon = 0.0;  ///< lambda in (-pi, pi]
};

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

struct ImageSize {
  int width = 0;
  int height = 0;

  constexpr long long pixel_count() const { return static_cast<long long>(width) * height; }
  constexpr bool operator==(const ImageSize&) const = default;
  constexpr bool contains(const PixelCoord& p) const {
    return p.u >= 0.0 && p.u <= width && p.v >= 0.0 && p.v <= height;
  }
};

inline std::string to_string(const ImageSize& s) {
  return std::to_string(s.width) + "x" + std::to_string(s.height);
}

enum class ModelKind { equirectangular, equidistant_fisheye, pinhole, cubemap_face };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::equirectangular: return "equirectangular";
    case ModelKind::equidistant_fisheye: return "equidistant_fisheye";
    case ModelKind::pinhole: return "pinhole";
    case ModelKind::cubemap_face: return "cubemap_face";
  }
  return "unknown";
}

inline ModelKind model_kind_from_string(std::string_view s) {
  if (s == "equirectangular" || s == "equirect" || s == "omni") return ModelKind::equirectangular;
  if (s == "equidistant_fisheye" || s == "fisheye") return ModelKind::equidistant_fisheye;
  if (s == "pinhole") return ModelKind::pinhole;
  if (s == "cubemap_face" || s == "cubemap") return ModelKind::cubemap_face;
  throw std::invalid_argument("unknown camera model kind '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Cubemap faces, in tie-breaking priority order.

enum class CubeFace : int { pos_x = 0, neg_x = 1, pos_y = 2, neg_y = 3, pos_z = 4, neg_z = 5 };

inline constexpr std::array<std::string_view, 6> kCubeFaceNames{"+x", "-x", "+y", "-y", "+z", "-z"};

inline std::string_view face_name(int face) { return kCubeFaceNames.at(static_cast<std::size_t>(face)); }

/// World-to-face rotation. Each face looks along its axis; the side faces keep
/// world-down as image-down, the +y (floor) face has image-down toward +z and
/// the -y (sky) face toward -z, matching a camera pitched from the -z view.
inline Rotation cube_face_rotation(int face) {
  switch (face) {
    case 0: return Rotation::look_at({1, 0, 0}, {0, 1, 0});
    case 1: return Rotation::look_at({-1, 0, 0}, {0, 1, 0});
    case 2: return Rotation::look_at({0, 1, 0}, {0, 0, 1});
    case 3: return Rotation::look_at({0, -1, 0}, {0, 0, -1});
    case 4: return Rotation::look_at({0, 0, 1}, {0, 1, 0});
    case 5: return Rotation::identity();
    default: throw std::out_of_range("cube face index must be in [0, 5]");
  }
}

// ---------------------------------------------------------------------------

struct CameraModel {
  ModelKind kind = ModelKind::equirectangular;
  ImageSize size{};
  double fov = 0.0;   ///< fisheye: total fov; pinhole: horizontal fov; cubemap: pi/2; equirect: unused
  int face_index = 0; ///< cubemap only

  static CameraModel equirectangular(int width, int height) {
    CameraModel m{ModelKind::equirectangular, {width, height}, 0.0, 0};
    m.validate();
    return m;
  }
  static CameraModel fisheye(int size, double fov) {
    CameraModel m{ModelKind::equidistant_fisheye, {size, size}, fov, 0};
    m.validate();
    return m;
  }
  static CameraModel pinhole(int width, int height, double fov) {
    CameraModel m{ModelKind::pinhole, {width, height}, fov, 0};
    m.validate();
    return m;
  }
  static CameraModel cubemap_face(int size, int face) {
    CameraModel m{ModelKind::cubemap_face, {size, size}, kPi / 2, face};
    m.validate();
    return m;
  }

  void validate() const {
    if (size.width < 1 || size.height < 1) throw std::invalid_argument("camera model: image size must be positive");
    switch (kind) {
      case ModelKind::equirectangular:
        if (size.width != 2 * size.height)
          throw std::invalid_argument("equirectangular model requires W = 2H, got " + to_string(size));
        break;
      case ModelKind::equidistant_fisheye:
        if (!(fov > 0.0 && fov < 2 * kPi)) throw std::invalid_argument("fisheye fov must be in (0, 2pi)");
        if (size.width != size.height) throw std::invalid_argument("fisheye model must be square, got " + to_string(size));
        break;
      case ModelKind::pinhole:
        if (!(fov > 0.0 && fov < kPi)) throw std::invalid_argument("pinhole fov must be in (0, pi)");
        break;
      case ModelKind::cubemap_face:
        if (size.width != size.height) throw std::invalid_argument("cubemap face must be square");
        if (face_index < 0 || face_index > 5) throw std::invalid_argument("cubemap face index must be in [0, 5]");
        if (fov != kPi / 2) throw std::invalid_argument("cubemap face fov is fixed at pi/2");
        break;
    }
  }

  /// Focal length in pixels for the perspective kinds.
  double focal_px() const { return (size.width * 0.5) / std::tan(fov * 0.5); }
};

// ---------------------------------------------------------------------------
// Sphere <-> direction

inline SphericalCoord dir_to_spherical(const Direction& d) {
  const double y = std::clamp(d.y(), -1.0, 1.0);
  SphericalCoord s;
  s.lat = std::asin(-y);
  // atan2(0, -0.0) would be pi; poles and exact zeros canonicalize to 0.
  if (d.x() == 0.0 && d.z() == 0.0) {
    s.lon = 0.0;
  } else {
    s.lon = std::atan2(d.x(), -d.z());
    if (s.lon <= -kPi) s.lon = kPi;
  }
  return s;
}

inline Direction spherical_to_dir(const SphericalCoord& s) {
  if (s.lat >= kPi / 2) return Direction::from_unit({0.0, -1.0, 0.0});
  if (s.lat <= -kPi / 2) return Direction::from_unit({0.0, 1.0, 0.0});
  const double cl = std::cos(s.lat);
  return Direction::from_unit({cl * std::sin(s.lon), -std::sin(s.lat), -cl * std::cos(s.lon)});
}

// ---------------------------------------------------------------------------
// Equirectangular ("omni")

inline void require_equirect_size(const ImageSize& size) {
  if (size.width < 1 || size.width != 2 * size.height)
    throw std::invalid_argument("equirectangular size requires W = 2H, got " + to_string(size));
}

/// u = (1 - lambda/pi) W/2, v = (1 - 2 phi/pi) H/2.
inline PixelCoord omni_pixel(const SphericalCoord& s, const ImageSize& size) {
  return {(1.0 + (-s.lon) / kPi) * size.width * 0.5, (1.0 - 2.0 * s.lat / kPi) * size.height * 0.5};
}

/// Front-camera variant with the longitude offset by pi. Unwrapped: u lies in
/// [W/2, 3W/2]; callers that need an in-image coordinate reduce it modulo W.
inline PixelCoord omni_pixel_front(const SphericalCoord& s, const ImageSize& size) {
  return {(1.0 + (-s.lon + kPi) / kPi) * size.width * 0.5, (1.0 - 2.0 * s.lat / kPi) * size.height * 0.5};
}

inline PixelCoord omni_project(const Direction& d, const ImageSize& size) {
  require_equirect_size(size);
  return omni_pixel(dir_to_spherical(d), size);
}

inline Direction omni_unproject(const PixelCoord& p, const ImageSize& size) {
  require_equirect_size(size);
  if (!size.contains(p)) throw std::out_of_range("omni_unproject: pixel outside the image");
  SphericalCoord s;
  s.lon = (1.0 - 2.0 * p.u / size.width) * kPi;
  s.lat = (1.0 - 2.0 * p.v / size.height) * (kPi / 2);
  return spherical_to_dir(s);
}

// ---------------------------------------------------------------------------
// Equidistant fisheye, optical axis (0, 0, -1): r = theta / (fov/2) * W/2.

inline std::optional<PixelCoord> fisheye_project(const Direction& d, const CameraModel& model) {
  const double half_fov = model.fov * 0.5;
  const double theta = std::acos(std::clamp(-d.z(), -1.0, 1.0));
  if (theta > half_fov) return std::nullopt;
  const double cx = model.size.width * 0.5;
  const double cy = model.size.height * 0.5;
  const double rho = std::sqrt(d.x() * d.x() + d.y() * d.y());
  if (rho == 0.0) return PixelCoord{cx, cy};
  const double r = theta / half_fov * cx;
  return PixelCoord{cx - r * d.x() / rho, cy + r * d.y() / rho};
}

inline std::optional<Direction> fisheye_unproject(const PixelCoord& p, const CameraModel& model) {
  const double cx = model.size.width * 0.5;
  const double cy = model.size.height * 0.5;
  const double du = p.u - cx;
  const double dv = p.v - cy;
  const double r = std::sqrt(du * du + dv * dv);
  if (r > cx) return std::nullopt;
  if (r == 0.0) return Direction{};
  const double theta = r / cx * (model.fov * 0.5);
  const double s = std::sin(theta) / r;
  return Direction::from_unit({-du * s, dv * s, -std::cos(theta)});
}

// ---------------------------------------------------------------------------
// Pinhole, principal point at the image center, square pixels.

inline std::optional<PixelCoord> pinhole_project(const Direction& d, const CameraModel& model) {
  if (d.z() >= 0.0) return std::nullopt;
  const double f = model.focal_px();
  const double depth = -d.z();
  const PixelCoord p{model.size.width * 0.5 - f * d.x() / depth, model.size.height * 0.5 + f * d.y() / depth};
  if (!model.size.contains(p)) return std::nullopt;
  return p;
}

inline std::optional<Direction> pinhole_unproject(const PixelCoord& p, const CameraModel& model) {
  if (!model.size.contains(p)) return std::nullopt;
  const double f = model.focal_px();
  return Direction::normalized(-(p.u - model.size.width * 0.5) / f, (p.v - model.size.height * 0.5) / f, -1.0);
}

// ---------------------------------------------------------------------------
// Cubemap

struct CubemapPixel {
  int face = 0;
  PixelCoord pixel;
};

/// Face whose axis dominates `d`; ties resolve in +x, -x, +y, -y, +z, -z order.
inline int cubemap_face_of(const Direction& d) {
  const double ax = std::abs(d.x()), ay = std::abs(d.y()), az = std::abs(d.z());
  if (ax >= ay && ax >= az) return d.x() >= 0.0 ? 0 : 1;
  if (ay >= az) return d.y() >= 0.0 ? 2 : 3;
  return d.z() >= 0.0 ? 4 : 5;
}

namespace detail {
inline const std::array<Rotation, 6>& cube_rotations() {
  static const std::array<Rotation, 6> rots{cube_face_rotation(0), cube_face_rotation(1), cube_face_rotation(2),
                                            cube_face_rotation(3), cube_face_rotation(4), cube_face_rotation(5)};
  return rots;
}

inline PixelCoord face_pixel_unchecked(const Direction& face_dir, int size) {
  const double half = size * 0.5;
  const double depth = -face_dir.z();
  return {half - half * face_dir.x() / depth, half + half * face_dir.y() / depth};
}
}  // namespace detail

inline CubemapPixel cubemap_face_project(const Direction& d, int face_size) {
  const int face = cubemap_face_of(d);
  const Direction local = detail::cube_rotations()[face] * d;
  PixelCoord p = detail::face_pixel_unchecked(local, face_size);
  p.u = std::clamp(p.u, 0.0, static_cast<double>(face_size));
  p.v = std::clamp(p.v, 0.0, static_cast<double>(face_size));
  return {face, p};
}

inline Direction cubemap_face_unproject(int face, const PixelCoord& p, int face_size) {
  const double half = face_size * 0.5;
  const Direction local = Direction::normalized(-(p.u - half) / half, (p.v - half) / half, -1.0);
  return detail::cube_rotations().at(static_cast<std::size_t>(face)).transposed() * local;
}

// ---------------------------------------------------------------------------
// Generic dispatch in the model's own frame. For cubemap faces the model frame
// is the cube (world-aligned) frame; the face rotation is part of the model.

inline std::optional<PixelCoord> project(const CameraModel& model, const Direction& d) {
  switch (model.kind) {
    case ModelKind::equirectangular: return omni_pixel(dir_to_spherical(d), model.size);
    case ModelKind::equidistant_fisheye: return fisheye_project(d, model);
    case ModelKind::pinhole: return pinhole_project(d, model);
    case ModelKind::cubemap_face: {
      const Direction local = detail::cube_rotations()[model.face_index] * d;
      if (local.z() >= 0.0) return std::nullopt;
      const PixelCoord p = detail::face_pixel_unchecked(local, model.size.width);
      if (!model.size.contains(p)) return std::nullopt;
      return p;
    }
  }
  return std::nullopt;
}

inline std::optional<Direction> unproject(const CameraModel& model, const PixelCoord& p) {
  switch (model.kind) {
    case ModelKind::equirectangular:
      if (!model.size.contains(p)) return std::nullopt;
      return omni_unproject(p, model.size);
    case ModelKind::equidistant_fisheye: return fisheye_unproject(p, model);
    case ModelKind::pinhole: return pinhole_unproject(p, model);
    case ModelKind::cubemap_face:
      if (!model.size.contains(p)) return std::nullopt;
      return cubemap_face_unproject(model.face_index, p, model.size.width);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Dual-fisheye rig

enum class FisheyeSide { front, rear };

inline std::string_view to_string(FisheyeSide s) { return s == FisheyeSide::front ? "front" : "rear"; }

/// Half-turn about the vertical axis; takes the omni frame's +z onto the
/// camera axis (0, 0, -1). Shifts longitude by pi, the front-camera offset.
inline Rotation front_flip() {
  return Rotation::from_matrix({-1, 0, 0, 0, 1, 0, 0, 0, -1});
}

/// Physical camera frames relative to the stitched omni (world) frame. The
/// rear camera is the reference: with identity extrinsics it looks along
/// (0, 0, -1) and the front camera along (0, 0, +1).
struct RigExtrinsics {
  Rotation rear;   ///< world -> rear camera
  Rotation front;  ///< world -> front camera, applied before the half-turn

  /// Full world -> camera rotation for one side, optical axis (0, 0, -1).
  Rotation world_to_camera(FisheyeSide side) const {
    return side == FisheyeSide::rear ? rear : front_flip() * front;
  }
};

inline std::optional<PixelCoord> fisheye_world_project(const Direction& d_world, const RigExtrinsics& rig,
                                                       FisheyeSide side, const CameraModel& model) {
  return fisheye_project(rig.world_to_camera(side) * d_world, model);
}

}  // namespace omnimask

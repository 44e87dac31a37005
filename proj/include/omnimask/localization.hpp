#pragma once

// Fuses per-view person masks into one dominant capturer direction and builds
// the rotation that re-centers the sphere on it.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "omnimask/camera_models.hpp"
#include "omnimask/image.hpp"
#include "omnimask/tessellation.hpp"

namespace omnimask {

class CapturerNotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ViewMaskStat {
  int view_index = 0;
  std::optional<Direction> centroid_dir;  ///< world frame; empty iff area_px == 0
  long long area_px = 0;
  Vec3 direction_sum;  ///< unnormalized sum of world-frame pixel directions
  /// Sum of world-frame pixel directions, each weighted by the pixel's solid
  /// angle divided by the number of views that see it.
  Vec3 weighted_sum;
  double solid_angle_sr = 0.0;  ///< same weights, without the directions
};

/// Solid angle (steradians) subtended by the pixel centered at `p`.
inline double pixel_solid_angle(const CameraModel& model, const PixelCoord& p) {
  switch (model.kind) {
    case ModelKind::pinhole:
    case ModelKind::cubemap_face: {
      const double f = model.focal_px();
      const double a = (p.u - model.size.width * 0.5) / f;
      const double b = (p.v - model.size.height * 0.5) / f;
      const double q = 1.0 + a * a + b * b;
      return 1.0 / (f * f * q * std::sqrt(q));
    }
    case ModelKind::equidistant_fisheye: {
      const double k = model.fov * 0.5 / (model.size.width * 0.5);  // radians per pixel
      const double theta = std::hypot(p.u - model.size.width * 0.5, p.v - model.size.height * 0.5) * k;
      return k * k * (theta > 1e-12 ? std::sin(theta) / theta : 1.0);
    }
    case ModelKind::equirectangular: {
      const double lat = (0.5 - p.v / model.size.height) * kPi;
      return std::cos(lat) * (2.0 * kPi / model.size.width) * (kPi / model.size.height);
    }
  }
  return 0.0;
}

/// Center of mass (as a direction) and pixel count of the set pixels of a
/// mask rendered in `view`. With `overlap`, every pixel's solid-angle weight
/// is shared among the views of that set that contain its direction.
inline ViewMaskStat mask_stats(const MaskBuffer& m, const VirtualView& view, int view_index = 0,
                               const ViewSet* overlap = nullptr) {
  if (m.size() != view.model.size)
    throw std::invalid_argument("mask_stats: mask is " + to_string(m.size()) + " but view is " +
                                to_string(view.model.size));
  ViewMaskStat stat;
  stat.view_index = view_index;
  const Rotation to_world = view.world_to_camera.transposed();
  Vec3 sum;
  Vec3 wsum;
  double omega = 0.0;
  long long n = 0;
  for (int y = 0; y < m.height(); ++y) {
    const std::uint8_t* row = m.row(y);
    for (int x = 0; x < m.width(); ++x) {
      if (!row[x]) continue;
      const PixelCoord p{x + 0.5, y + 0.5};
      const std::optional<Direction> d = unproject(view.model, p);
      if (!d) continue;
      sum += d->vec();
      ++n;
      double w = pixel_solid_angle(view.model, p);
      if (overlap) {
        const Direction dw = to_world * *d;
        int seen = 0;
        for (const VirtualView& v : overlap->views) seen += view_contains(v, dw) ? 1 : 0;
        w /= std::max(seen, 1);
      }
      wsum += d->vec() * w;
      omega += w;
    }
  }
  stat.area_px = n;
  if (n == 0) return stat;
  // Rotate once; the camera->world map is linear.
  stat.direction_sum = to_world.apply(sum);
  stat.weighted_sum = to_world.apply(wsum);
  stat.solid_angle_sr = omega;
  stat.centroid_dir = Direction::normalized(stat.direction_sum);
  return stat;
}

enum class FusionMode {
  area_weighted_centroids,  ///< normalize(sum area_i * centroid_i)
  pixel_average,            ///< normalize(sum of every set pixel's direction)
  solid_angle,              ///< normalize(sum of weighted_sum_i): mean direction over the sphere
};

/// Default area threshold: 0.1 % of a view's pixels.
inline long long default_min_area(const ImageSize& view_size) {
  return std::max<long long>(1, view_size.pixel_count() / 1000);
}

inline Direction fuse_direction(const std::vector<ViewMaskStat>& stats, long long min_area_px,
                                FusionMode mode = FusionMode::area_weighted_centroids) {
  Vec3 acc;
  int used = 0;
  for (const ViewMaskStat& s : stats) {
    if (s.area_px == 0 || s.area_px < min_area_px || !s.centroid_dir) continue;
    switch (mode) {
      case FusionMode::area_weighted_centroids: acc += s.centroid_dir->vec() * static_cast<double>(s.area_px); break;
      case FusionMode::pixel_average: acc += s.direction_sum; break;
      case FusionMode::solid_angle: acc += s.weighted_sum; break;
    }
    ++used;
  }
  if (used == 0) {
    throw CapturerNotFound("capturer not found: no view mask reaches " + std::to_string(min_area_px) + " px");
  }
  if (!(acc.norm() > 1e-12)) throw CapturerNotFound("capturer not found: view centroids cancel out");
  return Direction::normalized(acc);
}

/// Rotation R with R * target = (0, 0, -1). Roll keeps world-down (+y) in the
/// plane of the new optical axis and image-down, so an upright capturer stays
/// upright. The antipode of the axis gets the half-turn about the vertical;
/// straight-up/down targets use the minimal rotation onto the axis.
inline Rotation centering_rotation(const Direction& target) {
  const Vec3 axis{0.0, 0.0, -1.0};
  const Vec3 t = target.vec();
  if (t.x == 0.0 && t.y == 0.0 && t.z < 0.0) return Rotation::identity();
  if (t.x == 0.0 && t.y == 0.0 && t.z > 0.0) return Rotation::axis_angle({0.0, -1.0, 0.0}, kPi);
  if (std::hypot(t.x, t.z) < 1e-9) {
    const Vec3 k = t.cross(axis);
    return Rotation::axis_angle(k, std::atan2(k.norm(), t.dot(axis)));
  }
  return Rotation::look_at(t, {0.0, 1.0, 0.0});
}

}  // namespace omnimask

#pragma once

// Overlapping virtual pinhole views that jointly cover the sphere.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "omnimask/camera_models.hpp"
#include "omnimask/random.hpp"

namespace omnimask {

struct VirtualView {
  Rotation world_to_camera;
  CameraModel model;

  Direction optical_axis() const { return world_to_camera.transposed() * Direction{}; }
};

/// A region of thin overlap: directions within `radius` of `center` may sit
/// near the edge of a single covering view.
struct LayoutCorner {
  Direction center;
  double radius = 0.0;
};

struct ViewSet {
  std::vector<VirtualView> views;
  std::vector<LayoutCorner> corners;
  std::size_t count() const { return views.size(); }
};

/// Camera looking at latitude `lat`, longitude `lon` with world-down kept as
/// image-down. Straight up/down views take their roll from the -z view pitched
/// by +-90 degrees.
inline Rotation gravity_aligned_view(double lat, double lon) {
  const Direction fwd = spherical_to_dir({lat, lon});
  const Vec3 down{0.0, 1.0, 0.0};
  const double horiz = std::hypot(fwd.x(), fwd.z());
  if (horiz < 1e-9) {
    // Pitched through the pole from the lambda = lon meridian.
    const Direction toward = spherical_to_dir({0.0, lon});
    const Vec3 pole_down = fwd.y() < 0.0 ? toward.vec() : -toward.vec();
    return Rotation::look_at(fwd.vec(), pole_down);
  }
  return Rotation::look_at(fwd.vec(), down);
}

/// True when `d` (world frame) projects strictly inside the view's frustum,
/// with `margin` of slack in normalized image-plane units at each edge.
inline bool view_contains(const VirtualView& view, const Direction& d, double margin = 0.0) {
  const Vec3 c = view.world_to_camera.apply(d.vec());
  if (c.z >= 0.0) return false;
  const double tx = std::tan(view.model.fov * 0.5);
  const double ty = tx * view.model.size.height / view.model.size.width;
  const double depth = -c.z;
  return std::abs(c.x) / depth < tx - margin && std::abs(c.y) / depth < ty - margin;
}

/// Deterministic, roughly uniform point set used to verify coverage.
inline std::vector<Direction> fibonacci_directions(int n) {
  std::vector<Direction> out;
  out.reserve(static_cast<std::size_t>(n));
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double y = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
    const double a = golden * i;
    out.push_back(Direction::from_unit({r * std::cos(a), y, r * std::sin(a)}));
  }
  return out;
}

namespace detail {

inline std::vector<std::pair<double, double>> standard_layout_16() {
  std::vector<std::pair<double, double>> lat_lon;
  for (int k = 0; k < 8; ++k) lat_lon.emplace_back(0.0, deg2rad(45.0 * k));
  for (int k = 0; k < 4; ++k) lat_lon.emplace_back(deg2rad(45.0), deg2rad(90.0 * k));
  lat_lon.emplace_back(deg2rad(90.0), 0.0);
  lat_lon.emplace_back(deg2rad(-90.0), 0.0);
  lat_lon.emplace_back(deg2rad(-45.0), 0.0);
  lat_lon.emplace_back(deg2rad(-45.0), deg2rad(180.0));
  return lat_lon;
}

// The lower ring has views only at longitudes 0 and 180, so near longitude
// +-90 the pole view and the equatorial views meet edge to edge.
inline std::vector<LayoutCorner> standard_corners_16() {
  return {{spherical_to_dir({deg2rad(-45.0), deg2rad(90.0)}), deg2rad(20.0)},
          {spherical_to_dir({deg2rad(-45.0), deg2rad(-90.0)}), deg2rad(20.0)}};
}

inline std::vector<std::pair<double, double>> cube_layout() {
  // -z, +x, +z, -x, up, down
  return {{0.0, 0.0}, {0.0, kPi / 2}, {0.0, kPi}, {0.0, -kPi / 2}, {kPi / 2, 0.0}, {-kPi / 2, 0.0}};
}

inline std::vector<std::pair<double, double>> spiral_layout(int count) {
  // View 0 pinned to the forward axis; the rest on a Fibonacci spiral.
  std::vector<std::pair<double, double>> lat_lon{{0.0, 0.0}};
  for (const Direction& d : fibonacci_directions(count - 1)) {
    const SphericalCoord s = dir_to_spherical(d);
    lat_lon.emplace_back(s.lat, s.lon);
  }
  return lat_lon;
}

}  // namespace detail

inline constexpr int kCoverageProbeCount = 20000;

/// Builds `count` views of horizontal/vertical field of view `fov`.
///
/// count = 16 uses the fixed layout: eight equatorial views every 45 degrees,
/// four at +45 degrees latitude every 90, both poles, and two at -45 degrees
/// latitude at longitudes 0 and 180. count = 6 is the cube. Any other count
/// places views on a Fibonacci spiral. View 0 always faces (0, 0, -1) with
/// zero roll. Layouts that leave any probe direction uncovered are rejected.
inline ViewSet tessellate(int count = 16, double fov = kPi / 2, int view_size = 512) {
  if (count < 6) throw std::invalid_argument("tessellate: at least 6 views are required to cover the sphere");
  if (!(fov > 0.0 && fov < kPi)) throw std::invalid_argument("tessellate: fov must be in (0, pi)");
  const auto lat_lon = count == 16  ? detail::standard_layout_16()
                       : count == 6 ? detail::cube_layout()
                                    : detail::spiral_layout(count);
  ViewSet set;
  for (const auto& [lat, lon] : lat_lon) {
    set.views.push_back({gravity_aligned_view(lat, lon), CameraModel::pinhole(view_size, view_size, fov)});
  }
  if (count == 16) set.corners = detail::standard_corners_16();
  for (const Direction& d : fibonacci_directions(kCoverageProbeCount)) {
    bool covered = false;
    for (const VirtualView& v : set.views) {
      if (view_contains(v, d)) {
        covered = true;
        break;
      }
    }
    if (!covered) {
      const SphericalCoord s = dir_to_spherical(d);
      throw std::invalid_argument("tessellate: " + std::to_string(count) + " views of " +
                                  std::to_string(rad2deg(fov)) + " deg fov leave directions uncovered (e.g. lat " +
                                  std::to_string(rad2deg(s.lat)) + ", lon " + std::to_string(rad2deg(s.lon)) + ")");
    }
  }
  return set;
}

struct CoverageReport {
  long long samples = 0;
  long long uncovered = 0;
  double mean_multiplicity = 0.0;
  int min_multiplicity = 0;
};

/// Monte-Carlo coverage check over `samples` uniform directions drawn from
/// a deterministic generator seeded with `seed`.
inline CoverageReport measure_coverage(const ViewSet& set, long long samples, std::uint64_t seed) {
  CoverageReport rep;
  rep.samples = samples;
  rep.min_multiplicity = std::numeric_limits<int>::max();
  Rng rng(seed);
  long long total = 0;
  for (long long i = 0; i < samples; ++i) {
    const Direction d = rng.direction();
    int m = 0;
    for (const VirtualView& v : set.views) m += view_contains(v, d) ? 1 : 0;
    total += m;
    if (m == 0) ++rep.uncovered;
    rep.min_multiplicity = std::min(rep.min_multiplicity, m);
  }
  rep.mean_multiplicity = samples > 0 ? static_cast<double>(total) / samples : 0.0;
  return rep;
}

}  // namespace omnimask

#pragma once

// Per-output-pixel reprojection: unproject in the destination model, rotate
// into the source frame, project into the source model, interpolate.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "omnimask/camera_models.hpp"
#include "omnimask/image.hpp"
#include "omnimask/parallel.hpp"

namespace omnimask {

enum class Interpolation { bilinear, nearest };

struct ResampleSpec {
  CameraModel src_model;
  CameraModel dst_model;
  Rotation rotation;  ///< destination frame -> source frame
  Interpolation interpolation = Interpolation::bilinear;
  double fill = 0.0;  ///< written to every channel of out-of-domain pixels
};

namespace detail {

// Offsets within this distance of a pixel center are snapped onto it, so that
// identity resampling reproduces the source exactly despite trig round-off.
inline constexpr double kSnapPx = 1e-6;

inline double snap(double x) {
  const double r = std::nearbyint(x);
  return std::abs(x - r) < kSnapPx ? r : x;
}

/// Calls f(x, y, direction-in-source-frame or nullopt) for every destination
/// pixel, parallel over rows. Equirectangular destinations reuse per-row and
/// per-column trig tables.
template <typename F>
void for_each_source_direction(const CameraModel& dst, const Rotation& rotation, F&& f) {
  dst.validate();
  const int w = dst.size.width;
  const int h = dst.size.height;
  if (dst.kind == ModelKind::equirectangular) {
    std::vector<double> sin_lon(static_cast<std::size_t>(w)), cos_lon(static_cast<std::size_t>(w));
    for (int x = 0; x < w; ++x) {
      const double lon = (1.0 - 2.0 * (x + 0.5) / w) * kPi;
      sin_lon[x] = std::sin(lon);
      cos_lon[x] = std::cos(lon);
    }
    parallel_for(0, h, [&](int y) {
      const double lat = (1.0 - 2.0 * (y + 0.5) / h) * (kPi / 2);
      const double cl = std::cos(lat);
      const double sl = std::sin(lat);
      for (int x = 0; x < w; ++x) {
        const Vec3 d{cl * sin_lon[x], -sl, -cl * cos_lon[x]};
        f(x, y, std::optional<Direction>(Direction::from_unit(rotation.apply(d))));
      }
    });
    return;
  }
  parallel_for(0, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const std::optional<Direction> d = unproject(dst, {x + 0.5, y + 0.5});
      if (!d) {
        f(x, y, std::optional<Direction>());
      } else {
        f(x, y, std::optional<Direction>(rotation * *d));
      }
    }
  });
}

template <typename T>
T cast_sample(double v) {
  if constexpr (std::is_same_v<T, float>) {
    return static_cast<float>(v);
  } else {
    return static_cast<T>(std::lround(std::clamp(v, 0.0, 255.0)));
  }
}

/// Bilinear sample at continuous pixel coordinate `p`. Taps wrap horizontally
/// when `wrap_u`; all other out-of-range taps clamp to the edge.
template <typename T>
void sample_bilinear(const Image<T>& src, PixelCoord p, bool wrap_u, T* out) {
  const int w = src.width();
  const int h = src.height();
  const int ch = src.channels();
  const double x = snap(p.u - 0.5);
  const double y = snap(p.v - 0.5);
  const double xf = std::floor(x);
  const double yf = std::floor(y);
  const double ax = x - xf;
  const double ay = y - yf;
  int x0 = static_cast<int>(xf);
  int x1 = x0 + 1;
  int y0 = static_cast<int>(yf);
  int y1 = y0 + 1;
  if (wrap_u) {
    x0 = ((x0 % w) + w) % w;
    x1 = ((x1 % w) + w) % w;
  } else {
    x0 = std::clamp(x0, 0, w - 1);
    x1 = std::clamp(x1, 0, w - 1);
  }
  y0 = std::clamp(y0, 0, h - 1);
  y1 = std::clamp(y1, 0, h - 1);
  const T* r0 = src.row(y0);
  const T* r1 = src.row(y1);
  for (int c = 0; c < ch; ++c) {
    const double top = static_cast<double>(r0[x0 * ch + c]) * (1.0 - ax) + static_cast<double>(r0[x1 * ch + c]) * ax;
    const double bot = static_cast<double>(r1[x0 * ch + c]) * (1.0 - ax) + static_cast<double>(r1[x1 * ch + c]) * ax;
    out[c] = cast_sample<T>(top * (1.0 - ay) + bot * ay);
  }
}

/// Integer pixel containing continuous coordinate `p`.
inline std::array<int, 2> nearest_pixel(PixelCoord p, const ImageSize& size, bool wrap_u) {
  int x = static_cast<int>(std::floor(snap(p.u)));
  int y = static_cast<int>(std::floor(snap(p.v)));
  if (wrap_u) {
    x = ((x % size.width) + size.width) % size.width;
  } else {
    x = std::clamp(x, 0, size.width - 1);
  }
  y = std::clamp(y, 0, size.height - 1);
  return {x, y};
}

}  // namespace detail

template <typename T>
Image<T> resample_image(const Image<T>& src, const ResampleSpec& spec) {
  spec.src_model.validate();
  if (src.size() != spec.src_model.size)
    throw std::invalid_argument("resample_image: source is " + to_string(src.size()) + " but model expects " +
                                to_string(spec.src_model.size));
  const int ch = src.channels();
  const T fill = detail::cast_sample<T>(spec.fill);
  Image<T> out(spec.dst_model.size, ch);
  const bool wrap = spec.src_model.kind == ModelKind::equirectangular;
  const CameraModel& sm = spec.src_model;
  detail::for_each_source_direction(spec.dst_model, spec.rotation, [&](int x, int y, const std::optional<Direction>& d) {
    T* px = out.row(y) + static_cast<std::size_t>(x) * ch;
    std::optional<PixelCoord> q;
    if (d) q = project(sm, *d);
    if (!q) {
      for (int c = 0; c < ch; ++c) px[c] = fill;
      return;
    }
    if (spec.interpolation == Interpolation::bilinear) {
      detail::sample_bilinear(src, *q, wrap, px);
    } else {
      const auto [ix, iy] = detail::nearest_pixel(*q, src.size(), wrap);
      const T* s = src.row(iy) + static_cast<std::size_t>(ix) * ch;
      for (int c = 0; c < ch; ++c) px[c] = s[c];
    }
  });
  return out;
}

/// Always nearest-neighbour; out-of-domain pixels are 0.
inline MaskBuffer resample_mask(const MaskBuffer& src, const ResampleSpec& spec) {
  spec.src_model.validate();
  if (src.size() != spec.src_model.size)
    throw std::invalid_argument("resample_mask: source is " + to_string(src.size()) + " but model expects " +
                                to_string(spec.src_model.size));
  MaskBuffer out(spec.dst_model.size);
  const bool wrap = spec.src_model.kind == ModelKind::equirectangular;
  const CameraModel& sm = spec.src_model;
  detail::for_each_source_direction(spec.dst_model, spec.rotation, [&](int x, int y, const std::optional<Direction>& d) {
    if (!d) return;
    const std::optional<PixelCoord> q = project(sm, *d);
    if (!q) return;
    const auto [ix, iy] = detail::nearest_pixel(*q, src.size(), wrap);
    out.row(y)[x] = src.row(iy)[ix];
  });
  return out;
}

// ---------------------------------------------------------------------------
// Cubemaps: six faces of equal size in +x, -x, +y, -y, +z, -z order.

template <typename T>
using Cubemap = std::array<Image<T>, 6>;

template <typename T>
Cubemap<T> equirect_to_cubemap(const Image<T>& omni, int face_size, Interpolation interp = Interpolation::bilinear) {
  Cubemap<T> faces;
  const CameraModel src = CameraModel::equirectangular(omni.width(), omni.height());
  for (int f = 0; f < 6; ++f) {
    faces[f] = resample_image(omni, {src, CameraModel::cubemap_face(face_size, f), Rotation::identity(), interp, 0.0});
  }
  return faces;
}

/// Samples a cubemap into any destination model. `rotation` maps destination
/// frame to cube frame. Bilinear taps stay on the selected face (edge clamp).
template <typename T>
Image<T> resample_from_cubemap(const Cubemap<T>& faces, const CameraModel& dst, const Rotation& rotation,
                               Interpolation interp = Interpolation::bilinear, double fill = 0.0) {
  const int face_size = faces[0].width();
  const int ch = faces[0].channels();
  for (const auto& f : faces) {
    if (f.width() != face_size || f.height() != face_size || f.channels() != ch)
      throw std::invalid_argument("cubemap faces must be square, equal-sized and share a channel count");
  }
  const T fill_v = detail::cast_sample<T>(fill);
  Image<T> out(dst.size, ch);
  detail::for_each_source_direction(dst, rotation, [&](int x, int y, const std::optional<Direction>& d) {
    T* px = out.row(y) + static_cast<std::size_t>(x) * ch;
    if (!d) {
      for (int c = 0; c < ch; ++c) px[c] = fill_v;
      return;
    }
    const CubemapPixel cp = cubemap_face_project(*d, face_size);
    const Image<T>& face = faces[cp.face];
    if (interp == Interpolation::bilinear) {
      detail::sample_bilinear(face, cp.pixel, false, px);
    } else {
      const auto [ix, iy] = detail::nearest_pixel(cp.pixel, face.size(), false);
      const T* s = face.row(iy) + static_cast<std::size_t>(ix) * ch;
      for (int c = 0; c < ch; ++c) px[c] = s[c];
    }
  });
  return out;
}

}  // namespace omnimask

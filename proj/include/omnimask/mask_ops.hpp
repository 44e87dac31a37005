#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "omnimask/camera_models.hpp"
#include "omnimask/image.hpp"
#include "omnimask/parallel.hpp"

namespace omnimask {

namespace detail {

// Running-count max filter along one line: out[i] = any(in[i-r .. i+r]).
inline void dilate_line(const std::uint8_t* in, std::uint8_t* out, int n, int stride, int radius) {
  int count = 0;
  for (int i = 0; i < std::min(radius, n); ++i) count += in[static_cast<std::ptrdiff_t>(i) * stride];
  for (int i = 0; i < n; ++i) {
    const int add = i + radius;
    if (add < n) count += in[static_cast<std::ptrdiff_t>(add) * stride];
    const int drop = i - radius - 1;
    if (drop >= 0) count -= in[static_cast<std::ptrdiff_t>(drop) * stride];
    out[static_cast<std::ptrdiff_t>(i) * stride] = count > 0 ? 1 : 0;
  }
}

}  // namespace detail

/// Dilation by a (2r+1) x (2r+1) square, separable in rows then columns.
inline MaskBuffer dilate_mask(const MaskBuffer& m, int radius_px) {
  if (radius_px < 0) throw std::invalid_argument("dilate_mask: radius must be >= 0");
  if (radius_px == 0) return m;
  const int w = m.width();
  const int h = m.height();
  MaskBuffer horiz(m.size());
  parallel_for(0, h, [&](int y) { detail::dilate_line(m.row(y), horiz.row(y), w, 1, radius_px); });
  MaskBuffer out(m.size());
  const std::uint8_t* src = horiz.row(0);
  std::uint8_t* dst = out.row(0);
  parallel_for(0, w, [&](int x) { detail::dilate_line(src + x, dst + x, h, w, radius_px); });
  return out;
}

/// Valid-region mask of a fisheye frame: 1 where the pixel center lies within
/// W/2 - margin of the image center, 0 on the black ring and the corners.
inline MaskBuffer boundary_mask(const CameraModel& model, int margin_px) {
  if (model.kind != ModelKind::equidistant_fisheye) throw std::invalid_argument("boundary_mask: model must be a fisheye");
  if (margin_px < 0) throw std::invalid_argument("boundary_mask: margin must be >= 0");
  model.validate();
  MaskBuffer out(model.size);
  const double radius = model.size.width * 0.5 - margin_px;
  if (radius <= 0.0) return out;
  const double cx = model.size.width * 0.5;
  const double cy = model.size.height * 0.5;
  const double r2 = radius * radius;
  for (int y = 0; y < model.size.height; ++y) {
    const double dy = y + 0.5 - cy;
    std::uint8_t* row = out.row(y);
    for (int x = 0; x < model.size.width; ++x) {
      const double dx = x + 0.5 - cx;
      row[x] = dx * dx + dy * dy <= r2 ? 1 : 0;
    }
  }
  return out;
}

}  // namespace omnimask

#pragma once

// Analytic ground-truth scenes: a band-limited spherical texture plus an
// optional spherical-cap "capturer" that moves from frame to frame. Both live
// at infinity, so every camera model sees them without parallax.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "omnimask/camera_models.hpp"
#include "omnimask/image.hpp"
#include "omnimask/parallel.hpp"
#include "omnimask/random.hpp"

namespace omnimask {

inline constexpr int kMaxHarmonicDegree = 4;
inline constexpr int kHarmonicCount = (kMaxHarmonicDegree + 1) * (kMaxHarmonicDegree + 1);

namespace detail {
inline const std::array<double, kHarmonicCount>& harmonic_norms() {
  static const std::array<double, kHarmonicCount> norms = [] {
    std::array<double, kHarmonicCount> k{};
    for (int l = 0; l <= kMaxHarmonicDegree; ++l)
      for (int m = 0; m <= l; ++m) {
        double ratio = 1.0;  // (l-m)! / (l+m)!
        for (int f = l - m + 1; f <= l + m; ++f) ratio /= f;
        k[l * l + l + m] = std::sqrt((2 * l + 1) / (4 * kPi) * ratio) * (m == 0 ? 1.0 : std::sqrt(2.0));
      }
    return k;
  }();
  return norms;
}
}  // namespace detail

/// Real spherical harmonics up to degree 4, polar axis world-up (-y), azimuth
/// measured as longitude. Index l*l + l + m.
inline std::array<double, kHarmonicCount> real_harmonics(const Direction& d) {
  std::array<double, kHarmonicCount> out{};
  const double ct = std::clamp(-d.y(), -1.0, 1.0);
  const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
  // cos/sin of m * longitude by angle addition, from the horizontal components.
  double cm[kMaxHarmonicDegree + 1], sm[kMaxHarmonicDegree + 1];
  cm[0] = 1.0;
  sm[0] = 0.0;
  const double h = std::sqrt(d.x() * d.x() + d.z() * d.z());
  const double c1 = h > 0.0 ? -d.z() / h : 1.0;
  const double s1 = h > 0.0 ? d.x() / h : 0.0;
  for (int m = 1; m <= kMaxHarmonicDegree; ++m) {
    cm[m] = cm[m - 1] * c1 - sm[m - 1] * s1;
    sm[m] = sm[m - 1] * c1 + cm[m - 1] * s1;
  }
  // Associated Legendre P_l^m(ct), no Condon-Shortley phase.
  double p[kMaxHarmonicDegree + 1][kMaxHarmonicDegree + 1] = {};
  p[0][0] = 1.0;
  for (int m = 1; m <= kMaxHarmonicDegree; ++m) p[m][m] = p[m - 1][m - 1] * (2 * m - 1) * st;
  for (int m = 0; m < kMaxHarmonicDegree; ++m) p[m + 1][m] = (2 * m + 1) * ct * p[m][m];
  for (int m = 0; m <= kMaxHarmonicDegree; ++m)
    for (int l = m + 2; l <= kMaxHarmonicDegree; ++l)
      p[l][m] = ((2 * l - 1) * ct * p[l - 1][m] - (l + m - 1) * p[l - 2][m]) / (l - m);
  const auto& k = detail::harmonic_norms();
  for (int l = 0; l <= kMaxHarmonicDegree; ++l) {
    out[l * l + l] = k[l * l + l] * p[l][0];
    for (int m = 1; m <= l; ++m) {
      const double base = k[l * l + l + m] * p[l][m];
      out[l * l + l + m] = base * cm[m];
      out[l * l + l - m] = base * sm[m];
    }
  }
  return out;
}

using Rgb = std::array<float, 3>;

struct Blob {
  std::vector<Direction> centers;  ///< one per frame
  double angular_radius = 0.0;     ///< radians, in (0, pi/2)
  Rgb color{1.0f, 0.1f, 0.8f};

  const Direction& center(int frame) const {
    if (centers.empty()) throw std::logic_error("blob has no trajectory");
    return centers.at(static_cast<std::size_t>(std::clamp<int>(frame, 0, static_cast<int>(centers.size()) - 1)));
  }
  bool contains(const Direction& d, int frame) const {
    return d.dot(center(frame)) >= std::cos(angular_radius);
  }
};

struct SphericalScene {
  std::uint64_t seed = 0;
  int degree = kMaxHarmonicDegree;
  double amplitude = 0.45;  ///< worst-case texture excursion from `base`
  Rgb base{0.5f, 0.5f, 0.5f};
  std::array<std::array<double, kHarmonicCount>, 3> coeffs{};
  std::optional<Blob> blob;

  /// Constant-color scene (no harmonics).
  static SphericalScene constant(Rgb color) {
    SphericalScene s;
    s.degree = 0;
    s.amplitude = 0.0;
    s.base = color;
    return s;
  }

  /// Harmonic texture with coefficients drawn from `seed` and scaled so that
  /// every channel provably stays within base +- amplitude.
  static SphericalScene harmonic(std::uint64_t seed, int degree = kMaxHarmonicDegree, double amplitude = 0.45) {
    if (degree < 0 || degree > kMaxHarmonicDegree) throw std::invalid_argument("harmonic degree must be in [0, 4]");
    if (amplitude < 0.0 || amplitude > 0.5) throw std::invalid_argument("amplitude must be in [0, 0.5]");
    SphericalScene s;
    s.seed = seed;
    s.degree = degree;
    s.amplitude = amplitude;
    s.regenerate();
    return s;
  }

  /// Recomputes `coeffs` from `seed`, `degree` and `amplitude`.
  void regenerate() {
    coeffs = {};
    if (degree == 0 || amplitude == 0.0) return;
    Rng rng(seed);
    for (auto& ch : coeffs) {
      double bound = 0.0;
      for (int l = 1; l <= degree; ++l) {
        // |Y_lm| <= sqrt(2) * sqrt((2l+1)/(4 pi)) for real harmonics
        const double ymax = std::sqrt(2.0 * (2 * l + 1) / (4 * kPi));
        for (int m = -l; m <= l; ++m) {
          const double c = rng.uniform(-1.0, 1.0);
          ch[l * l + l + m] = c;
          bound += std::abs(c) * ymax;
        }
      }
      const double scale = bound > 0.0 ? amplitude / bound : 0.0;
      for (double& c : ch) c *= scale;
    }
  }

  Rgb texture(const Direction& d) const {
    if (degree == 0 || amplitude == 0.0) return base;
    const auto y = real_harmonics(d);
    Rgb out{};
    const int n = (degree + 1) * (degree + 1);
    for (int c = 0; c < 3; ++c) {
      double v = base[c];
      for (int i = 1; i < n; ++i) v += coeffs[c][i] * y[i];
      out[c] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    return out;
  }

  Rgb color(const Direction& d, int frame) const {
    if (blob && blob->contains(d, frame)) return blob->color;
    return texture(d);
  }
};

/// Blob trajectory rotating `start` about `axis` by `total_angle` radians
/// spread uniformly over `frames` frames.
inline std::vector<Direction> blob_trajectory(const Direction& start, const Vec3& axis, double total_angle, int frames) {
  std::vector<Direction> out;
  out.reserve(static_cast<std::size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    const double a = frames > 1 ? total_angle * f / (frames - 1) : 0.0;
    out.push_back(Direction::normalized(Rotation::axis_angle(axis, a).apply(start.vec())));
  }
  return out;
}

/// Renders the scene as seen by a camera with the given world -> camera
/// rotation. Each pixel averages a 2x2 grid of subsamples; subsamples outside
/// the model's domain contribute black.
inline ImageF render(const SphericalScene& scene, const CameraModel& model, const Rotation& world_to_camera,
                     int frame = 0) {
  model.validate();
  ImageF out(model.size, 3);
  const Rotation cam_to_world = world_to_camera.transposed();
  parallel_for(0, model.size.height, [&](int y) {
    float* row = out.row(y);
    for (int x = 0; x < model.size.width; ++x) {
      double acc[3] = {0.0, 0.0, 0.0};
      for (int sy = 0; sy < 2; ++sy)
        for (int sx = 0; sx < 2; ++sx) {
          const std::optional<Direction> d = unproject(model, {x + 0.25 + 0.5 * sx, y + 0.25 + 0.5 * sy});
          if (!d) continue;
          const Rgb c = scene.color(cam_to_world * *d, frame);
          for (int k = 0; k < 3; ++k) acc[k] += c[k];
        }
      for (int k = 0; k < 3; ++k) row[x * 3 + k] = static_cast<float>(acc[k] * 0.25);
    }
  });
  return out;
}

/// Renders many frames of one static camera. Texture samples are evaluated
/// once; each frame only re-tests blob membership. Output equals `render` for
/// the same arguments.
class SequenceRenderer {
 public:
  SequenceRenderer(const SphericalScene& scene, const CameraModel& model, const Rotation& world_to_camera)
      : scene_(scene), model_(model) {
    model.validate();
    const Rotation cam_to_world = world_to_camera.transposed();
    const std::size_t n = static_cast<std::size_t>(model.size.pixel_count()) * 4;
    dirs_.resize(n);
    colors_.resize(n);
    valid_.assign(n, 0);
    parallel_for(0, model.size.height, [&](int y) {
      for (int x = 0; x < model.size.width; ++x)
        for (int s = 0; s < 4; ++s) {
          const std::size_t i = (static_cast<std::size_t>(y) * model.size.width + x) * 4 + s;
          const std::optional<Direction> d = unproject(model, {x + 0.25 + 0.5 * (s & 1), y + 0.25 + 0.5 * (s >> 1)});
          if (!d) continue;
          valid_[i] = 1;
          dirs_[i] = cam_to_world * *d;
          colors_[i] = scene.texture(dirs_[i]);
        }
    });
  }

  ImageF frame(int index) const {
    ImageF out(model_.size, 3);
    parallel_for(0, model_.size.height, [&](int y) {
      float* row = out.row(y);
      for (int x = 0; x < model_.size.width; ++x) {
        double acc[3] = {0.0, 0.0, 0.0};
        for (int s = 0; s < 4; ++s) {
          const std::size_t i = (static_cast<std::size_t>(y) * model_.size.width + x) * 4 + s;
          if (!valid_[i]) continue;
          const Rgb& c = scene_.blob && scene_.blob->contains(dirs_[i], index) ? scene_.blob->color : colors_[i];
          for (int k = 0; k < 3; ++k) acc[k] += c[k];
        }
        for (int k = 0; k < 3; ++k) row[x * 3 + k] = static_cast<float>(acc[k] * 0.25);
      }
    });
    return out;
  }

 private:
  SphericalScene scene_;
  CameraModel model_;
  std::vector<Direction> dirs_;
  std::vector<Rgb> colors_;
  std::vector<std::uint8_t> valid_;
};

/// Exact cap membership at each pixel center.
inline MaskBuffer blob_mask(const SphericalScene& scene, const CameraModel& model, const Rotation& world_to_camera,
                            int frame = 0) {
  model.validate();
  MaskBuffer out(model.size);
  if (!scene.blob) return out;
  const Rotation cam_to_world = world_to_camera.transposed();
  const Blob& blob = *scene.blob;
  const Direction c = blob.center(frame);
  const double cos_r = std::cos(blob.angular_radius);
  parallel_for(0, model.size.height, [&](int y) {
    std::uint8_t* row = out.row(y);
    for (int x = 0; x < model.size.width; ++x) {
      const std::optional<Direction> d = unproject(model, {x + 0.5, y + 0.5});
      row[x] = d && (cam_to_world * *d).dot(c) >= cos_r ? 1 : 0;
    }
  });
  return out;
}

}  // namespace omnimask

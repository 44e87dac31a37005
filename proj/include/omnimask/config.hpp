#pragma once

// Pipeline configuration. Resolution order is command-line flags, then a
// configuration document, then the defaults below; the resolved values are
// written into every manifest.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "omnimask/localization.hpp"
#include "omnimask/serialization.hpp"

namespace omnimask {

enum class LocalizationMode { capture, per_frame };

inline std::string_view to_string(LocalizationMode m) { return m == LocalizationMode::capture ? "capture" : "per_frame"; }
inline std::string_view to_string(FusionMode m) {
  switch (m) {
    case FusionMode::area_weighted_centroids: return "area_weighted";
    case FusionMode::pixel_average: return "pixel_average";
    case FusionMode::solid_angle: return "solid_angle";
  }
  return "solid_angle";
}

struct PipelineConfig {
  int downsample_factor = 4;
  int dilation_px = 4;
  int synthetic_fisheye_size = 720;
  double fisheye_fov_deg = 200.0;
  int boundary_margin_px = 5;  ///< on the working (downsampled) grid
  int localization_stride = 10;
  LocalizationMode localization_mode = LocalizationMode::capture;
  FusionMode fusion_mode = FusionMode::solid_angle;
  double min_area_fraction = 0.001;
  int view_count = 16;
  double view_fov_deg = 90.0;
  int view_size = 512;
  int omni_width = 0;  ///< 0: twice the working fisheye width
  double blend_band_deg = 5.0;
  std::string adapter;
  std::optional<Direction> capturer_direction;  ///< skips localization when set
  double fps = 5.0;
  int threads = 0;
  std::uint64_t seed = 0;

  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("config: " + what); };
    if (downsample_factor < 1) fail("downsample_factor must be >= 1");
    if (dilation_px < 0) fail("dilation_px must be >= 0");
    if (synthetic_fisheye_size < 16) fail("synthetic_fisheye_size must be >= 16");
    if (!(fisheye_fov_deg > 0.0 && fisheye_fov_deg < 360.0)) fail("fisheye_fov_deg must be in (0, 360)");
    if (boundary_margin_px < 0) fail("boundary_margin_px must be >= 0");
    if (localization_stride < 1) fail("localization_stride must be >= 1");
    if (!(min_area_fraction >= 0.0 && min_area_fraction < 1.0)) fail("min_area_fraction must be in [0, 1)");
    if (view_count < 1) fail("view_count must be >= 1");
    if (!(view_fov_deg > 0.0 && view_fov_deg < 180.0)) fail("view_fov_deg must be in (0, 180)");
    if (view_size < 8) fail("view_size must be >= 8");
    if (omni_width < 0 || omni_width % 2 != 0) fail("omni_width must be 0 (auto) or a positive even number");
    if (!(blend_band_deg >= 0.0)) fail("blend_band_deg must be >= 0");
    if (!(fps > 0.0)) fail("fps must be positive");
    if (threads < 0) fail("threads must be >= 0");
  }

  long long min_area_px() const {
    return std::max<long long>(
        1, static_cast<long long>(std::llround(min_area_fraction * static_cast<double>(view_size) * view_size)));
  }
};

inline json to_json(const PipelineConfig& c) {
  json j;
  j["downsample_factor"] = c.downsample_factor;
  j["dilation_px"] = c.dilation_px;
  j["synthetic_fisheye_size"] = c.synthetic_fisheye_size;
  j["fisheye_fov_deg"] = c.fisheye_fov_deg;
  j["boundary_margin_px"] = c.boundary_margin_px;
  j["localization_stride"] = c.localization_stride;
  j["localization_mode"] = std::string(to_string(c.localization_mode));
  j["fusion_mode"] = std::string(to_string(c.fusion_mode));
  j["min_area_fraction"] = c.min_area_fraction;
  j["view_count"] = c.view_count;
  j["view_fov_deg"] = c.view_fov_deg;
  j["view_size"] = c.view_size;
  j["omni_width"] = c.omni_width;
  j["blend_band_deg"] = c.blend_band_deg;
  j["adapter"] = c.adapter;
  j["capturer_direction"] = c.capturer_direction ? to_json(*c.capturer_direction) : json(nullptr);
  j["fps"] = c.fps;
  j["threads"] = c.threads;
  j["seed"] = c.seed;
  return j;
}

/// Overlays the keys present in `j` onto `base`. Unknown keys are rejected so
/// that typos do not silently fall back to defaults.
inline PipelineConfig apply_config_json(PipelineConfig c, const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: document must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "downsample_factor") c.downsample_factor = v.get<int>();
      else if (key == "dilation_px") c.dilation_px = v.get<int>();
      else if (key == "synthetic_fisheye_size") c.synthetic_fisheye_size = v.get<int>();
      else if (key == "fisheye_fov_deg") c.fisheye_fov_deg = v.get<double>();
      else if (key == "boundary_margin_px") c.boundary_margin_px = v.get<int>();
      else if (key == "localization_stride") c.localization_stride = v.get<int>();
      else if (key == "localization_mode") {
        const auto s = v.get<std::string>();
        if (s == "capture") c.localization_mode = LocalizationMode::capture;
        else if (s == "per_frame") c.localization_mode = LocalizationMode::per_frame;
        else throw std::invalid_argument("expected 'capture' or 'per_frame'");
      } else if (key == "fusion_mode") {
        const auto s = v.get<std::string>();
        if (s == "area_weighted") c.fusion_mode = FusionMode::area_weighted_centroids;
        else if (s == "pixel_average") c.fusion_mode = FusionMode::pixel_average;
        else if (s == "solid_angle") c.fusion_mode = FusionMode::solid_angle;
        else throw std::invalid_argument("expected 'solid_angle', 'area_weighted' or 'pixel_average'");
      } else if (key == "min_area_fraction") c.min_area_fraction = v.get<double>();
      else if (key == "view_count") c.view_count = v.get<int>();
      else if (key == "view_fov_deg") c.view_fov_deg = v.get<double>();
      else if (key == "view_size") c.view_size = v.get<int>();
      else if (key == "omni_width") c.omni_width = v.get<int>();
      else if (key == "blend_band_deg") c.blend_band_deg = v.get<double>();
      else if (key == "adapter") c.adapter = v.get<std::string>();
      else if (key == "capturer_direction") {
        if (v.is_null()) c.capturer_direction.reset();
        else c.capturer_direction = direction_from_json(v);
      } else if (key == "fps") c.fps = v.get<double>();
      else if (key == "threads") c.threads = v.get<int>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else throw std::invalid_argument("unknown key");
    } catch (const json::exception& e) {
      throw std::invalid_argument("config: key '" + key + "': " + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config: key '" + key + "': " + e.what());
    }
  }
  return c;
}

inline PipelineConfig config_from_json(const json& j) { return apply_config_json(PipelineConfig{}, j); }

}  // namespace omnimask

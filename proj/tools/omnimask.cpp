// omnimask: command-line front end for the camera-geometry and capturer
// masking pipeline.
//
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "omnimask/adapter.hpp"
#include "omnimask/config.hpp"
#include "omnimask/localization.hpp"
#include "omnimask/mask_ops.hpp"
#include "omnimask/oracle_capture.hpp"
#include "omnimask/pipeline.hpp"
#include "omnimask/png_io.hpp"
#include "omnimask/resampler.hpp"
#include "omnimask/serialization.hpp"
#include "omnimask/tessellation.hpp"

namespace {

using namespace omnimask;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::optional<std::string> closest(const std::string& word, const std::vector<std::string>& candidates) {
  std::optional<std::string> best;
  std::size_t best_d = std::max<std::size_t>(3, word.size() / 2) + 1;
  for (const std::string& c : candidates) {
    const std::size_t d = edit_distance(word, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::vector<std::string> option_names(const CLI::App* app) {
  std::vector<std::string> out;
  for (const CLI::App* a = app; a; a = a->get_parent()) {
    for (const CLI::Option* opt : a->get_options()) {
      for (const std::string& n : opt->get_lnames()) out.push_back("--" + n);
    }
  }
  return out;
}

// Common flags shared by every subcommand.
struct Common {
  std::string config_path;
  int downsample = 0;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 0;
  bool progress = false;
  CLI::Option* downsample_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
};

struct Resolved {
  PipelineConfig cfg;
  ProgressFn progress;
};

Resolved resolve(const Common& c) {
  Resolved r;
  try {
    if (!c.config_path.empty()) {
      if (!fs::exists(c.config_path)) throw UsageError("config file not found: " + c.config_path);
      r.cfg = config_from_json(read_json_file(c.config_path));
    }
    if (c.downsample_opt->count()) r.cfg.downsample_factor = c.downsample;
    if (c.seed_opt->count()) r.cfg.seed = c.seed;
    if (c.threads_opt->count()) r.cfg.threads = c.threads;
    r.cfg.validate();
  } catch (const IoError& e) {
    throw UsageError(e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  set_thread_count(r.cfg.threads);
  if (c.progress) {
    r.progress = [](const json& j) {
      std::cout << j.dump() << '\n';
      std::cout.flush();
    };
  }
  return r;
}

fs::path require_out(const Common& c) {
  if (c.out.empty()) throw UsageError("--out <dir> is required");
  return c.out;
}

void require_dir(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " is required");
  if (!fs::is_directory(path)) throw UsageError(what + " not found: " + path);
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " is required");
  if (!fs::is_regular_file(path)) throw UsageError(what + " not found: " + path);
}

json base_manifest(const std::string& command, const PipelineConfig& cfg) {
  json m;
  m["tool"] = "omnimask";
  m["version"] = kVersion;
  m["command"] = command;
  m["config"] = to_json(cfg);
  return m;
}

std::unique_ptr<SegmentationAdapter> open_adapter(const PipelineConfig& cfg) {
  if (cfg.adapter.empty()) throw UsageError("an adapter endpoint is required (--adapter oracle:<scene.json> or exec:<command>)");
  try {
    return make_adapter(cfg.adapter);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const IoError& e) {
    throw UsageError(e.what());
  }
}

/// Capturer direction from --lat-deg/--lon-deg, else the config document.
std::optional<Direction> direction_from_flags(CLI::Option* lat_opt, CLI::Option* lon_opt, double lat, double lon,
                                              const PipelineConfig& cfg) {
  if (lat_opt->count() != lon_opt->count()) throw UsageError("--lat-deg and --lon-deg must be given together");
  if (lat_opt->count()) {
    if (std::abs(lat) > 90.0) throw UsageError("--lat-deg must be within [-90, 90]");
    return spherical_to_dir({deg2rad(lat), deg2rad(lon)});
  }
  return cfg.capturer_direction;
}

CameraModel model_for(const std::string& kind, int size, double fov_deg) {
  if (size < 1) throw UsageError("--size must be positive");
  if (kind == "equirect") return CameraModel::equirectangular(2 * size, size);
  if (kind == "fisheye") return CameraModel::fisheye(size, deg2rad(fov_deg));
  if (kind == "pinhole") return CameraModel::pinhole(size, size, deg2rad(fov_deg));
  throw UsageError("unknown model '" + kind + "'");
}

std::string face_file(int face) {
  static const std::array<const char*, 6> names{"px", "nx", "py", "ny", "pz", "nz"};
  return std::string("face_") + names[static_cast<std::size_t>(face)] + ".png";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"omnimask: camera-geometry and capturer-mask pipeline for dual-fisheye 360 captures"};
  app.set_version_flag("--version", std::string(kVersion));
  app.allow_extras();
  app.fallthrough();

  Common common;
  app.add_option("--config", common.config_path, "Pipeline configuration document (JSON)");
  common.downsample_opt = app.add_option("--downsample", common.downsample, "Integer downsampling factor");
  app.add_option("--out", common.out, "Output directory");
  common.seed_opt = app.add_option("--seed", common.seed, "Random seed");
  common.threads_opt = app.add_option("--threads", common.threads, "Worker threads (0 = all cores)");
  app.add_flag("--progress", common.progress, "Print one JSON progress record per frame on stdout");

  // convert ---------------------------------------------------------------
  auto* convert = app.add_subcommand("convert", "Reproject an image or mask between camera models");
  std::string conv_in, conv_from = "equirect", conv_to = "cubemap";
  int conv_size = 512;
  double conv_from_fov = 180.0, conv_to_fov = 90.0, conv_lat = 0.0, conv_lon = 0.0;
  bool conv_mask = false;
  convert->add_option("--in", conv_in, "Input image, or directory of cubemap faces")->required();
  convert->add_option("--from", conv_from, "Source model")->check(CLI::IsMember({"equirect", "fisheye", "pinhole", "cubemap"}));
  convert->add_option("--to", conv_to, "Destination model")->check(CLI::IsMember({"equirect", "fisheye", "pinhole", "cubemap"}));
  convert->add_option("--size", conv_size, "Destination size (equirect height, face size, or square side)");
  convert->add_option("--from-fov-deg", conv_from_fov, "Source fov for fisheye/pinhole");
  convert->add_option("--to-fov-deg", conv_to_fov, "Destination fov for fisheye/pinhole");
  convert->add_option("--look-lat-deg", conv_lat, "Latitude the destination view looks at");
  convert->add_option("--look-lon-deg", conv_lon, "Longitude the destination view looks at");
  convert->add_flag("--mask", conv_mask, "Treat input as a binary mask (nearest sampling)");

  // boundary-mask -----------------------------------------------------------
  auto* boundary = app.add_subcommand("boundary-mask", "Valid-area mask of a raw fisheye");
  int bm_size = 720;
  double bm_fov = 0.0;
  int bm_margin = -1;
  boundary->add_option("--size", bm_size, "Fisheye image side in pixels");
  auto* bm_fov_opt = boundary->add_option("--fov-deg", bm_fov, "Fisheye fov (default: config)");
  auto* bm_margin_opt = boundary->add_option("--margin", bm_margin, "Margin in pixels (default: config)");

  // tessellate --------------------------------------------------------------
  auto* tess = app.add_subcommand("tessellate", "Virtual pinhole views covering the sphere");
  int tess_count = 0, tess_view_size = 0;
  double tess_fov = 0.0;
  long long tess_samples = 100000;
  std::string tess_render;
  auto* tess_count_opt = tess->add_option("--count", tess_count, "Number of views (default: config)");
  auto* tess_fov_opt = tess->add_option("--fov-deg", tess_fov, "View fov (default: config)");
  auto* tess_size_opt = tess->add_option("--view-size", tess_view_size, "View side in pixels (default: config)");
  tess->add_option("--samples", tess_samples, "Monte-Carlo coverage samples");
  tess->add_option("--render", tess_render, "Equirect image to render every view from");

  // localize ----------------------------------------------------------------
  auto* localize = app.add_subcommand("localize", "Find the capturer direction in a capture");
  std::string loc_capture, loc_adapter;
  localize->add_option("--capture", loc_capture, "Capture directory")->required();
  auto* loc_adapter_opt = localize->add_option("--adapter", loc_adapter, "Adapter endpoint");

  // synth-fisheye -----------------------------------------------------------
  auto* synth = app.add_subcommand("synth-fisheye", "Render capturer-centered 180 degree fisheyes");
  std::string syn_capture, syn_adapter;
  double syn_lat = 0.0, syn_lon = 0.0;
  synth->add_option("--capture", syn_capture, "Capture directory")->required();
  auto* syn_lat_opt = synth->add_option("--lat-deg", syn_lat, "Capturer latitude");
  auto* syn_lon_opt = synth->add_option("--lon-deg", syn_lon, "Capturer longitude");
  auto* syn_adapter_opt = synth->add_option("--adapter", syn_adapter, "Adapter endpoint used to localize when no direction is given");

  // backproject -------------------------------------------------------------
  auto* backproj = app.add_subcommand("backproject", "Map synthetic-fisheye masks onto the raw fisheyes");
  std::string bp_capture, bp_masks;
  double bp_lat = 0.0, bp_lon = 0.0;
  backproj->add_option("--capture", bp_capture, "Capture directory (rig and frame list)")->required();
  backproj->add_option("--masks", bp_masks, "Directory of synthetic-fisheye masks frame_NNNNNN.png")->required();
  auto* bp_lat_opt = backproj->add_option("--lat-deg", bp_lat, "Capturer latitude");
  auto* bp_lon_opt = backproj->add_option("--lon-deg", bp_lon, "Capturer longitude");

  // dilate ------------------------------------------------------------------
  auto* dilate = app.add_subcommand("dilate", "Square dilation of a binary mask");
  std::string dil_in;
  int dil_radius = 0;
  dilate->add_option("--in", dil_in, "Mask image")->required();
  auto* dil_radius_opt = dilate->add_option("--radius", dil_radius, "Radius in pixels (default: config)");

  // pipeline ----------------------------------------------------------------
  auto* pipeline = app.add_subcommand("pipeline", "Full capturer masking and dataset export");
  std::string pl_capture, pl_adapter, pl_work;
  bool pl_keep = false;
  double pl_lat = 0.0, pl_lon = 0.0;
  pipeline->add_option("--capture", pl_capture, "Capture directory")->required();
  auto* pl_adapter_opt = pipeline->add_option("--adapter", pl_adapter, "Adapter endpoint");
  pipeline->add_option("--work-dir", pl_work, "Directory for adapter hand-off files");
  pipeline->add_flag("--keep-work", pl_keep, "Keep the work directory");
  auto* pl_lat_opt = pipeline->add_option("--lat-deg", pl_lat, "Fixed capturer latitude (skips localization)");
  auto* pl_lon_opt = pipeline->add_option("--lon-deg", pl_lon, "Fixed capturer longitude");

  // export ------------------------------------------------------------------
  auto* exp = app.add_subcommand("export", "Export images and valid-pixel masks from capturer masks");
  std::string ex_capture, ex_masks;
  exp->add_option("--capture", ex_capture, "Capture directory")->required();
  exp->add_option("--masks", ex_masks, "Directory with front/ and rear/ capturer masks (frame_NNNNNN.png)")->required();

  // oracle ------------------------------------------------------------------
  auto* oracle = app.add_subcommand("oracle", "Synthetic ground-truth captures and the analytic adapter");
  oracle->require_subcommand(1);
  auto* gen = oracle->add_subcommand("generate", "Write a synthetic capture");
  OracleCaptureSpec spec;
  double gen_lat = 0.0, gen_lon = 0.0, gen_jitter = 0.0;
  gen->add_option("--frames", spec.frames, "Frame count")->capture_default_str();
  gen->add_option("--size", spec.size, "Fisheye side in pixels")->capture_default_str();
  gen->add_option("--fov-deg", spec.fov_deg, "Fisheye fov")->capture_default_str();
  gen->add_option("--blob-radius-deg", spec.blob_radius_deg, "Capturer cap radius")->capture_default_str();
  gen->add_option("--motion-deg", spec.motion_deg, "Total sweep of the capturer")->capture_default_str();
  auto* gen_lat_opt = gen->add_option("--blob-lat-deg", gen_lat, "Mid-trajectory latitude (default: random)");
  auto* gen_lon_opt = gen->add_option("--blob-lon-deg", gen_lon, "Mid-trajectory longitude (default: random)");
  gen->add_option("--rig-jitter-deg", gen_jitter, "Random extrinsics perturbation per camera");
  auto* serve = oracle->add_subcommand("serve", "Serve analytic masks over the adapter protocol on stdin/stdout");
  std::string serve_scene, serve_mask_dir;
  bool serve_rle = false;
  serve->add_option("--scene", serve_scene, "Scene document")->required();
  serve->add_flag("--rle", serve_rle, "Send masks inline as run lengths");
  serve->add_option("--mask-dir", serve_mask_dir, "Directory for mask files (default: next to each image)");

  for (CLI::App* sub : app.get_subcommands({})) {
    sub->allow_extras();
    for (CLI::App* s2 : sub->get_subcommands({})) s2->allow_extras();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "omnimask: " << e.what() << "\n";
    return 2;
  }

  // Locate the innermost selected subcommand.
  const CLI::App* active = &app;
  while (!active->get_subcommands().empty()) active = active->get_subcommands().front();

  const std::vector<std::string> extras = app.remaining(true);
  if (!extras.empty()) {
    const std::string& bad = extras.front();
    std::cerr << "omnimask: unexpected argument '" << bad << "'";
    std::vector<std::string> candidates;
    if (bad.rfind("-", 0) == 0) {
      candidates = option_names(active);
    } else {
      for (const CLI::App* s : active->get_subcommands({})) candidates.push_back(s->get_name());
    }
    if (auto s = closest(bad.substr(0, bad.find('=')), candidates)) std::cerr << "; did you mean '" << *s << "'?";
    std::cerr << "\n";
    return 2;
  }
  if (active == &app) {
    std::cerr << app.help() << "omnimask: a subcommand is required\n";
    return 2;
  }

  try {
    Resolved r = resolve(common);
    PipelineConfig& cfg = r.cfg;
    const std::string cmd = active->get_name();

    if (active == convert) {
      if (conv_from == "cubemap") {
        require_dir(conv_in, "cubemap face directory");
      } else {
        require_file(conv_in, "input image");
      }
      const fs::path out = require_out(common);
      const Rotation dst_to_src = gravity_aligned_view(deg2rad(conv_lat), deg2rad(conv_lon)).transposed();
      const Interpolation interp = conv_mask ? Interpolation::nearest : Interpolation::bilinear;
      std::vector<std::string> written;
      auto write_result = [&](const fs::path& rel, const ImageU8& img) {
        write_png(out / rel, img);
        written.push_back(rel.generic_string());
      };
      if (conv_from == "cubemap") {
        Cubemap<std::uint8_t> faces;
        for (int f = 0; f < 6; ++f) {
          const fs::path p = fs::path(conv_in) / face_file(f);
          if (!fs::is_regular_file(p)) throw UsageError("cubemap face not found: " + p.string());
          faces[f] = read_png(p);
        }
        if (conv_to == "cubemap") throw UsageError("--from cubemap --to cubemap is an identity");
        const CameraModel dst = model_for(conv_to, conv_size, conv_to_fov);
        write_result("converted.png", resample_from_cubemap(faces, dst, dst_to_src, interp));
      } else {
        const ImageU8 src = read_png(conv_in);
        CameraModel sm = conv_from == "equirect" ? CameraModel::equirectangular(src.width(), src.height())
                         : conv_from == "fisheye" ? CameraModel::fisheye(src.width(), deg2rad(conv_from_fov))
                                                  : CameraModel::pinhole(src.width(), src.height(), deg2rad(conv_from_fov));
        if (conv_to == "cubemap") {
          for (int f = 0; f < 6; ++f) {
            const CameraModel face = CameraModel::cubemap_face(conv_size, f);
            write_result(fs::path("faces") / face_file(f), resample_image(src, {sm, face, dst_to_src, interp, 0.0}));
          }
        } else {
          write_result("converted.png", resample_image(src, {sm, model_for(conv_to, conv_size, conv_to_fov), dst_to_src, interp, 0.0}));
        }
      }
      json m = base_manifest(cmd, cfg);
      m["input"] = conv_in;
      m["from"] = conv_from;
      m["to"] = conv_to;
      m["outputs"] = written;
      write_json_file(out / "manifest.json", m);
    } else if (active == boundary) {
      const fs::path out = require_out(common);
      if (bm_fov_opt->count()) cfg.fisheye_fov_deg = bm_fov;
      if (bm_margin_opt->count()) cfg.boundary_margin_px = bm_margin;
      if (cfg.boundary_margin_px < 0) throw UsageError("--margin must be >= 0");
      const CameraModel model = CameraModel::fisheye(bm_size, deg2rad(cfg.fisheye_fov_deg));
      const MaskBuffer m = boundary_mask(model, cfg.boundary_margin_px);
      write_mask_png(out / "boundary_mask.png", m);
      json man = base_manifest(cmd, cfg);
      man["model"] = to_json(model);
      man["valid_px"] = m.count();
      man["outputs"] = {"boundary_mask.png"};
      write_json_file(out / "manifest.json", man);
    } else if (active == tess) {
      const fs::path out = require_out(common);
      if (tess_count_opt->count()) cfg.view_count = tess_count;
      if (tess_fov_opt->count()) cfg.view_fov_deg = tess_fov;
      if (tess_size_opt->count()) cfg.view_size = tess_view_size;
      ViewSet set;
      try {
        set = tessellate(cfg.view_count, deg2rad(cfg.view_fov_deg), cfg.view_size);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const CoverageReport rep = measure_coverage(set, tess_samples, cfg.seed);
      json doc = to_json(set);
      doc["coverage"] = json{{"samples", rep.samples},
                             {"uncovered", rep.uncovered},
                             {"mean_multiplicity", rep.mean_multiplicity},
                             {"min_multiplicity", rep.min_multiplicity}};
      write_json_file(out / "views.json", doc);
      std::vector<std::string> outputs{"views.json"};
      if (!tess_render.empty()) {
        require_file(tess_render, "render source");
        const ImageU8 omni = read_png(tess_render);
        const CameraModel om = CameraModel::equirectangular(omni.width(), omni.height());
        for (std::size_t i = 0; i < set.count(); ++i) {
          char name[32];
          std::snprintf(name, sizeof name, "views/view_%02zu.png", i);
          write_png(out / name, resample_image(omni, {om, set.views[i].model, set.views[i].world_to_camera.transposed(),
                                                      Interpolation::bilinear, 0.0}));
          outputs.push_back(name);
        }
      }
      json m = base_manifest(cmd, cfg);
      m["coverage"] = doc["coverage"];
      m["outputs"] = outputs;
      write_json_file(out / "manifest.json", m);
      if (rep.uncovered > 0) {
        std::cerr << "omnimask: " << rep.uncovered << " of " << rep.samples << " sample directions are uncovered\n";
        return 1;
      }
    } else if (active == localize) {
      require_dir(loc_capture, "capture directory");
      const fs::path out = require_out(common);
      if (loc_adapter_opt->count()) cfg.adapter = loc_adapter;
      auto adapter = open_adapter(cfg);
      const Capture cap = scan_capture(loc_capture, cfg.fps);
      WorkDir work;
      const LocalizationResult loc = run_localization(cap, cfg, *adapter, work.path(), r.progress);
      json m = base_manifest(cmd, cfg);
      m["capture"] = cap.root.string();
      m["capturer"] = json{{"direction", direction_record(loc.direction)}, {"localization", localization_record(loc)}};
      write_json_file(out / "localization.json", m["capturer"]);
      m["outputs"] = {"localization.json"};
      write_json_file(out / "manifest.json", m);
    } else if (active == synth) {
      require_dir(syn_capture, "capture directory");
      const fs::path out = require_out(common);
      if (syn_adapter_opt->count()) cfg.adapter = syn_adapter;
      const Capture cap = scan_capture(syn_capture, cfg.fps);
      const WorkingGeometry geo = working_geometry(cap, cfg);
      std::optional<Direction> dir = direction_from_flags(syn_lat_opt, syn_lon_opt, syn_lat, syn_lon, cfg);
      if (!dir) {
        if (cfg.adapter.empty()) throw UsageError("give --lat-deg/--lon-deg, a capturer_direction in --config, or --adapter");
        auto adapter = open_adapter(cfg);
        WorkDir work;
        dir = run_localization(cap, cfg, *adapter, work.path(), r.progress).direction;
      }
      cfg.capturer_direction = dir;
      const Rotation c = centering_rotation(*dir);
      std::vector<std::string> outputs;
      for (const FrameRecord& rec : cap.frames) {
        const ImageF omni = stitch_omni(to_float(load_working_image(rec.front_path, cfg.downsample_factor)),
                                        to_float(load_working_image(rec.rear_path, cfg.downsample_factor)), cap.rig,
                                        geo.raw, geo.omni, deg2rad(cfg.blend_band_deg));
        const std::string rel = "synthetic/" + export_stem(rec.frame_id) + ".png";
        write_png(out / rel, to_u8(synthesize_fisheye(omni, geo.omni, geo.synthetic, c)));
        outputs.push_back(rel);
        if (r.progress) r.progress(json{{"stage", "synthesize"}, {"frame", rec.frame_id}});
      }
      json m = base_manifest(cmd, cfg);
      m["capture"] = cap.root.string();
      m["capturer"] = json{{"direction", direction_record(*dir)}, {"centering_rotation", to_json(c)}};
      m["synthetic_model"] = to_json(geo.synthetic);
      m["outputs"] = outputs;
      write_json_file(out / "manifest.json", m);
    } else if (active == backproj) {
      require_dir(bp_capture, "capture directory");
      require_dir(bp_masks, "mask directory");
      const fs::path out = require_out(common);
      const Capture cap = scan_capture(bp_capture, cfg.fps);
      const WorkingGeometry geo = working_geometry(cap, cfg);
      const std::optional<Direction> dir = direction_from_flags(bp_lat_opt, bp_lon_opt, bp_lat, bp_lon, cfg);
      if (!dir) throw UsageError("give --lat-deg/--lon-deg or a capturer_direction in --config");
      cfg.capturer_direction = dir;
      const Rotation c = centering_rotation(*dir);
      std::vector<std::string> outputs;
      json areas = json::array();
      for (const FrameRecord& rec : cap.frames) {
        const fs::path mp = fs::path(bp_masks) / (export_stem(rec.frame_id) + ".png");
        if (!fs::is_regular_file(mp)) throw UsageError("synthetic mask not found: " + mp.string());
        const MaskBuffer synth_mask = read_mask_png(mp);
        if (synth_mask.size() != geo.synthetic.size)
          throw UsageError(mp.string() + " is " + to_string(synth_mask.size()) + ", expected " + to_string(geo.synthetic.size));
        const MaskBuffer dilated = dilate_mask(synth_mask, cfg.dilation_px);
        json entry{{"frame_id", rec.frame_id}};
        for (FisheyeSide side : {FisheyeSide::front, FisheyeSide::rear}) {
          const MaskBuffer m = backproject_mask(dilated, geo.synthetic, c, cap.rig, side, geo.raw);
          const std::string rel = "capturer/" + std::string(to_string(side)) + "/" + export_stem(rec.frame_id) + ".png";
          write_mask_png(out / rel, m);
          outputs.push_back(rel);
          entry[std::string(to_string(side))] = m.count();
        }
        areas.push_back(entry);
        if (r.progress) r.progress(json{{"stage", "backproject"}, {"frame", rec.frame_id}});
      }
      json m = base_manifest(cmd, cfg);
      m["capture"] = cap.root.string();
      m["capturer"] = json{{"direction", direction_record(*dir)}};
      m["capturer_px"] = areas;
      m["outputs"] = outputs;
      write_json_file(out / "manifest.json", m);
    } else if (active == dilate) {
      require_file(dil_in, "input mask");
      const fs::path out = require_out(common);
      if (dil_radius_opt->count()) cfg.dilation_px = dil_radius;
      if (cfg.dilation_px < 0) throw UsageError("--radius must be >= 0");
      const MaskBuffer m = dilate_mask(read_mask_png(dil_in), cfg.dilation_px);
      const std::string name = fs::path(dil_in).filename().string();
      write_mask_png(out / name, m);
      json man = base_manifest(cmd, cfg);
      man["input"] = dil_in;
      man["outputs"] = {name};
      write_json_file(out / "manifest.json", man);
    } else if (active == pipeline) {
      require_dir(pl_capture, "capture directory");
      const fs::path out = require_out(common);
      if (pl_adapter_opt->count()) cfg.adapter = pl_adapter;
      if (auto d = direction_from_flags(pl_lat_opt, pl_lon_opt, pl_lat, pl_lon, cfg)) cfg.capturer_direction = d;
      auto adapter = open_adapter(cfg);
      PipelineOptions opts;
      opts.work_dir = pl_work;
      opts.keep_work = pl_keep;
      opts.progress = r.progress;
      run_pipeline(pl_capture, cfg, *adapter, out, opts);
    } else if (active == exp) {
      require_dir(ex_capture, "capture directory");
      require_dir(ex_masks, "mask directory");
      const fs::path out = require_out(common);
      const Capture cap = scan_capture(ex_capture, cfg.fps);
      const WorkingGeometry geo = working_geometry(cap, cfg);
      std::vector<FrameMasks> masks;
      for (const FrameRecord& rec : cap.frames) {
        FrameMasks fm;
        fm.frame_id = rec.frame_id;
        for (FisheyeSide side : {FisheyeSide::front, FisheyeSide::rear}) {
          const fs::path mp = fs::path(ex_masks) / std::string(to_string(side)) / (export_stem(rec.frame_id) + ".png");
          MaskBuffer m = fs::is_regular_file(mp) ? read_mask_png(mp) : MaskBuffer(geo.raw.size);
          (side == FisheyeSide::front ? fm.front : fm.rear) = std::move(m);
        }
        masks.push_back(std::move(fm));
      }
      export_dataset(cap, masks, cfg, out, json{{"command", cmd}, {"capturer_masks", ex_masks}}, r.progress);
    } else if (active == gen) {
      const fs::path out = require_out(common);
      spec.seed = cfg.seed;
      if (gen_lat_opt->count() != gen_lon_opt->count()) throw UsageError("--blob-lat-deg and --blob-lon-deg must be given together");
      if (gen_lat_opt->count()) spec.blob_center = spherical_to_dir({deg2rad(gen_lat), deg2rad(gen_lon)});
      if (gen_jitter > 0.0) {
        Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
        spec.rig.front = Rotation::axis_angle(rng.direction().vec(), deg2rad(gen_jitter));
        spec.rig.rear = Rotation::axis_angle(rng.direction().vec(), deg2rad(gen_jitter));
      }
      try {
        oracle_scene(spec);
        oracle_raw_model(spec);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      write_oracle_capture(spec, out, r.progress);
      json m = base_manifest("oracle generate", cfg);
      m["oracle"] = json{{"frames", spec.frames},     {"size", spec.size},
                         {"fov_deg", spec.fov_deg},   {"blob_radius_deg", spec.blob_radius_deg},
                         {"motion_deg", spec.motion_deg}};
      m["outputs"] = {"front/", "rear/", "scene.json", "extrinsics.json"};
      write_json_file(out / "manifest.json", m);
    } else if (active == serve) {
      require_file(serve_scene, "scene document");
      OracleAdapter backend(scene_from_json(read_json_file(serve_scene)));
      ServeOptions so;
      so.inline_rle = serve_rle;
      so.mask_dir = serve_mask_dir;
      AdapterServer server(backend, so);
      std::ios::sync_with_stdio(false);
      server.serve(std::cin, std::cout);
    }
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "omnimask: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "omnimask: error: " << e.what() << "\n";
    return 1;
  }
}

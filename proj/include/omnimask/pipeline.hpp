#pragma once

// Capturer-masking pipeline over a dual-fisheye capture:
//
//   raw front/rear fisheyes -> internal stitch -> 16 pinhole views -> adapter
//   detections -> fused capturer direction -> centered 180 degree synthetic
//   fisheyes -> adapter track session -> dilation -> back-projection onto the
//   raw fisheyes -> valid-pixel masks (boundary AND NOT capturer) -> export.
//
// The stitched panorama is only an intermediate for masking; exported RGB is
// always the (downsampled) raw fisheye data.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "omnimask/adapter.hpp"
#include "omnimask/config.hpp"
#include "omnimask/localization.hpp"
#include "omnimask/mask_ops.hpp"
#include "omnimask/png_io.hpp"
#include "omnimask/resampler.hpp"
#include "omnimask/tessellation.hpp"

#ifndef OMNIMASK_VERSION
#define OMNIMASK_VERSION "0.0.0"
#endif

namespace omnimask {

namespace fs = std::filesystem;

inline constexpr const char* kVersion = OMNIMASK_VERSION;

/// zlib level for adapter hand-off files, which are read once and discarded.
inline constexpr int kScratchCompression = 1;

class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ProgressFn = std::function<void(const json&)>;

// ---------------------------------------------------------------------------
// Capture layout: <root>/front/NNNNNN.png, <root>/rear/NNNNNN.png, optional
// <root>/extrinsics.json.

struct FrameRecord {
  int frame_id = 0;
  fs::path front_path;
  fs::path rear_path;
  std::optional<fs::path> omni_path;
  double timestamp = 0.0;  ///< seconds
};

struct Capture {
  fs::path root;
  std::vector<FrameRecord> frames;
  RigExtrinsics rig;
  ImageSize input_size;
};

inline std::string frame_file_name(int frame_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06d.png", frame_id);
  return buf;
}

inline std::string export_stem(int frame_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06d", frame_id);
  return buf;
}

namespace detail {

inline std::map<int, fs::path> list_frames(const fs::path& dir) {
  std::map<int, fs::path> out;
  if (!fs::is_directory(dir)) throw IoError(dir, "missing frame directory");
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    const std::string stem = entry.path().stem().string();
    if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](unsigned char c) { return std::isdigit(c); }))
      continue;
    out[std::stoi(stem)] = entry.path();
  }
  return out;
}

}  // namespace detail

inline Capture scan_capture(const fs::path& root, double fps = 5.0) {
  if (!fs::is_directory(root)) throw IoError(root, "capture directory does not exist");
  Capture cap;
  cap.root = root;
  const auto front = detail::list_frames(root / "front");
  const auto rear = detail::list_frames(root / "rear");
  for (const auto& [id, path] : front) {
    if (!rear.count(id)) throw PipelineError("frame " + std::to_string(id) + " has no rear image in " + (root / "rear").string());
  }
  for (const auto& [id, path] : rear) {
    if (!front.count(id)) throw PipelineError("frame " + std::to_string(id) + " has no front image in " + (root / "front").string());
  }
  if (front.empty()) throw PipelineError("capture " + root.string() + " contains no frames");
  for (const auto& [id, path] : front) {
    FrameRecord r;
    r.frame_id = id;
    r.front_path = path;
    r.rear_path = rear.at(id);
    const fs::path omni = root / "omni" / frame_file_name(id);
    if (fs::exists(omni)) r.omni_path = omni;
    r.timestamp = id / fps;
    const ImageSize fs_ = png_dimensions(r.front_path);
    const ImageSize rs = png_dimensions(r.rear_path);
    if (fs_ != rs) throw PipelineError("frame " + std::to_string(id) + ": front is " + to_string(fs_) + ", rear is " + to_string(rs));
    if (cap.frames.empty()) {
      cap.input_size = fs_;
    } else if (fs_ != cap.input_size) {
      throw PipelineError("frame " + std::to_string(id) + " is " + to_string(fs_) + ", expected " + to_string(cap.input_size));
    }
    cap.frames.push_back(std::move(r));
  }
  if (fs::exists(root / "extrinsics.json")) cap.rig = rig_from_json(read_json_file(root / "extrinsics.json"));
  return cap;
}

// ---------------------------------------------------------------------------
// Working-resolution geometry

struct WorkingGeometry {
  CameraModel raw;        ///< raw fisheye at working resolution
  CameraModel omni;       ///< internal stitch
  CameraModel synthetic;  ///< centered 180 degree fisheye
};

inline WorkingGeometry working_geometry(const Capture& cap, const PipelineConfig& cfg) {
  const int w = cap.input_size.width / cfg.downsample_factor;
  if (w < 8) throw PipelineError("downsample factor " + std::to_string(cfg.downsample_factor) + " leaves images of " +
                                 std::to_string(w) + " px");
  if (cap.input_size.width != cap.input_size.height)
    throw PipelineError("raw fisheye frames must be square, got " + to_string(cap.input_size));
  const int omni_w = cfg.omni_width > 0 ? cfg.omni_width : 2 * w;
  return {CameraModel::fisheye(w, deg2rad(cfg.fisheye_fov_deg)), CameraModel::equirectangular(omni_w, omni_w / 2),
          CameraModel::fisheye(cfg.synthetic_fisheye_size, kPi)};
}

inline ImageU8 load_working_image(const fs::path& path, int factor) { return downsample_box(read_png(path), factor); }

// ---------------------------------------------------------------------------
// Stitching

/// Equirectangular panorama from the two raw fisheyes. Each pixel takes the
/// camera with the smaller incidence angle; within `band` (radians) of equal
/// incidence the two are linearly cross-faded.
inline ImageF stitch_omni(const ImageF& front, const ImageF& rear, const RigExtrinsics& rig, const CameraModel& fisheye,
                          const CameraModel& dst, double band = deg2rad(5.0)) {
  if (dst.kind != ModelKind::equirectangular) throw std::invalid_argument("stitch_omni: destination must be equirectangular");
  if (front.size() != rear.size() || front.channels() != rear.channels())
    throw std::invalid_argument("stitch_omni: front is " + to_string(front.size()) + ", rear is " + to_string(rear.size()));
  if (front.size() != fisheye.size)
    throw std::invalid_argument("stitch_omni: images are " + to_string(front.size()) + " but the model is " +
                                to_string(fisheye.size));
  const int ch = front.channels();
  const Rotation rf = rig.world_to_camera(FisheyeSide::front);
  const Rotation rr = rig.world_to_camera(FisheyeSide::rear);
  ImageF out(dst.size, ch);
  detail::for_each_source_direction(dst, Rotation::identity(), [&](int x, int y, const std::optional<Direction>& d) {
    float* px = out.row(y) + static_cast<std::size_t>(x) * ch;
    const Direction cf = rf * *d;
    const Direction cr = rr * *d;
    // |acos(a) - acos(b)| >= |a - b|, so a cosine gap of 2 * band already
    // saturates the cross-fade and the angles need not be computed.
    const double zf = -cf.z();
    const double zr = -cr.z();
    double wf;
    if (band > 0.0 ? zf - zr >= 2.0 * band : zf > zr) {
      wf = 1.0;
    } else if (band > 0.0 ? zr - zf >= 2.0 * band : zf <= zr) {
      wf = 0.0;
    } else {
      const double tf = std::acos(std::clamp(zf, -1.0, 1.0));
      const double tr = std::acos(std::clamp(zr, -1.0, 1.0));
      wf = std::clamp(0.5 + (tr - tf) / (2.0 * band), 0.0, 1.0);
    }
    std::optional<PixelCoord> pf, pr;
    if (wf > 0.0) pf = fisheye_project(cf, fisheye);
    if (!pf) wf = 0.0;
    if (wf < 1.0) pr = fisheye_project(cr, fisheye);
    if (!pr) {
      if (!pf && wf < 1.0) pf = fisheye_project(cf, fisheye);
      if (!pf) {
        for (int c = 0; c < ch; ++c) px[c] = 0.0f;
        return;
      }
      wf = 1.0;
    }
    float sf[4] = {}, sr[4] = {};
    if (wf > 0.0) detail::sample_bilinear(front, *pf, false, sf);
    if (wf < 1.0) detail::sample_bilinear(rear, *pr, false, sr);
    for (int c = 0; c < ch; ++c) px[c] = static_cast<float>(wf * sf[c] + (1.0 - wf) * sr[c]);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Scratch space for adapter hand-off files

class WorkDir {
 public:
  /// Empty `path` creates a fresh directory under the system temp dir that
  /// is removed on destruction unless `keep`.
  explicit WorkDir(fs::path path = {}, bool keep = false) : keep_(keep) {
    if (path.empty()) {
      static std::atomic<int> counter{0};
      path = fs::temp_directory_path() /
             ("omnimask-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
      owned_ = true;
    }
    path_ = path;
    std::error_code ec;
    fs::create_directories(path_, ec);
    if (ec) throw IoError(path_, "cannot create work directory: " + ec.message());
  }
  ~WorkDir() {
    if (owned_ && !keep_) {
      std::error_code ec;
      fs::remove_all(path_, ec);
    }
  }
  WorkDir(const WorkDir&) = delete;
  WorkDir& operator=(const WorkDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  bool keep_ = false;
  bool owned_ = false;
};

namespace detail {

/// Calls the adapter, retrying once on an error response or transport error.
template <typename Call>
AdapterResponse call_with_retry(Call&& call, const std::string& what) {
  std::string last;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      AdapterResponse r = call();
      if (r.kind != ResponseKind::error) return r;
      last = r.message;
    } catch (const AdapterError& e) {
      last = e.what();
    }
  }
  throw PipelineError("adapter failed on " + what + ": " + last);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Localization

struct FrameLocalization {
  int frame_id = 0;
  int views_detected = 0;
  long long area_px = 0;
  std::optional<Direction> direction;
};

struct LocalizationResult {
  Direction direction;  ///< smoothed over all localized frames
  std::vector<FrameLocalization> frames;
};

/// Detects the capturer in every view of one stitched panorama and fuses the
/// per-view statistics. Throws CapturerNotFound if no view qualifies.
inline FrameLocalization localize_panorama(const ImageF& omni, const CameraModel& omni_model, const ViewSet& views,
                                           int frame_id, const PipelineConfig& cfg, SegmentationAdapter& adapter,
                                           const fs::path& work) {
  FrameLocalization loc;
  loc.frame_id = frame_id;
  std::vector<ViewMaskStat> stats;
  for (std::size_t v = 0; v < views.count(); ++v) {
    const VirtualView& view = views.views[v];
    const ImageF img = resample_image(
        omni, {omni_model, view.model, view.world_to_camera.transposed(), Interpolation::bilinear, 0.0});
    AdapterImage req;
    req.path = work / ("view_" + export_stem(frame_id) + "_" + std::to_string(v) + ".png");
    req.size = view.model.size;
    req.frame = frame_id;
    req.view = ViewMeta{view.model, view.world_to_camera};
    write_png(req.path, to_u8(img), kScratchCompression);
    const AdapterResponse r = detail::call_with_retry(
        [&] { return adapter.detect_person(req); },
        "detect_person for frame " + std::to_string(frame_id) + " view " + std::to_string(v));
    if (r.kind == ResponseKind::mask && r.mask) {
      ViewMaskStat s = mask_stats(*r.mask, view, static_cast<int>(v), &views);
      if (s.area_px >= cfg.min_area_px()) ++loc.views_detected;
      loc.area_px += s.area_px;
      stats.push_back(std::move(s));
    }
  }
  try {
    loc.direction = fuse_direction(stats, cfg.min_area_px(), cfg.fusion_mode);
  } catch (const CapturerNotFound&) {
  }
  return loc;
}

inline LocalizationResult run_localization(const Capture& cap, const PipelineConfig& cfg, SegmentationAdapter& adapter,
                                           const fs::path& work, const ProgressFn& progress = {}) {
  const WorkingGeometry geo = working_geometry(cap, cfg);
  const ViewSet views = tessellate(cfg.view_count, deg2rad(cfg.view_fov_deg), cfg.view_size);
  const int stride = cfg.localization_mode == LocalizationMode::capture ? cfg.localization_stride : 1;
  LocalizationResult res;
  Vec3 acc;
  for (std::size_t i = 0; i < cap.frames.size(); i += static_cast<std::size_t>(stride)) {
    const FrameRecord& rec = cap.frames[i];
    const ImageF front = to_float(load_working_image(rec.front_path, cfg.downsample_factor));
    const ImageF rear = to_float(load_working_image(rec.rear_path, cfg.downsample_factor));
    const ImageF omni = stitch_omni(front, rear, cap.rig, geo.raw, geo.omni, deg2rad(cfg.blend_band_deg));
    FrameLocalization loc = localize_panorama(omni, geo.omni, views, rec.frame_id, cfg, adapter, work);
    if (loc.direction) acc += loc.direction->vec();
    if (progress) {
      json p{{"stage", "localize"}, {"frame", rec.frame_id}, {"views_detected", loc.views_detected},
             {"area_px", loc.area_px}};
      p["direction"] = loc.direction ? to_json(*loc.direction) : json(nullptr);
      progress(p);
    }
    res.frames.push_back(std::move(loc));
  }
  if (!(acc.norm() > 1e-12)) {
    std::ostringstream msg;
    msg << "capturer not found in any sampled frame (views detected per frame:";
    for (const FrameLocalization& f : res.frames) msg << ' ' << f.frame_id << ':' << f.views_detected;
    msg << ')';
    throw CapturerNotFound(msg.str());
  }
  res.direction = Direction::normalized(acc);
  return res;
}

/// One direction per frame. Capture mode repeats the fused direction; per-frame
/// mode fills frames without a detection from the nearest localized frame.
inline std::vector<Direction> per_frame_directions(const Capture& cap, const PipelineConfig& cfg,
                                                   const LocalizationResult& loc) {
  std::vector<Direction> out(cap.frames.size(), loc.direction);
  if (cfg.localization_mode == LocalizationMode::capture) return out;
  std::map<int, Direction> found;
  for (const FrameLocalization& f : loc.frames)
    if (f.direction) found.emplace(f.frame_id, *f.direction);
  for (std::size_t i = 0; i < cap.frames.size(); ++i) {
    const int id = cap.frames[i].frame_id;
    auto hi = found.lower_bound(id);
    if (hi != found.end() && hi->first == id) {
      out[i] = hi->second;
      continue;
    }
    if (hi == found.begin()) {
      out[i] = hi->second;
    } else {
      auto lo = std::prev(hi);
      out[i] = (hi == found.end() || id - lo->first <= hi->first - id) ? lo->second : hi->second;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Masking

struct FrameMasks {
  int frame_id = 0;
  MaskBuffer front;  ///< capturer pixels = 1, raw front grid
  MaskBuffer rear;
  long long synthetic_area_px = 0;  ///< adapter mask area before dilation
  int session = -1;                 ///< track session index, -1 if untracked
};

/// Synthetic 180 degree fisheye centered on `direction` (capturer at the
/// image center, world-down kept as image-down).
inline ImageF synthesize_fisheye(const ImageF& omni, const CameraModel& omni_model, const CameraModel& synthetic,
                                 const Rotation& centering) {
  return resample_image(omni, {omni_model, synthetic, centering.transposed(), Interpolation::bilinear, 0.0});
}

/// Maps a synthetic-fisheye mask onto one raw fisheye of the rig.
inline MaskBuffer backproject_mask(const MaskBuffer& synthetic_mask, const CameraModel& synthetic,
                                   const Rotation& centering, const RigExtrinsics& rig, FisheyeSide side,
                                   const CameraModel& raw) {
  return resample_mask(synthetic_mask,
                       {synthetic, raw, centering * rig.world_to_camera(side).transposed(), Interpolation::nearest, 0});
}

inline std::vector<FrameMasks> run_masking(const Capture& cap, const std::vector<Direction>& directions,
                                           const PipelineConfig& cfg, SegmentationAdapter& adapter,
                                           const fs::path& work, const ProgressFn& progress = {}) {
  if (directions.size() != cap.frames.size())
    throw PipelineError("run_masking: " + std::to_string(directions.size()) + " directions for " +
                        std::to_string(cap.frames.size()) + " frames");
  const WorkingGeometry geo = working_geometry(cap, cfg);
  const double band = deg2rad(cfg.blend_band_deg);

  struct Prepared {
    AdapterImage image;
    Rotation centering;
  };
  auto prepare = [&](std::size_t i) {
    const FrameRecord& rec = cap.frames[i];
    const ImageF front = to_float(load_working_image(rec.front_path, cfg.downsample_factor));
    const ImageF rear = to_float(load_working_image(rec.rear_path, cfg.downsample_factor));
    const ImageF omni = stitch_omni(front, rear, cap.rig, geo.raw, geo.omni, band);
    Prepared p;
    p.centering = centering_rotation(directions[i]);
    p.image.path = work / ("synthetic_" + export_stem(rec.frame_id) + ".png");
    p.image.size = geo.synthetic.size;
    p.image.frame = rec.frame_id;
    p.image.view = ViewMeta{geo.synthetic, p.centering};
    write_png(p.image.path, to_u8(synthesize_fisheye(omni, geo.omni, geo.synthetic, p.centering)), kScratchCompression);
    return p;
  };

  const PixelCoord prompt{geo.synthetic.size.width * 0.5, geo.synthetic.size.height * 0.5};
  std::vector<FrameMasks> out;
  out.reserve(cap.frames.size());
  std::optional<std::string> session;
  int session_index = -1;
  auto end_session = [&] {
    if (!session) return;
    try {
      adapter.track_end(*session);
    } catch (const AdapterError&) {
    }
    session.reset();
  };
  auto begin_session = [&](const Prepared& p) {
    ++session_index;
    const std::string id = "capturer-" + std::to_string(session_index);
    AdapterResponse r = detail::call_with_retry([&] { return adapter.track_begin(id, p.image, prompt); },
                                                "track_begin at frame " + std::to_string(*p.image.frame));
    if (r.kind == ResponseKind::mask) session = id;
    return r;
  };

  // Frame preparation runs one frame ahead of the (sequential) track session.
  std::future<Prepared> next = std::async(std::launch::async, prepare, 0);
  for (std::size_t i = 0; i < cap.frames.size(); ++i) {
    Prepared p = next.get();
    if (i + 1 < cap.frames.size()) next = std::async(std::launch::async, prepare, i + 1);
    const int fid = cap.frames[i].frame_id;
    AdapterResponse r;
    if (!session) {
      r = begin_session(p);
    } else {
      r = detail::call_with_retry([&] { return adapter.track_next(*session, p.image); },
                                  "track_next at frame " + std::to_string(fid));
      if (r.kind == ResponseKind::track_lost || r.kind == ResponseKind::no_detection) {
        end_session();
        r = begin_session(p);
      }
    }
    MaskBuffer synth_mask(geo.synthetic.size);
    if (r.kind == ResponseKind::mask && r.mask) {
      if (r.mask->size() != geo.synthetic.size)
        throw PipelineError("adapter mask for frame " + std::to_string(fid) + " is " + to_string(r.mask->size()) +
                            ", expected " + to_string(geo.synthetic.size));
      synth_mask = std::move(*r.mask);
    } else if (r.kind != ResponseKind::no_detection && r.kind != ResponseKind::track_lost) {
      throw PipelineError("adapter sent '" + std::string(to_string(r.kind)) + "' for frame " + std::to_string(fid));
    }
    FrameMasks fm;
    fm.frame_id = fid;
    fm.synthetic_area_px = synth_mask.count();
    fm.session = session ? session_index : -1;
    const MaskBuffer dilated = dilate_mask(synth_mask, cfg.dilation_px);
    fm.front = backproject_mask(dilated, geo.synthetic, p.centering, cap.rig, FisheyeSide::front, geo.raw);
    fm.rear = backproject_mask(dilated, geo.synthetic, p.centering, cap.rig, FisheyeSide::rear, geo.raw);
    if (progress) {
      progress(json{{"stage", "mask"},
                    {"frame", fid},
                    {"index", i},
                    {"total", cap.frames.size()},
                    {"synthetic_px", fm.synthetic_area_px},
                    {"front_px", fm.front.count()},
                    {"rear_px", fm.rear.count()}});
    }
    out.push_back(std::move(fm));
  }
  end_session();
  return out;
}

/// Valid-pixel mask (1 = use): inside the fisheye boundary and not capturer.
inline MaskBuffer compose_final_masks(const MaskBuffer& capturer, const CameraModel& model, int boundary_margin_px) {
  return mask_and_not(boundary_mask(model, boundary_margin_px), capturer);
}

// ---------------------------------------------------------------------------
// Export

struct ExportSummary {
  json manifest;
  std::vector<fs::path> files;  ///< every written file except the manifest
};

/// Writes images/{front,rear}/frame_NNNNNN.png (raw, box-downsampled),
/// masks/{front,rear}/frame_NNNNNN.png.png (255 = use) and manifest.json.
/// `extra` keys are merged into the manifest.
inline ExportSummary export_dataset(const Capture& cap, const std::vector<FrameMasks>& masks, const PipelineConfig& cfg,
                                    const fs::path& out_dir, const json& extra = json::object(),
                                    const ProgressFn& progress = {}) {
  if (masks.size() != cap.frames.size())
    throw PipelineError("export: " + std::to_string(masks.size()) + " mask sets for " +
                        std::to_string(cap.frames.size()) + " frames");
  const WorkingGeometry geo = working_geometry(cap, cfg);
  const MaskBuffer boundary = boundary_mask(geo.raw, cfg.boundary_margin_px);
  ExportSummary res;
  json frames = json::array();
  for (std::size_t i = 0; i < cap.frames.size(); ++i) {
    const FrameRecord& rec = cap.frames[i];
    const FrameMasks& fm = masks[i];
    if (fm.frame_id != rec.frame_id)
      throw PipelineError("export: masks for frame " + std::to_string(fm.frame_id) + " paired with frame " +
                          std::to_string(rec.frame_id));
    json entry{{"frame_id", rec.frame_id}, {"timestamp", rec.timestamp}};
    json images = json::object(), mask_paths = json::object(), capturer_px = json::object(), valid_px = json::object();
    for (FisheyeSide side : {FisheyeSide::front, FisheyeSide::rear}) {
      const std::string s(to_string(side));
      const MaskBuffer& capturer = side == FisheyeSide::front ? fm.front : fm.rear;
      if (capturer.size() != geo.raw.size)
        throw PipelineError("export: " + s + " mask of frame " + std::to_string(rec.frame_id) + " is " +
                            to_string(capturer.size()) + ", expected " + to_string(geo.raw.size));
      const ImageU8 img =
          load_working_image(side == FisheyeSide::front ? rec.front_path : rec.rear_path, cfg.downsample_factor);
      const fs::path img_rel = fs::path("images") / s / (export_stem(rec.frame_id) + ".png");
      const fs::path mask_rel = fs::path("masks") / s / (export_stem(rec.frame_id) + ".png.png");
      const MaskBuffer valid = mask_and_not(boundary, capturer);
      write_png(out_dir / img_rel, img);
      write_mask_png(out_dir / mask_rel, valid);
      res.files.push_back(out_dir / img_rel);
      res.files.push_back(out_dir / mask_rel);
      images[s] = img_rel.generic_string();
      mask_paths[s] = mask_rel.generic_string();
      capturer_px[s] = capturer.count();
      valid_px[s] = valid.count();
    }
    entry["images"] = std::move(images);
    entry["masks"] = std::move(mask_paths);
    entry["capturer_px"] = std::move(capturer_px);
    entry["valid_px"] = std::move(valid_px);
    entry["synthetic_px"] = fm.synthetic_area_px;
    entry["track_session"] = fm.session;
    if (progress) progress(json{{"stage", "export"}, {"frame", rec.frame_id}, {"index", i}, {"total", cap.frames.size()}});
    frames.push_back(std::move(entry));
  }
  json manifest;
  manifest["tool"] = "omnimask";
  manifest["version"] = kVersion;
  manifest["mask_convention"] = "8-bit, 255 = valid pixel, 0 = ignore; mask file = image file name + .png";
  manifest["config"] = to_json(cfg);
  manifest["capture"] = json{{"path", cap.root.string()},
                             {"frames", cap.frames.size()},
                             {"input_size", {cap.input_size.width, cap.input_size.height}},
                             {"working_size", {geo.raw.size.width, geo.raw.size.height}}};
  manifest["rig"] = to_json(cap.rig);
  for (const auto& [k, v] : extra.items()) manifest[k] = v;
  manifest["frames"] = std::move(frames);
  write_json_file(out_dir / "manifest.json", manifest);
  res.manifest = std::move(manifest);
  return res;
}

// ---------------------------------------------------------------------------
// Full run

struct PipelineOptions {
  fs::path work_dir;  ///< empty: private temp directory
  bool keep_work = false;
  ProgressFn progress;
};

inline json direction_record(const Direction& d) {
  const SphericalCoord s = dir_to_spherical(d);
  return json{{"vector", to_json(d)}, {"lat_deg", rad2deg(s.lat)}, {"lon_deg", rad2deg(s.lon)}};
}

inline json localization_record(const LocalizationResult& loc) {
  json frames = json::array();
  for (const FrameLocalization& f : loc.frames) {
    frames.push_back(json{{"frame_id", f.frame_id},
                          {"views_detected", f.views_detected},
                          {"area_px", f.area_px},
                          {"direction", f.direction ? to_json(*f.direction) : json(nullptr)}});
  }
  return frames;
}

/// Localize (unless the config fixes the direction), mask and export.
inline ExportSummary run_pipeline(const fs::path& capture_dir, const PipelineConfig& cfg, SegmentationAdapter& adapter,
                                  const fs::path& out_dir, const PipelineOptions& opts = {}) {
  cfg.validate();
  const Capture cap = scan_capture(capture_dir, cfg.fps);
  working_geometry(cap, cfg);
  WorkDir work(opts.work_dir, opts.keep_work);
  const AdapterResponse hello = adapter.hello();

  json capturer;
  LocalizationResult loc;
  if (cfg.capturer_direction) {
    loc.direction = *cfg.capturer_direction;
    capturer["source"] = "config";
  } else {
    loc = run_localization(cap, cfg, adapter, work.path(), opts.progress);
    capturer["source"] = "localized";
  }
  capturer["direction"] = direction_record(loc.direction);
  capturer["mode"] = std::string(to_string(cfg.localization_mode));
  capturer["localization"] = localization_record(loc);
  const std::vector<Direction> dirs = per_frame_directions(cap, cfg, loc);
  const std::vector<FrameMasks> masks = run_masking(cap, dirs, cfg, adapter, work.path(), opts.progress);

  json extra;
  extra["command"] = "pipeline";
  extra["adapter"] = json{{"endpoint", cfg.adapter}, {"name", hello.name}, {"capabilities", hello.capabilities}};
  extra["capturer"] = std::move(capturer);
  return export_dataset(cap, masks, cfg, out_dir, extra, opts.progress);
}

}  // namespace omnimask

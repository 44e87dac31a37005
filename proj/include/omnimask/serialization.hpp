#pragma once

// JSON documents: camera models, rotations, rig extrinsics, oracle scenes and
// view sets. Angles in documents are degrees; everything in memory is radians.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "omnimask/camera_models.hpp"
#include "omnimask/oracle.hpp"
#include "omnimask/png_io.hpp"
#include "omnimask/tessellation.hpp"

namespace omnimask {

using json = nlohmann::ordered_json;

inline json to_json(const Direction& d) { return json::array({d.x(), d.y(), d.z()}); }

inline Direction direction_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("direction must be an array of 3 numbers");
  return Direction::normalized(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline json to_json(const Rotation& r) {
  json a = json::array();
  for (double v : r.matrix()) a.push_back(v);
  return a;
}

inline Rotation rotation_from_json(const json& j) {
  if (!j.is_array() || j.size() != 9) throw std::invalid_argument("rotation must be a row-major array of 9 numbers");
  Rotation::Matrix m{};
  for (std::size_t i = 0; i < 9; ++i) m[i] = j[i].get<double>();
  return Rotation::from_matrix(m, 1e-6);
}

inline json to_json(const CameraModel& m) {
  json j;
  j["kind"] = std::string(to_string(m.kind));
  j["width"] = m.size.width;
  j["height"] = m.size.height;
  if (m.kind == ModelKind::equidistant_fisheye || m.kind == ModelKind::pinhole) j["fov_deg"] = rad2deg(m.fov);
  if (m.kind == ModelKind::cubemap_face) j["face"] = std::string(face_name(m.face_index));
  return j;
}

inline CameraModel camera_model_from_json(const json& j) {
  CameraModel m;
  m.kind = model_kind_from_string(j.at("kind").get<std::string>());
  m.size = {j.at("width").get<int>(), j.at("height").get<int>()};
  if (m.kind == ModelKind::equidistant_fisheye || m.kind == ModelKind::pinhole) m.fov = deg2rad(j.at("fov_deg").get<double>());
  if (m.kind == ModelKind::cubemap_face) {
    const std::string face = j.at("face").get<std::string>();
    m.fov = kPi / 2;
    m.face_index = -1;
    for (int f = 0; f < 6; ++f)
      if (face_name(f) == face) m.face_index = f;
  }
  m.validate();
  return m;
}

inline json to_json(const RigExtrinsics& rig) {
  return json{{"R_front", to_json(rig.front)}, {"R_rear", to_json(rig.rear)}};
}

inline RigExtrinsics rig_from_json(const json& j) {
  RigExtrinsics rig;
  if (j.contains("R_front")) rig.front = rotation_from_json(j["R_front"]);
  if (j.contains("R_rear")) rig.rear = rotation_from_json(j["R_rear"]);
  return rig;
}

inline json to_json(const SphericalScene& s) {
  json j;
  j["seed"] = s.seed;
  j["degree"] = s.degree;
  j["amplitude"] = s.amplitude;
  j["base"] = json::array({s.base[0], s.base[1], s.base[2]});
  if (s.blob) {
    json b;
    b["angular_radius_deg"] = rad2deg(s.blob->angular_radius);
    b["color"] = json::array({s.blob->color[0], s.blob->color[1], s.blob->color[2]});
    json centers = json::array();
    for (const Direction& d : s.blob->centers) centers.push_back(to_json(d));
    b["centers"] = std::move(centers);
    j["blob"] = std::move(b);
  }
  return j;
}

inline SphericalScene scene_from_json(const json& j) {
  SphericalScene s;
  s.seed = j.value("seed", std::uint64_t{0});
  s.degree = j.value("degree", kMaxHarmonicDegree);
  s.amplitude = j.value("amplitude", 0.45);
  if (j.contains("base"))
    for (int c = 0; c < 3; ++c) s.base[c] = j["base"][c].get<float>();
  if (s.degree < 0 || s.degree > kMaxHarmonicDegree) throw std::invalid_argument("scene degree must be in [0, 4]");
  s.regenerate();
  if (j.contains("blob")) {
    const json& b = j["blob"];
    Blob blob;
    blob.angular_radius = deg2rad(b.at("angular_radius_deg").get<double>());
    if (!(blob.angular_radius > 0.0 && blob.angular_radius < kPi / 2))
      throw std::invalid_argument("blob radius must be in (0, 90) degrees");
    if (b.contains("color"))
      for (int c = 0; c < 3; ++c) blob.color[c] = b["color"][c].get<float>();
    for (const json& c : b.at("centers")) blob.centers.push_back(direction_from_json(c));
    if (blob.centers.empty()) throw std::invalid_argument("blob needs at least one center");
    s.blob = std::move(blob);
  }
  return s;
}

inline json to_json(const ViewSet& set) {
  json views = json::array();
  for (std::size_t i = 0; i < set.views.size(); ++i) {
    const VirtualView& v = set.views[i];
    views.push_back(json{{"index", i},
                         {"optical_axis", to_json(v.optical_axis())},
                         {"world_to_camera", to_json(v.world_to_camera)},
                         {"model", to_json(v.model)}});
  }
  json corners = json::array();
  for (const LayoutCorner& c : set.corners) corners.push_back(json{{"center", to_json(c.center)}, {"radius", c.radius}});
  return json{{"count", set.views.size()}, {"views", std::move(views)}, {"corners", std::move(corners)}};
}

inline ViewSet viewset_from_json(const json& j) {
  ViewSet set;
  for (const json& v : j.at("views")) {
    set.views.push_back({rotation_from_json(v.at("world_to_camera")), camera_model_from_json(v.at("model"))});
  }
  for (const json& c : j.value("corners", json::array())) {
    set.corners.push_back({direction_from_json(c.at("center")), c.at("radius").get<double>()});
  }
  return set;
}

// ---------------------------------------------------------------------------

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path, std::string("invalid JSON: ") + e.what());
  }
}

/// Pretty-printed with a trailing newline; written via temp file + rename.
inline void write_json_file(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path, "cannot open for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError(path, "write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(path, "cannot move temp file into place: " + ec.message());
}

}  // namespace omnimask

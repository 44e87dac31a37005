#pragma once

// Segmentation adapter: the boundary between the geometric pipeline and any
// person detector / promptable video segmenter.
//
// Wire protocol (version 1): one JSON object per line over the adapter's
// stdin/stdout, exactly one response per request, in request order.
//
//   requests   hello         {protocol}
//              detect_person {image_path, width, height, [frame], [view]}
//              track_begin   {session_id, image_path, width, height,
//                             point_prompt {u, v}, [frame], [view]}
//              track_next    {session_id, image_path, width, height, [frame], [view]}
//              track_end     {session_id}
//   responses  hello         {protocol, capabilities[], name}
//              mask          {path | rle {width, height, counts[]}, area_px}
//              no_detection  {}
//              track_lost    {}
//              ack           {}                      (track_end only)
//              error         {message}
//
// Every request may carry an integer "id"; responses echo it. "view"
// ({model, world_to_camera}) and "frame" describe how the image was rendered;
// detectors ignore them, the analytic oracle needs them.

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "omnimask/image.hpp"
#include "omnimask/oracle.hpp"
#include "omnimask/png_io.hpp"
#include "omnimask/serialization.hpp"

extern char** environ;

namespace omnimask {

inline constexpr int kProtocolVersion = 1;

class AdapterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ViewMeta {
  CameraModel model;
  Rotation world_to_camera;
};

struct AdapterImage {
  std::filesystem::path path;
  ImageSize size;
  std::optional<int> frame;
  std::optional<ViewMeta> view;
};

enum class ResponseKind { hello, mask, no_detection, track_lost, ack, error };

inline std::string_view to_string(ResponseKind k) {
  switch (k) {
    case ResponseKind::hello: return "hello";
    case ResponseKind::mask: return "mask";
    case ResponseKind::no_detection: return "no_detection";
    case ResponseKind::track_lost: return "track_lost";
    case ResponseKind::ack: return "ack";
    case ResponseKind::error: return "error";
  }
  return "error";
}

struct AdapterResponse {
  ResponseKind kind = ResponseKind::error;
  std::optional<MaskBuffer> mask;
  long long area_px = 0;
  std::string message;
  std::vector<std::string> capabilities;
  std::string name;

  static AdapterResponse with_mask(MaskBuffer m) {
    AdapterResponse r;
    r.kind = ResponseKind::mask;
    r.area_px = m.count();
    r.mask = std::move(m);
    return r;
  }
  static AdapterResponse of(ResponseKind k, std::string message = {}) {
    AdapterResponse r;
    r.kind = k;
    r.message = std::move(message);
    return r;
  }
};

/// A detector/segmenter. Implementations are used from one thread at a time.
class SegmentationAdapter {
 public:
  virtual ~SegmentationAdapter() = default;
  virtual AdapterResponse hello() = 0;
  virtual AdapterResponse detect_person(const AdapterImage& image) = 0;
  virtual AdapterResponse track_begin(const std::string& session_id, const AdapterImage& image, PixelCoord prompt) = 0;
  virtual AdapterResponse track_next(const std::string& session_id, const AdapterImage& image) = 0;
  virtual AdapterResponse track_end(const std::string& session_id) = 0;
};

// ---------------------------------------------------------------------------
// Run-length mask payload: row-major, alternating runs starting with zeros.

inline std::vector<long long> rle_encode(const MaskBuffer& m) {
  std::vector<long long> counts;
  std::uint8_t current = 0;
  long long run = 0;
  for (std::uint8_t b : m.bits()) {
    if (b != current) {
      counts.push_back(run);
      run = 0;
      current = b;
    }
    ++run;
  }
  counts.push_back(run);
  return counts;
}

inline MaskBuffer rle_decode(ImageSize size, const std::vector<long long>& counts) {
  MaskBuffer m(size);
  auto bits = m.bits();
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (long long c : counts) {
    if (c < 0 || pos + static_cast<std::size_t>(c) > bits.size()) throw AdapterError("rle payload overruns the mask");
    std::fill_n(bits.begin() + static_cast<std::ptrdiff_t>(pos), c, value);
    pos += static_cast<std::size_t>(c);
    value ^= 1u;
  }
  if (pos != bits.size()) throw AdapterError("rle payload does not cover the mask");
  return m;
}

// ---------------------------------------------------------------------------
// Request encoding shared by client and server.

inline json image_fields(const AdapterImage& img) {
  json j;
  j["image_path"] = img.path.string();
  j["width"] = img.size.width;
  j["height"] = img.size.height;
  if (img.frame) j["frame"] = *img.frame;
  if (img.view) j["view"] = json{{"model", to_json(img.view->model)}, {"world_to_camera", to_json(img.view->world_to_camera)}};
  return j;
}

inline AdapterImage image_from_fields(const json& j) {
  AdapterImage img;
  img.path = j.at("image_path").get<std::string>();
  img.size = {j.at("width").get<int>(), j.at("height").get<int>()};
  if (img.size.width < 1 || img.size.height < 1) throw std::invalid_argument("image size must be positive");
  if (j.contains("frame")) img.frame = j["frame"].get<int>();
  if (j.contains("view")) {
    img.view = ViewMeta{camera_model_from_json(j["view"].at("model")), rotation_from_json(j["view"].at("world_to_camera"))};
  }
  return img;
}

// ---------------------------------------------------------------------------
// Server side: decode requests, dispatch to an adapter, encode responses.

struct ServeOptions {
  bool inline_rle = false;
  /// Where mask files go; empty means next to the request image.
  std::filesystem::path mask_dir;
};

class AdapterServer {
 public:
  AdapterServer(SegmentationAdapter& backend, ServeOptions opts) : backend_(backend), opts_(std::move(opts)) {}

  /// Handles one request line and returns one response line (no newline).
  std::string handle_line(const std::string& line) {
    json id;
    json out;
    try {
      const json req = json::parse(line);
      if (!req.is_object()) throw std::invalid_argument("request must be a JSON object");
      if (req.contains("id")) id = req["id"];
      const std::string type = req.at("type").get<std::string>();
      AdapterResponse resp;
      std::optional<AdapterImage> img;
      if (type == "hello") {
        const int proto = req.value("protocol", kProtocolVersion);
        if (proto != kProtocolVersion) {
          resp = AdapterResponse::of(ResponseKind::error, "unsupported protocol version " + std::to_string(proto));
        } else {
          resp = backend_.hello();
        }
      } else if (type == "detect_person") {
        img = image_from_fields(req);
        resp = backend_.detect_person(*img);
      } else if (type == "track_begin") {
        img = image_from_fields(req);
        const json& p = req.at("point_prompt");
        resp = backend_.track_begin(req.at("session_id").get<std::string>(), *img,
                                    {p.at("u").get<double>(), p.at("v").get<double>()});
      } else if (type == "track_next") {
        img = image_from_fields(req);
        resp = backend_.track_next(req.at("session_id").get<std::string>(), *img);
      } else if (type == "track_end") {
        resp = backend_.track_end(req.at("session_id").get<std::string>());
      } else {
        resp = AdapterResponse::of(ResponseKind::error, "unknown request type '" + type + "'");
      }
      out = encode(resp, img);
    } catch (const std::exception& e) {
      out = json{{"type", "error"}, {"message", std::string("malformed request: ") + e.what()}};
    }
    if (!id.is_null()) out["id"] = id;
    return out.dump();
  }

  /// Request loop until end of input.
  void serve(std::istream& in, std::ostream& out) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      out << handle_line(line) << '\n';
      out.flush();
    }
  }

 private:
  json encode(const AdapterResponse& r, const std::optional<AdapterImage>& img) {
    json j;
    j["type"] = std::string(to_string(r.kind));
    switch (r.kind) {
      case ResponseKind::hello:
        j["protocol"] = kProtocolVersion;
        j["capabilities"] = r.capabilities;
        j["name"] = r.name;
        break;
      case ResponseKind::mask: {
        if (!r.mask) throw std::logic_error("mask response without a mask");
        if (img && r.mask->size() != img->size) {
          return json{{"type", "error"}, {"message", "adapter produced a mask of the wrong size"}};
        }
        if (opts_.inline_rle) {
          j["rle"] = json{{"width", r.mask->width()}, {"height", r.mask->height()}, {"counts", rle_encode(*r.mask)}};
        } else {
          std::filesystem::path p = img ? img->path : std::filesystem::path("mask");
          p = opts_.mask_dir.empty() ? std::filesystem::path(p.string() + ".mask.png")
                                     : opts_.mask_dir / (p.filename().string() + ".mask.png");
          write_mask_png(p, *r.mask);
          j["path"] = p.string();
        }
        j["area_px"] = r.mask->count();
        break;
      }
      case ResponseKind::error: j["message"] = r.message; break;
      default: break;
    }
    return j;
  }

  SegmentationAdapter& backend_;
  ServeOptions opts_;
};

// ---------------------------------------------------------------------------
// Analytic oracle: masks are exact spherical-cap footprints of the scene blob.

class OracleAdapter final : public SegmentationAdapter {
 public:
  explicit OracleAdapter(SphericalScene scene) : scene_(std::move(scene)) {}

  AdapterResponse hello() override {
    AdapterResponse r = AdapterResponse::of(ResponseKind::hello);
    r.capabilities = {"detect", "track"};
    r.name = "oracle";
    return r;
  }

  AdapterResponse detect_person(const AdapterImage& image) override {
    auto m = analytic(image);
    if (!m) return AdapterResponse::of(ResponseKind::error, m.error);
    if (m.mask.count() == 0) return AdapterResponse::of(ResponseKind::no_detection);
    return AdapterResponse::with_mask(std::move(m.mask));
  }

  AdapterResponse track_begin(const std::string& session_id, const AdapterImage& image, PixelCoord prompt) override {
    if (!image.size.contains(prompt)) return AdapterResponse::of(ResponseKind::error, "prompt lies outside the image");
    auto m = analytic(image);
    if (!m) return AdapterResponse::of(ResponseKind::error, m.error);
    sessions_[session_id] = 1;
    return AdapterResponse::with_mask(std::move(m.mask));
  }

  AdapterResponse track_next(const std::string& session_id, const AdapterImage& image) override {
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) return AdapterResponse::of(ResponseKind::error, "unknown session '" + session_id + "'");
    auto m = analytic(image);
    if (!m) return AdapterResponse::of(ResponseKind::error, m.error);
    ++it->second;
    return AdapterResponse::with_mask(std::move(m.mask));
  }

  AdapterResponse track_end(const std::string& session_id) override {
    if (sessions_.erase(session_id) == 0)
      return AdapterResponse::of(ResponseKind::error, "unknown session '" + session_id + "'");
    return AdapterResponse::of(ResponseKind::ack);
  }

  const SphericalScene& scene() const { return scene_; }

 private:
  struct Analytic {
    MaskBuffer mask;
    std::string error;
    explicit operator bool() const { return error.empty(); }
  };

  Analytic analytic(const AdapterImage& image) const {
    if (!image.view) return {{}, "oracle adapter needs view metadata for " + image.path.string()};
    if (image.view->model.size != image.size) return {{}, "view model size does not match the image size"};
    return {blob_mask(scene_, image.view->model, image.view->world_to_camera, image.frame.value_or(0)), {}};
  }

  SphericalScene scene_;
  std::map<std::string, int> sessions_;
};

// ---------------------------------------------------------------------------
// Client for an adapter running as a child process.

class SubprocessAdapter final : public SegmentationAdapter {
 public:
  /// Spawns `argv[0]` (searched in PATH) and performs the hello handshake.
  explicit SubprocessAdapter(std::vector<std::string> argv) : argv_(std::move(argv)) {
    if (argv_.empty()) throw AdapterError("adapter command is empty");
    ::signal(SIGPIPE, SIG_IGN);
    spawn();
    hello_ = request(json{{"type", "hello"}, {"protocol", kProtocolVersion}}, std::nullopt);
    if (hello_.kind != ResponseKind::hello) {
      throw AdapterError("adapter handshake failed: " + (hello_.message.empty() ? std::string(to_string(hello_.kind)) : hello_.message));
    }
  }

  ~SubprocessAdapter() override { shutdown(); }
  SubprocessAdapter(const SubprocessAdapter&) = delete;
  SubprocessAdapter& operator=(const SubprocessAdapter&) = delete;

  AdapterResponse hello() override { return hello_; }

  AdapterResponse detect_person(const AdapterImage& image) override {
    json req = image_fields(image);
    req["type"] = "detect_person";
    return request(req, image.size);
  }

  AdapterResponse track_begin(const std::string& session_id, const AdapterImage& image, PixelCoord prompt) override {
    json req = image_fields(image);
    req["type"] = "track_begin";
    req["session_id"] = session_id;
    req["point_prompt"] = json{{"u", prompt.u}, {"v", prompt.v}};
    return request(req, image.size);
  }

  AdapterResponse track_next(const std::string& session_id, const AdapterImage& image) override {
    json req = image_fields(image);
    req["type"] = "track_next";
    req["session_id"] = session_id;
    return request(req, image.size);
  }

  AdapterResponse track_end(const std::string& session_id) override {
    return request(json{{"type", "track_end"}, {"session_id", session_id}}, std::nullopt);
  }

  /// Sends a raw line and returns the raw response line. For protocol tests.
  std::string raw_exchange(const std::string& line) {
    write_line(line);
    return read_line();
  }

 private:
  void spawn() {
    int in_pipe[2];   // parent -> child
    int out_pipe[2];  // child -> parent
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) throw AdapterError(std::string("pipe: ") + std::strerror(errno));
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
    posix_spawn_file_actions_addclose(&actions, in_pipe[1]);
    posix_spawn_file_actions_addclose(&actions, out_pipe[0]);
    std::vector<char*> args;
    for (auto& a : argv_) args.push_back(a.data());
    args.push_back(nullptr);
    const int rc = posix_spawnp(&pid_, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    close(in_pipe[0]);
    close(out_pipe[1]);
    if (rc != 0) {
      close(in_pipe[1]);
      close(out_pipe[0]);
      pid_ = -1;
      throw AdapterError("cannot start adapter '" + argv_[0] + "': " + std::strerror(rc));
    }
    fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
    fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
    to_child_ = fdopen(in_pipe[1], "w");
    from_child_ = fdopen(out_pipe[0], "r");
    if (!to_child_ || !from_child_) throw AdapterError("fdopen failed");
  }

  void shutdown() {
    if (to_child_) {
      std::fclose(to_child_);
      to_child_ = nullptr;
    }
    if (from_child_) {
      std::fclose(from_child_);
      from_child_ = nullptr;
    }
    if (pid_ > 0) {
      int status = 0;
      waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

  void write_line(const std::string& line) {
    if (!to_child_) throw AdapterError("adapter is not running");
    if (std::fputs(line.c_str(), to_child_) < 0 || std::fputc('\n', to_child_) == EOF || std::fflush(to_child_) != 0) {
      throw AdapterError("adapter closed its input");
    }
  }

  std::string read_line() {
    if (!from_child_) throw AdapterError("adapter is not running");
    std::string line;
    int c;
    while ((c = std::fgetc(from_child_)) != EOF) {
      if (c == '\n') return line;
      line.push_back(static_cast<char>(c));
    }
    throw AdapterError("adapter exited without responding");
  }

  AdapterResponse request(json req, std::optional<ImageSize> expected) {
    const long long id = next_id_++;
    req["id"] = id;
    write_line(req.dump());
    const std::string line = read_line();
    json resp;
    try {
      resp = json::parse(line);
    } catch (const json::exception& e) {
      throw AdapterError(std::string("adapter sent malformed JSON: ") + e.what());
    }
    if (resp.contains("id") && resp["id"] != id) throw AdapterError("adapter response out of order");
    const std::string type = resp.value("type", "");
    AdapterResponse r;
    if (type == "hello") {
      r.kind = ResponseKind::hello;
      if (resp.value("protocol", 0) != kProtocolVersion) {
        return AdapterResponse::of(ResponseKind::error, "adapter speaks protocol " + resp.value("protocol", json(0)).dump());
      }
      r.capabilities = resp.value("capabilities", std::vector<std::string>{});
      r.name = resp.value("name", "");
    } else if (type == "mask") {
      r.kind = ResponseKind::mask;
      if (resp.contains("rle")) {
        const json& rle = resp["rle"];
        r.mask = rle_decode({rle.at("width").get<int>(), rle.at("height").get<int>()},
                            rle.at("counts").get<std::vector<long long>>());
      } else {
        r.mask = read_mask_png(resp.at("path").get<std::string>());
      }
      if (expected && r.mask->size() != *expected) {
        throw AdapterError("adapter mask is " + to_string(r.mask->size()) + ", image is " + to_string(*expected));
      }
      r.area_px = r.mask->count();
    } else if (type == "no_detection") {
      r.kind = ResponseKind::no_detection;
    } else if (type == "track_lost") {
      r.kind = ResponseKind::track_lost;
    } else if (type == "ack") {
      r.kind = ResponseKind::ack;
    } else if (type == "error") {
      r.kind = ResponseKind::error;
      r.message = resp.value("message", "");
    } else {
      throw AdapterError("adapter sent unknown response type '" + type + "'");
    }
    return r;
  }

  std::vector<std::string> argv_;
  pid_t pid_ = -1;
  std::FILE* to_child_ = nullptr;
  std::FILE* from_child_ = nullptr;
  long long next_id_ = 0;
  AdapterResponse hello_;
};

/// Parses an endpoint spec: "oracle:<scene.json>" runs the analytic oracle in
/// process; "exec:<command> [args...]" spawns a protocol server.
inline std::unique_ptr<SegmentationAdapter> make_adapter(const std::string& endpoint) {
  const auto colon = endpoint.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("adapter endpoint must be oracle:<scene> or exec:<command>");
  const std::string scheme = endpoint.substr(0, colon);
  const std::string rest = endpoint.substr(colon + 1);
  if (scheme == "oracle") return std::make_unique<OracleAdapter>(scene_from_json(read_json_file(rest)));
  if (scheme == "exec") {
    std::istringstream ss(rest);
    std::vector<std::string> argv;
    for (std::string tok; ss >> tok;) argv.push_back(tok);
    return std::make_unique<SubprocessAdapter>(std::move(argv));
  }
  throw std::invalid_argument("unknown adapter scheme '" + scheme + "'");
}

}  // namespace omnimask

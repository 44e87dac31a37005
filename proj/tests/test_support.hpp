#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <unistd.h>
#include <limits>
#include <stdexcept>

#include "omnimask/image.hpp"
#include "omnimask/random.hpp"

namespace omnimask::testing {

/// PSNR (dB) between float images with peak value 1, optionally restricted to
/// pixels where `valid` is set. Identical inputs give +infinity.
inline double psnr(const ImageF& a, const ImageF& b, const MaskBuffer* valid = nullptr) {
  if (a.size() != b.size() || a.channels() != b.channels()) throw std::invalid_argument("psnr: shape mismatch");
  double se = 0.0;
  long long n = 0;
  const int ch = a.channels();
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      if (valid && !valid->get(x, y)) continue;
      for (int c = 0; c < ch; ++c) {
        const double d = static_cast<double>(a.at(x, y, c)) - b.at(x, y, c);
        se += d * d;
        ++n;
      }
    }
  if (n == 0) throw std::invalid_argument("psnr: no pixels compared");
  const double mse = se / n;
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

inline MaskBuffer random_mask(Rng& rng, ImageSize size, double density) {
  MaskBuffer m(size);
  for (int y = 0; y < size.height; ++y)
    for (int x = 0; x < size.width; ++x) m.set(x, y, rng.uniform() < density);
  return m;
}

/// Reference dilation: direct scan of the (2r+1)^2 window.
inline MaskBuffer brute_force_dilate(const MaskBuffer& m, int r) {
  MaskBuffer out(m.size());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      bool on = false;
      for (int dy = -r; dy <= r && !on; ++dy)
        for (int dx = -r; dx <= r && !on; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx >= 0 && yy >= 0 && xx < m.width() && yy < m.height()) on = m.get(xx, yy);
        }
      out.set(x, y, on);
    }
  return out;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("omnimask-test-" + std::to_string(::getpid()) + "-" + tag + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace omnimask::testing

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "omnimask/camera_models.hpp"

namespace omnimask {

/// Row-major H x W x C sample grid. Sample type is uint8_t or float.
template <typename T>
class Image {
  static_assert(std::is_same_v<T, std::uint8_t> || std::is_same_v<T, float>,
                "Image samples are 8-bit or 32-bit float");

 public:
  using value_type = T;

  Image() = default;
  Image(ImageSize size, int channels, T fill = T{}) : size_(size), channels_(channels) {
    if (size.width < 1 || size.height < 1) throw std::invalid_argument("Image: size must be positive");
    if (channels != 1 && channels != 3 && channels != 4) throw std::invalid_argument("Image: channels must be 1, 3 or 4");
    data_.assign(static_cast<std::size_t>(size.pixel_count()) * channels, fill);
  }
  Image(ImageSize size, int channels, std::vector<T> samples) : Image(size, channels) {
    if (samples.size() != data_.size()) throw std::invalid_argument("Image: sample count does not match W*H*C");
    if constexpr (std::is_same_v<T, float>) {
      for (float s : samples)
        if (!std::isfinite(s)) throw std::invalid_argument("Image: float samples must be finite");
    }
    data_ = std::move(samples);
  }

  const ImageSize& size() const { return size_; }
  int width() const { return size_.width; }
  int height() const { return size_.height; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  T* row(int y) { return data_.data() + static_cast<std::size_t>(y) * size_.width * channels_; }
  const T* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * size_.width * channels_; }

  std::span<T> samples() { return data_; }
  std::span<const T> samples() const { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * size_.width + x) * channels_ + c;
  }

  ImageSize size_{};
  int channels_ = 0;
  std::vector<T> data_;
};

using ImageU8 = Image<std::uint8_t>;
using ImageF = Image<float>;

/// H x W binary grid; each cell holds 0 or 1.
class MaskBuffer {
 public:
  MaskBuffer() = default;
  explicit MaskBuffer(ImageSize size, bool value = false) : size_(size) {
    if (size.width < 1 || size.height < 1) throw std::invalid_argument("MaskBuffer: size must be positive");
    bits_.assign(static_cast<std::size_t>(size.pixel_count()), value ? 1 : 0);
  }

  const ImageSize& size() const { return size_; }
  int width() const { return size_.width; }
  int height() const { return size_.height; }

  bool get(int x, int y) const { return bits_[static_cast<std::size_t>(y) * size_.width + x] != 0; }
  void set(int x, int y, bool v = true) { bits_[static_cast<std::size_t>(y) * size_.width + x] = v ? 1 : 0; }

  std::uint8_t* row(int y) { return bits_.data() + static_cast<std::size_t>(y) * size_.width; }
  const std::uint8_t* row(int y) const { return bits_.data() + static_cast<std::size_t>(y) * size_.width; }

  std::span<std::uint8_t> bits() { return bits_; }
  std::span<const std::uint8_t> bits() const { return bits_; }

  long long count() const {
    return static_cast<long long>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }

  bool operator==(const MaskBuffer&) const = default;

 private:
  ImageSize size_{};
  std::vector<std::uint8_t> bits_;
};

// ---------------------------------------------------------------------------
// Mask algebra

inline void require_same_size(const MaskBuffer& a, const MaskBuffer& b) {
  if (a.size() != b.size()) throw std::invalid_argument("mask size mismatch: " + to_string(a.size()) + " vs " + to_string(b.size()));
}

inline MaskBuffer mask_and(const MaskBuffer& a, const MaskBuffer& b) {
  require_same_size(a, b);
  MaskBuffer out(a.size());
  auto o = out.bits();
  auto x = a.bits();
  auto y = b.bits();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] & y[i];
  return out;
}

inline MaskBuffer mask_or(const MaskBuffer& a, const MaskBuffer& b) {
  require_same_size(a, b);
  MaskBuffer out(a.size());
  auto o = out.bits();
  auto x = a.bits();
  auto y = b.bits();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] | y[i];
  return out;
}

/// a AND NOT b
inline MaskBuffer mask_and_not(const MaskBuffer& a, const MaskBuffer& b) {
  require_same_size(a, b);
  MaskBuffer out(a.size());
  auto o = out.bits();
  auto x = a.bits();
  auto y = b.bits();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] & (y[i] ^ 1u);
  return out;
}

struct OverlapCounts {
  long long intersection = 0;
  long long uni = 0;
};

inline OverlapCounts mask_overlap(const MaskBuffer& a, const MaskBuffer& b) {
  require_same_size(a, b);
  OverlapCounts c;
  auto x = a.bits();
  auto y = b.bits();
  for (std::size_t i = 0; i < x.size(); ++i) {
    c.intersection += x[i] & y[i];
    c.uni += x[i] | y[i];
  }
  return c;
}

/// Intersection over union; two empty masks score 1.
inline double mask_iou(const MaskBuffer& a, const MaskBuffer& b) {
  const OverlapCounts c = mask_overlap(a, b);
  return c.uni == 0 ? 1.0 : static_cast<double>(c.intersection) / static_cast<double>(c.uni);
}

// ---------------------------------------------------------------------------
// Conversions

inline ImageF to_float(const ImageU8& img) {
  ImageF out(img.size(), img.channels());
  auto src = img.samples();
  auto dst = out.samples();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<float>(src[i]) / 255.0f;
  return out;
}

inline ImageU8 to_u8(const ImageF& img) {
  ImageU8 out(img.size(), img.channels());
  auto src = img.samples();
  auto dst = out.samples();
  for (std::size_t i = 0; i < src.size(); ++i)
    dst[i] = static_cast<std::uint8_t>(std::lround(std::clamp(src[i], 0.0f, 1.0f) * 255.0f));
  return out;
}

/// 1 where any channel of the 8-bit image is >= `threshold`.
inline MaskBuffer mask_from_image(const ImageU8& img, std::uint8_t threshold = 128) {
  MaskBuffer m(img.size());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      bool on = false;
      for (int c = 0; c < img.channels(); ++c) on = on || img.at(x, y, c) >= threshold;
      m.set(x, y, on);
    }
  return m;
}

/// Single-channel 8-bit rendering: 1 -> 255, 0 -> 0.
inline ImageU8 mask_to_image(const MaskBuffer& m) {
  ImageU8 out(m.size(), 1);
  auto src = m.bits();
  auto dst = out.samples();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? 255 : 0;
  return out;
}

/// Box-filter downsampling by an integer factor. Trailing rows/columns that
/// do not fill a whole block are dropped.
template <typename T>
Image<T> downsample_box(const Image<T>& img, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
  if (factor == 1) return img;
  const ImageSize out_size{img.width() / factor, img.height() / factor};
  if (out_size.width < 1 || out_size.height < 1) throw std::invalid_argument("downsample factor larger than the image");
  Image<T> out(out_size, img.channels());
  const int ch = img.channels();
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  std::vector<double> acc(static_cast<std::size_t>(out_size.width) * ch);
  for (int oy = 0; oy < out_size.height; ++oy) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int dy = 0; dy < factor; ++dy) {
      const T* src = img.row(oy * factor + dy);
      for (int ox = 0; ox < out_size.width; ++ox)
        for (int dx = 0; dx < factor; ++dx)
          for (int c = 0; c < ch; ++c) acc[ox * ch + c] += src[(ox * factor + dx) * ch + c];
    }
    T* dst = out.row(oy);
    for (std::size_t i = 0; i < acc.size(); ++i) {
      if constexpr (std::is_same_v<T, float>) {
        dst[i] = static_cast<float>(acc[i] * inv);
      } else {
        dst[i] = static_cast<T>(std::lround(acc[i] * inv));
      }
    }
  }
  return out;
}

}  // namespace omnimask

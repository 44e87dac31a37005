#pragma once

// Lossless 8-bit PNG read/write through libpng. Writers emit no time or text
// chunks, so identical pixels always give identical bytes.

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "omnimask/image.hpp"

namespace omnimask {

class IoError : public std::runtime_error {
 public:
  IoError(const std::filesystem::path& path, const std::string& what)
      : std::runtime_error(path.string() + ": " + what), path_(path) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] inline void png_error_fn(png_structp png, png_const_charp msg) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what) *what = msg;
  png_longjmp(png, 1);
}
inline void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace detail

/// Reads an 8-bit image with 1, 3 or 4 channels. Palette, gray+alpha and
/// 16-bit inputs are converted (gray+alpha becomes RGBA).
inline ImageU8 read_png(const std::filesystem::path& path) {
  detail::FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError(path, "cannot open for reading");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) throw IoError(path, "not a PNG file");

  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_fn, detail::png_warning_fn);
  if (!png) throw IoError(path, "libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  ImageU8 img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path, "decode failed: " + err);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3 && channels != 4) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path, "unsupported channel count " + std::to_string(channels));
  }
  img = ImageU8({width, height}, channels);
  rows.resize(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) rows[y] = img.row(y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

/// `compression` is the zlib level (0-9); it changes file size, never pixels.
inline void write_png(const std::filesystem::path& path, const ImageU8& img, int compression = 6) {
  if (img.empty()) throw IoError(path, "refusing to write an empty image");
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.parent_path(), "cannot create directory: " + ec.message());
  }
  // Write to a sibling temp file and rename, so readers never see partial files.
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    detail::FilePtr file(std::fopen(tmp.c_str(), "wb"));
    if (!file) throw IoError(path, "cannot open for writing");
    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_fn, detail::png_warning_fn);
    if (!png) throw IoError(path, "libpng initialization failed");
    png_infop info = png_create_info_struct(png);
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height()));
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw IoError(path, "encode failed: " + err);
    }
    png_init_io(png, file.get());
    const int color = img.channels() == 1 ? PNG_COLOR_TYPE_GRAY
                      : img.channels() == 3 ? PNG_COLOR_TYPE_RGB
                                            : PNG_COLOR_TYPE_RGBA;
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8, color,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, std::clamp(compression, 0, 9));
    png_write_info(png, info);
    for (int y = 0; y < img.height(); ++y) rows[y] = const_cast<png_bytep>(img.row(y));
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fflush(file.get()) != 0) throw IoError(path, "write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(path, "cannot move temp file into place: " + ec.message());
}

inline MaskBuffer read_mask_png(const std::filesystem::path& path) { return mask_from_image(read_png(path)); }

inline void write_mask_png(const std::filesystem::path& path, const MaskBuffer& m) { write_png(path, mask_to_image(m)); }

/// Dimensions from the IHDR chunk without decoding pixels.
inline ImageSize png_dimensions(const std::filesystem::path& path) {
  detail::FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError(path, "cannot open for reading");
  unsigned char head[24];
  if (std::fread(head, 1, 24, file.get()) != 24 || png_sig_cmp(head, 0, 8) != 0) throw IoError(path, "not a PNG file");
  auto be32 = [&](int off) {
    return static_cast<int>((static_cast<unsigned>(head[off]) << 24) | (static_cast<unsigned>(head[off + 1]) << 16) |
                            (static_cast<unsigned>(head[off + 2]) << 8) | static_cast<unsigned>(head[off + 3]));
  };
  return {be32(16), be32(20)};
}

}  // namespace omnimask

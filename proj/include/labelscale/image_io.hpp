#pragma once

// 8-bit grayscale PGM (P5, maxval 255) and PNG readers/writers. PNG support
// needs libpng at link time (the labelscale CMake target provides it).

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "labelscale/errors.hpp"
#include "labelscale/raster.hpp"

namespace labelscale::io {

namespace fs = std::filesystem;

enum class ImageFormat { Pgm, Png };

inline bool has_image_extension(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".pgm" || ext == ".png";
}

inline ImageFormat format_for(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".png") return ImageFormat::Png;
  if (ext == ".pgm") return ImageFormat::Pgm;
  throw IoError(p.string(), "unsupported extension (expected .png or .pgm)");
}

inline std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes to a sibling temporary file, then renames over the target.
inline void write_bytes_atomic(const fs::path& path, std::span<const unsigned char> bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::random_device rd;
  const fs::path tmp = path.string() + ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw IoError(path.string(), "write failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError(path.string(), "rename failed: " + ec.message());
  }
}

inline void write_text_atomic(const fs::path& path, std::string_view text) {
  write_bytes_atomic(path, {reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

// ---- PGM ----

inline GrayImage decode_pgm(std::span<const unsigned char> bytes, const std::string& name = "<pgm>") {
  std::size_t pos = 0;
  const auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      if (std::isspace(bytes[pos])) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  const auto read_uint = [&]() -> std::size_t {
    skip_space_and_comments();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw IoError(name, "malformed PGM header");
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + static_cast<std::size_t>(bytes[pos++] - '0');
      if (v > (1u << 24)) throw IoError(name, "PGM header value too large");
    }
    return v;
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw IoError(name, "not a binary PGM (P5)");
  }
  pos = 2;
  const std::size_t w = read_uint();
  const std::size_t h = read_uint();
  const std::size_t maxval = read_uint();
  if (w == 0 || h == 0) throw IoError(name, "PGM has zero dimension");
  if (maxval != 255) throw IoError(name, "only maxval 255 PGM is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw IoError(name, "malformed PGM header");
  ++pos;
  if (bytes.size() - pos < w * h) throw IoError(name, "truncated PGM raster");
  std::vector<Intensity> samples(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                 bytes.begin() + static_cast<std::ptrdiff_t>(pos + w * h));
  return GrayImage(w, h, std::move(samples));
}

inline std::vector<unsigned char> encode_pgm(const GrayImage& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  out.insert(out.end(), img.samples().begin(), img.samples().end());
  return out;
}

// ---- PNG ----

namespace detail {

struct PngReadSource {
  std::span<const unsigned char> bytes;
  std::size_t pos = 0;
};

inline void png_error_fn(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err) *err = msg;
  png_longjmp(png, 1);
}

inline void png_warning_fn(png_structp, png_const_charp) {}

inline void png_read_fn(png_structp png, png_bytep out, png_size_t n) {
  auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
  if (src->bytes.size() - src->pos < n) png_error(png, "truncated PNG stream");
  std::memcpy(out, src->bytes.data() + src->pos, n);
  src->pos += n;
}

inline void png_write_fn(png_structp png, png_bytep data, png_size_t n) {
  auto* dst = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
  dst->insert(dst->end(), data, data + n);
}

inline void png_flush_fn(png_structp) {}

}  // namespace detail

inline bool is_png(std::span<const unsigned char> bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

/// Decodes any PNG to 8-bit gray (palette expanded, colour converted, alpha
/// and 16-bit depth stripped).
inline GrayImage decode_png(std::span<const unsigned char> bytes, const std::string& name = "<png>") {
  if (!is_png(bytes)) throw IoError(name, "not a PNG file");
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_fn,
                                           detail::png_warning_fn);
  if (!png) throw IoError(name, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError(name, "png_create_info_struct failed");
  }

  detail::PngReadSource src{bytes, 0};
  std::vector<Intensity> samples;
  std::vector<png_bytep> rows;
  png_uint_32 w = 0;
  png_uint_32 h = 0;
  // Everything with a destructor lives above the setjmp.
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(name, "PNG decode failed: " + err);
  }
  png_set_read_fn(png, &src, detail::png_read_fn);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  if (png_get_rowbytes(png, info) != w) png_error(png, "unexpected row layout after transforms");
  samples.resize(static_cast<std::size_t>(w) * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = samples.data() + static_cast<std::size_t>(y) * w;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return GrayImage(w, h, std::move(samples));
}

inline std::vector<unsigned char> encode_png(const GrayImage& img) {
  std::vector<unsigned char> out;
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, detail::png_error_fn,
                                            detail::png_warning_fn);
  if (!png) throw IoError("<png>", "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("<png>", "png_create_info_struct failed");
  }
  std::vector<png_bytep> rows(img.height());
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("<png>", "PNG encode failed: " + err);
  }
  png_set_write_fn(png, &out, detail::png_write_fn, detail::png_flush_fn);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()),
               8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < img.height(); ++y) {
    rows[y] = const_cast<png_bytep>(img.row(y).data());
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

// ---- dispatch ----

/// Reads a PGM or PNG file, detected from its magic bytes.
inline GrayImage read_image(const fs::path& path) {
  const auto bytes = read_bytes(path);
  if (is_png(bytes)) return decode_png(bytes, path.string());
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes, path.string());
  throw IoError(path.string(), "unrecognised image format (expected PNG or binary PGM)");
}

/// Writes atomically; the format follows the file extension.
inline void write_image(const fs::path& path, const GrayImage& img) {
  const auto bytes = format_for(path) == ImageFormat::Png ? encode_png(img) : encode_pgm(img);
  write_bytes_atomic(path, bytes);
}

/// Image files (.png/.pgm) directly inside `dir`, sorted by path.
inline std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string(), "not a directory");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && has_image_extension(entry.path())) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace labelscale::io

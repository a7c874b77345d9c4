#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "labelscale/errors.hpp"
#include "labelscale/raster.hpp"

namespace labelscale {

enum class KernelKind { Nearest, Bicubic, Lanczos3 };

inline std::string_view to_string(KernelKind k) noexcept {
  switch (k) {
    case KernelKind::Nearest: return "nearest";
    case KernelKind::Bicubic: return "bicubic";
    case KernelKind::Lanczos3: return "lanczos3";
  }
  return "unknown";
}

inline std::optional<KernelKind> parse_kernel(std::string_view name) noexcept {
  if (name == "nearest") return KernelKind::Nearest;
  if (name == "bicubic") return KernelKind::Bicubic;
  if (name == "lanczos3") return KernelKind::Lanczos3;
  return std::nullopt;
}

/// Only nearest neighbour copies source samples; the other kernels synthesize
/// new intensities.
constexpr bool is_extra_pixel(KernelKind k) noexcept { return k != KernelKind::Nearest; }

struct ResizeSpec {
  std::size_t src_width = 1;
  std::size_t src_height = 1;
  std::size_t dst_width = 1;
  std::size_t dst_height = 1;
  KernelKind kernel = KernelKind::Nearest;

  static ResizeSpec from(const GrayImage& src, std::size_t dst_width, std::size_t dst_height,
                         KernelKind kernel) {
    ResizeSpec spec{src.width(), src.height(), dst_width, dst_height, kernel};
    spec.validate();
    return spec;
  }

  void validate() const {
    if (src_width == 0 || src_height == 0 || dst_width == 0 || dst_height == 0) {
      throw ValidationError("resize dimensions must be >= 1");
    }
  }

  double scale_x() const noexcept {
    return static_cast<double>(src_width) / static_cast<double>(dst_width);
  }
  double scale_y() const noexcept {
    return static_cast<double>(src_height) / static_cast<double>(dst_height);
  }

  template <typename T>
  void check_source(const Image<T>& img) const {
    validate();
    if (img.width() != src_width || img.height() != src_height) {
      throw DimensionMismatch("resize source is " + std::to_string(img.width()) + "x" +
                              std::to_string(img.height()) + ", spec expects " +
                              std::to_string(src_width) + "x" + std::to_string(src_height));
    }
  }
};

/// Half-pixel-centre mapping from a destination index to a source coordinate.
constexpr double map_coord(std::ptrdiff_t dst_index, double scale) noexcept {
  return (static_cast<double>(dst_index) + 0.5) * scale - 0.5;
}

/// Keys cubic convolution kernel, a = -0.5.
inline double cubic_weight(double t) noexcept {
  constexpr double a = -0.5;
  const double x = std::abs(t);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

inline double sinc(double x) noexcept {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

/// Three-lobed Lanczos window sinc(t) * sinc(t / 3), zero outside |t| < 3.
inline double lanczos3_weight(double t) noexcept {
  if (t == 0.0) return 1.0;
  if (std::abs(t) >= 3.0) return 0.0;
  return sinc(t) * sinc(t / 3.0);
}

/// Taps per axis: 4 for bicubic (16 samples in 2-D), 6 for Lanczos-3 (36).
constexpr std::size_t tap_count(KernelKind k) noexcept {
  switch (k) {
    case KernelKind::Bicubic: return 4;
    case KernelKind::Lanczos3: return 6;
    case KernelKind::Nearest: return 1;
  }
  return 1;
}

inline double kernel_weight(KernelKind k, double t) noexcept {
  switch (k) {
    case KernelKind::Bicubic: return cubic_weight(t);
    case KernelKind::Lanczos3: return lanczos3_weight(t);
    case KernelKind::Nearest: return std::abs(t) < 0.5 ? 1.0 : 0.0;
  }
  return 0.0;
}

/// Source indices (already edge-clamped) and renormalized weights that
/// produce one destination sample along one axis.
struct TapSet {
  static constexpr std::size_t kMaxTaps = 6;
  std::array<std::size_t, kMaxTaps> index{};
  std::array<double, kMaxTaps> weight{};
  std::size_t count = 0;
};

inline TapSet compute_taps(double center, std::size_t src_len, KernelKind kernel) {
  const std::size_t n = tap_count(kernel);
  const auto first =
      static_cast<std::ptrdiff_t>(std::floor(center)) - static_cast<std::ptrdiff_t>(n / 2 - 1);
  const auto last_index = static_cast<std::ptrdiff_t>(src_len) - 1;

  TapSet taps;
  taps.count = n;
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::ptrdiff_t j = first + static_cast<std::ptrdiff_t>(k);
    taps.index[k] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, last_index));
    taps.weight[k] = kernel_weight(kernel, center - static_cast<double>(j));
    sum += taps.weight[k];
  }
  for (std::size_t k = 0; k < n; ++k) taps.weight[k] /= sum;
  return taps;
}

inline std::vector<TapSet> axis_taps(std::size_t src_len, std::size_t dst_len, KernelKind kernel) {
  const double scale = static_cast<double>(src_len) / static_cast<double>(dst_len);
  std::vector<TapSet> taps;
  taps.reserve(dst_len);
  for (std::size_t i = 0; i < dst_len; ++i) {
    taps.push_back(compute_taps(map_coord(static_cast<std::ptrdiff_t>(i), scale), src_len, kernel));
  }
  return taps;
}

enum class Axis { X, Y };

/// One separable pass: resamples `img` along `axis` to `new_len` samples.
inline FloatImage resize_axis(const FloatImage& img, std::size_t new_len, Axis axis,
                              KernelKind kernel) {
  if (!is_extra_pixel(kernel)) {
    throw UnsupportedConfiguration("resize_axis needs bicubic or lanczos3");
  }
  if (new_len == 0) throw ValidationError("resize length must be >= 1");

  if (axis == Axis::X) {
    const auto taps = axis_taps(img.width(), new_len, kernel);
    FloatImage out(new_len, img.height());
    for (std::size_t y = 0; y < img.height(); ++y) {
      const auto src = img.row(y);
      auto dst = out.row(y);
      for (std::size_t x = 0; x < new_len; ++x) {
        const TapSet& t = taps[x];
        double acc = 0.0;
        for (std::size_t k = 0; k < t.count; ++k) acc += t.weight[k] * src[t.index[k]];
        dst[x] = acc;
      }
    }
    return out;
  }

  const auto taps = axis_taps(img.height(), new_len, kernel);
  FloatImage out(img.width(), new_len);
  for (std::size_t y = 0; y < new_len; ++y) {
    const TapSet& t = taps[y];
    auto dst = out.row(y);
    for (std::size_t k = 0; k < t.count; ++k) {
      const auto src = img.row(t.index[k]);
      const double w = t.weight[k];
      for (std::size_t x = 0; x < img.width(); ++x) dst[x] += w * src[x];
    }
  }
  return out;
}

/// Bicubic or Lanczos-3 resize, horizontal pass first. The result is left
/// unclamped so that overshoot around edges stays visible.
inline FloatImage resize_kernel(const FloatImage& img, const ResizeSpec& spec) {
  spec.check_source(img);
  if (!is_extra_pixel(spec.kernel)) {
    throw UnsupportedConfiguration("resize_kernel needs bicubic or lanczos3");
  }
  const FloatImage horizontal = resize_axis(img, spec.dst_width, Axis::X, spec.kernel);
  return resize_axis(horizontal, spec.dst_height, Axis::Y, spec.kernel);
}

inline FloatImage resize_kernel(const GrayImage& img, const ResizeSpec& spec) {
  return resize_kernel(to_float(img), spec);
}

/// Nearest neighbour with round-half-up on the mapped coordinate.
inline GrayImage resize_nearest(const GrayImage& img, const ResizeSpec& spec) {
  spec.check_source(img);
  if (spec.kernel != KernelKind::Nearest) {
    throw UnsupportedConfiguration("resize_nearest called with kernel " +
                                   std::string(to_string(spec.kernel)));
  }
  const auto pick = [](std::size_t dst_len, std::size_t src_len, double scale) {
    std::vector<std::size_t> idx(dst_len);
    const auto last = static_cast<std::ptrdiff_t>(src_len) - 1;
    for (std::size_t i = 0; i < dst_len; ++i) {
      const double c = map_coord(static_cast<std::ptrdiff_t>(i), scale);
      const auto j = static_cast<std::ptrdiff_t>(std::floor(c + 0.5));
      idx[i] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, last));
    }
    return idx;
  };
  const auto xs = pick(spec.dst_width, spec.src_width, spec.scale_x());
  const auto ys = pick(spec.dst_height, spec.src_height, spec.scale_y());

  GrayImage out(spec.dst_width, spec.dst_height);
  for (std::size_t y = 0; y < spec.dst_height; ++y) {
    const auto src = img.row(ys[y]);
    auto dst = out.row(y);
    for (std::size_t x = 0; x < spec.dst_width; ++x) dst[x] = src[xs[x]];
  }
  return out;
}

inline Intensity quantize_sample(double v) noexcept {
  const double r = std::floor(v + 0.5);
  if (r <= 0.0) return 0;
  if (r >= 255.0) return 255;
  return static_cast<Intensity>(r);
}

/// Round half up, then clamp to [0, 255].
inline GrayImage quantize(const FloatImage& f) {
  GrayImage out(f.width(), f.height());
  const auto in = f.samples();
  auto so = out.samples();
  for (std::size_t i = 0; i < in.size(); ++i) so[i] = quantize_sample(in[i]);
  return out;
}

/// Intensity-image resize for any kernel: nearest copies, the others quantize.
inline GrayImage resize_image(const GrayImage& img, const ResizeSpec& spec) {
  if (spec.kernel == KernelKind::Nearest) return resize_nearest(img, spec);
  return quantize(resize_kernel(img, spec));
}

}  // namespace labelscale

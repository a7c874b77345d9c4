#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "labelscale/errors.hpp"

namespace labelscale {

using Intensity = std::uint8_t;

/// Row-major 2-D raster. Width and height are always >= 1 and the sample
/// buffer always holds exactly width * height values.
template <typename T>
class Image {
 public:
  using value_type = T;

  Image(std::size_t width, std::size_t height, T fill = T{})
      : width_(width), height_(height) {
    check_shape();
    samples_.assign(width * height, fill);
  }

  Image(std::size_t width, std::size_t height, std::vector<T> samples)
      : width_(width), height_(height), samples_(std::move(samples)) {
    check_shape();
    if (samples_.size() != width_ * height_) {
      throw DimensionMismatch("sample count " + std::to_string(samples_.size()) +
                              " does not match " + std::to_string(width_) + "x" +
                              std::to_string(height_));
    }
    if constexpr (std::is_floating_point_v<T>) {
      for (const T v : samples_) {
        if (!std::isfinite(v)) throw ValidationError("non-finite sample in float image");
      }
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return samples_.size(); }

  T& operator()(std::size_t x, std::size_t y) noexcept { return samples_[y * width_ + x]; }
  const T& operator()(std::size_t x, std::size_t y) const noexcept {
    return samples_[y * width_ + x];
  }

  /// Edge-replicating accessor: coordinates outside the grid are clamped.
  const T& clamped(std::ptrdiff_t x, std::ptrdiff_t y) const noexcept {
    const auto cx = std::clamp<std::ptrdiff_t>(x, 0, static_cast<std::ptrdiff_t>(width_) - 1);
    const auto cy = std::clamp<std::ptrdiff_t>(y, 0, static_cast<std::ptrdiff_t>(height_) - 1);
    return samples_[static_cast<std::size_t>(cy) * width_ + static_cast<std::size_t>(cx)];
  }

  std::span<T> samples() noexcept { return samples_; }
  std::span<const T> samples() const noexcept { return samples_; }

  std::span<T> row(std::size_t y) noexcept { return {samples_.data() + y * width_, width_}; }
  std::span<const T> row(std::size_t y) const noexcept {
    return {samples_.data() + y * width_, width_};
  }

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }
  template <typename U>
  bool same_shape(const Image<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  void check_shape() const {
    if (width_ == 0 || height_ == 0) {
      throw ValidationError("image dimensions must be >= 1");
    }
  }

  std::size_t width_;
  std::size_t height_;
  std::vector<T> samples_;
};

using GrayImage = Image<Intensity>;
using FloatImage = Image<double>;

template <typename A, typename B>
void require_same_shape(const Image<A>& a, const Image<B>& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw DimensionMismatch(std::string(what) + ": " + std::to_string(a.width()) + "x" +
                            std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                            "x" + std::to_string(b.height()));
  }
}

inline FloatImage to_float(const GrayImage& img) {
  std::vector<double> out(img.samples().begin(), img.samples().end());
  return FloatImage(img.width(), img.height(), std::move(out));
}

/// Strictly ascending list of at least two class labels.
class LabelSet {
 public:
  LabelSet(std::initializer_list<Intensity> labels) : LabelSet(std::vector<Intensity>(labels)) {}

  explicit LabelSet(std::vector<Intensity> labels) : labels_(std::move(labels)) {
    if (labels_.size() < 2) throw ValidationError("label set needs at least two labels");
    for (std::size_t i = 1; i < labels_.size(); ++i) {
      if (labels_[i - 1] >= labels_[i]) {
        throw ValidationError("label set must be strictly ascending");
      }
    }
  }

  /// {0, 128, 255}: background, myocardium-like middle class, bright class.
  static LabelSet tri_class() { return LabelSet{0, 128, 255}; }

  std::span<const Intensity> values() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  Intensity operator[](std::size_t i) const noexcept { return labels_[i]; }
  Intensity lowest() const noexcept { return labels_.front(); }

  bool contains(Intensity v) const noexcept {
    return std::binary_search(labels_.begin(), labels_.end(), v);
  }

  /// Position of `v` in the set, or size() if absent.
  std::size_t index_of(Intensity v) const noexcept {
    const auto it = std::lower_bound(labels_.begin(), labels_.end(), v);
    return (it != labels_.end() && *it == v) ? static_cast<std::size_t>(it - labels_.begin())
                                             : labels_.size();
  }

  bool is_tri_class() const noexcept { return *this == tri_class(); }

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::vector<Intensity> labels_;
};

/// Label image plus the label set it is supposed to draw from. Canonicity is
/// a checked property, not an invariant.
struct LabelMask {
  GrayImage image;
  LabelSet labels = LabelSet::tri_class();

  bool is_canonical() const {
    return std::all_of(image.samples().begin(), image.samples().end(),
                       [&](Intensity v) { return labels.contains(v); });
  }
};

/// Label value -> pixel count. Only non-empty bins are stored.
class ClassHistogram {
 public:
  ClassHistogram() = default;

  void add(Intensity label, std::size_t count = 1) {
    if (count != 0) bins_[label] += count;
  }

  const std::map<Intensity, std::size_t>& bins() const noexcept { return bins_; }
  std::size_t bin_count() const noexcept { return bins_.size(); }

  std::size_t count(Intensity label) const {
    const auto it = bins_.find(label);
    return it == bins_.end() ? 0 : it->second;
  }

  std::size_t total() const noexcept {
    std::size_t sum = 0;
    for (const auto& [label, n] : bins_) sum += n;
    return sum;
  }

  std::vector<Intensity> labels() const {
    std::vector<Intensity> out;
    out.reserve(bins_.size());
    for (const auto& [label, n] : bins_) out.push_back(label);
    return out;
  }

  /// True when every stored label is also present in `other`.
  bool labels_subset_of(const ClassHistogram& other) const {
    return std::all_of(bins_.begin(), bins_.end(),
                       [&](const auto& bin) { return other.count(bin.first) > 0; });
  }

  friend bool operator==(const ClassHistogram&, const ClassHistogram&) = default;

 private:
  std::map<Intensity, std::size_t> bins_;
};

inline ClassHistogram class_histogram(const GrayImage& img) {
  std::array<std::size_t, 256> counts{};
  for (const Intensity v : img.samples()) ++counts[v];
  ClassHistogram hist;
  for (std::size_t v = 0; v < counts.size(); ++v) {
    hist.add(static_cast<Intensity>(v), counts[v]);
  }
  return hist;
}

/// 3x3 median with edge replication at the borders.
inline GrayImage median3x3(const GrayImage& img) {
  GrayImage out(img.width(), img.height());
  std::array<Intensity, 9> window{};
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      std::size_t k = 0;
      for (std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
        for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
          window[k++] = img.clamped(static_cast<std::ptrdiff_t>(x) + dx,
                                    static_cast<std::ptrdiff_t>(y) + dy);
        }
      }
      std::sort(window.begin(), window.end());
      out(x, y) = window[4];
    }
  }
  return out;
}

/// Per-pixel max(a - b, 0).
inline GrayImage subtract(const GrayImage& a, const GrayImage& b) {
  require_same_shape(a, b, "subtract");
  GrayImage out(a.width(), a.height());
  const auto sa = a.samples();
  const auto sb = b.samples();
  auto so = out.samples();
  for (std::size_t i = 0; i < sa.size(); ++i) {
    so[i] = sa[i] > sb[i] ? static_cast<Intensity>(sa[i] - sb[i]) : Intensity{0};
  }
  return out;
}

/// Keeps pixels equal to `label`, zeroes everything else.
inline GrayImage extract_class(const GrayImage& mask, Intensity label) {
  GrayImage out(mask.width(), mask.height());
  const auto in = mask.samples();
  auto so = out.samples();
  for (std::size_t i = 0; i < in.size(); ++i) so[i] = in[i] == label ? label : Intensity{0};
  return out;
}

}  // namespace labelscale

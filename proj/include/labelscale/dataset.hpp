#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "labelscale/errors.hpp"
#include "labelscale/image_io.hpp"
#include "labelscale/maskfilter.hpp"
#include "labelscale/raster.hpp"
#include "labelscale/resample.hpp"

namespace labelscale {

namespace fs = std::filesystem;

struct SamplePair {
  std::string id;
  GrayImage image;
  LabelMask mask;
};

/// mt19937_64 output is fully specified by the standard; the distribution
/// helpers below are written out so that shuffles and draws are identical
/// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound); Lemire's multiply-and-reject.
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    __extension__ using u128 = unsigned __int128;
    u128 m = u128(engine_()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = u128(engine_()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

// ---- scanning ----

struct ScanResult {
  std::vector<SamplePair> pairs;
  std::vector<std::string> unpaired;  // paths of files without a partner
  std::vector<std::string> warnings;  // non-canonical masks etc.
};

inline std::map<std::string, fs::path> images_by_stem(const fs::path& dir) {
  std::map<std::string, fs::path> out;
  for (const auto& p : io::list_images(dir)) {
    const auto [it, inserted] = out.emplace(p.stem().string(), p);
    if (!inserted) {
      throw IoError(p.string(), "duplicate stem '" + it->first + "' in " + dir.string());
    }
  }
  return out;
}

/// Pairs images and masks by file stem, in lexicographic stem order.
/// Unpaired files abort the scan unless `allow_unpaired` is set.
inline ScanResult scan_pairs(const fs::path& image_dir, const fs::path& mask_dir,
                             const LabelSet& labels = LabelSet::tri_class(),
                             bool allow_unpaired = false) {
  const auto images = images_by_stem(image_dir);
  const auto masks = images_by_stem(mask_dir);

  ScanResult result;
  for (const auto& [stem, path] : images) {
    if (!masks.contains(stem)) result.unpaired.push_back(path.string());
  }
  for (const auto& [stem, path] : masks) {
    if (!images.contains(stem)) result.unpaired.push_back(path.string());
  }
  if (!result.unpaired.empty() && !allow_unpaired) {
    std::string names;
    for (const auto& u : result.unpaired) names += (names.empty() ? "" : ", ") + u;
    throw ValidationError("unpaired files: " + names);
  }

  for (const auto& [stem, image_path] : images) {
    const auto m = masks.find(stem);
    if (m == masks.end()) continue;
    GrayImage image = io::read_image(image_path);
    GrayImage mask = io::read_image(m->second);
    if (!image.same_shape(mask)) {
      throw DimensionMismatch(stem + ": image " + std::to_string(image.width()) + "x" +
                              std::to_string(image.height()) + " vs mask " +
                              std::to_string(mask.width()) + "x" + std::to_string(mask.height()));
    }
    const AuditReport report = audit(mask, labels.values());
    if (!report.is_canonical) {
      result.warnings.push_back(stem + ": mask has " + std::to_string(report.extra.size()) +
                                " non-canonical label(s)");
    }
    result.pairs.push_back({stem, std::move(image), LabelMask{std::move(mask), labels}});
  }
  return result;
}

// ---- splitting ----

struct SplitSpec {
  double train_frac = 0.6;
  double val_frac = 0.2;
  double test_frac = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(train_frac > 0.0 && val_frac > 0.0 && test_frac > 0.0)) {
      throw ValidationError("split fractions must be positive");
    }
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
      throw ValidationError("split fractions must sum to 1");
    }
  }
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

/// train = round(f_train * n), val = round(f_val * n), test = the rest.
inline SplitSizes split_sizes(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  const auto nd = static_cast<double>(n);
  SplitSizes s;
  s.train = std::min(n, static_cast<std::size_t>(std::llround(spec.train_frac * nd)));
  s.val = std::min(n - s.train, static_cast<std::size_t>(std::llround(spec.val_frac * nd)));
  s.test = n - s.train - s.val;
  return s;
}

/// Seeded Fisher-Yates permutation of [0, n).
inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

template <typename T>
struct Split {
  std::vector<T> train;
  std::vector<T> val;
  std::vector<T> test;
};

template <typename T>
Split<T> split(const std::vector<T>& items, const SplitSpec& spec) {
  if (items.empty()) throw ValidationError("split: empty input");
  const SplitSizes sizes = split_sizes(items.size(), spec);
  const auto order = shuffled_indices(items.size(), spec.seed);
  Split<T> out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const T& item = items[order[k]];
    if (k < sizes.train) {
      out.train.push_back(item);
    } else if (k < sizes.train + sizes.val) {
      out.val.push_back(item);
    } else {
      out.test.push_back(item);
    }
  }
  return out;
}

// ---- augmentation ----

struct AugmentSpec {
  double reflect_lr_prob = 0.5;
  std::int64_t translate_min = -10;
  std::int64_t translate_max = 10;
  Intensity fill_value = 0;

  void validate() const {
    if (!(reflect_lr_prob >= 0.0 && reflect_lr_prob <= 1.0)) {
      throw ValidationError("reflection probability must lie in [0,1]");
    }
    if (translate_min > translate_max) throw ValidationError("translation range is empty");
  }
};

/// What one augmentation draw did.
struct AugmentDraw {
  bool reflected = false;
  std::int64_t dx = 0;
  std::int64_t dy = 0;
};

template <typename T>
Image<T> reflect_lr(const Image<T>& img) {
  Image<T> out = img;
  for (std::size_t y = 0; y < out.height(); ++y) {
    auto row = out.row(y);
    std::reverse(row.begin(), row.end());
  }
  return out;
}

/// out(x, y) = in(x - dx, y - dy); vacated pixels take `fill`.
template <typename T>
Image<T> translate(const Image<T>& img, std::int64_t dx, std::int64_t dy, T fill) {
  Image<T> out(img.width(), img.height(), fill);
  const auto w = static_cast<std::int64_t>(img.width());
  const auto h = static_cast<std::int64_t>(img.height());
  for (std::int64_t y = 0; y < h; ++y) {
    const std::int64_t sy = y - dy;
    if (sy < 0 || sy >= h) continue;
    for (std::int64_t x = 0; x < w; ++x) {
      const std::int64_t sx = x - dx;
      if (sx < 0 || sx >= w) continue;
      out(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) =
          img(static_cast<std::size_t>(sx), static_cast<std::size_t>(sy));
    }
  }
  return out;
}

/// Applies a fixed draw to both rasters of a pair.
inline SamplePair apply_augment(const SamplePair& pair, const AugmentDraw& draw, Intensity fill_value) {
  require_same_shape(pair.image, pair.mask.image, "augment");
  GrayImage image = draw.reflected ? reflect_lr(pair.image) : pair.image;
  GrayImage mask = draw.reflected ? reflect_lr(pair.mask.image) : pair.mask.image;
  image = translate(image, draw.dx, draw.dy, fill_value);
  mask = translate(mask, draw.dx, draw.dy, pair.mask.labels.lowest());
  return {pair.id, std::move(image), LabelMask{std::move(mask), pair.mask.labels}};
}

inline AugmentDraw draw_augment(const AugmentSpec& spec, Rng& rng) {
  spec.validate();
  AugmentDraw d;
  d.reflected = rng.unit() < spec.reflect_lr_prob;
  d.dx = rng.between(spec.translate_min, spec.translate_max);
  d.dy = rng.between(spec.translate_min, spec.translate_max);
  return d;
}

/// Random left-right reflection then a shared integer translation.
inline SamplePair augment(const SamplePair& pair, const AugmentSpec& spec, Rng& rng,
                          AugmentDraw* drawn = nullptr) {
  const AugmentDraw d = draw_augment(spec, rng);
  if (drawn) *drawn = d;
  return apply_augment(pair, d, spec.fill_value);
}

// ---- export ----

struct ExportOutcome {
  std::string id;
  bool ok = false;
  bool canonical = false;
  std::vector<ExtraLabel> extra;
  std::string error;
};

struct ExportSummary {
  std::size_t dst_width = 1;
  std::size_t dst_height = 1;
  KernelKind kernel = KernelKind::Nearest;
  FilterStrategy strategy = FilterStrategy::None;
  std::vector<ExportOutcome> files;

  std::size_t written() const {
    return static_cast<std::size_t>(std::count_if(files.begin(), files.end(), [](const auto& f) { return f.ok; }));
  }
  std::size_t canonical() const {
    return static_cast<std::size_t>(
        std::count_if(files.begin(), files.end(), [](const auto& f) { return f.ok && f.canonical; }));
  }
  std::size_t non_canonical() const { return written() - canonical(); }
  std::size_t failed() const { return files.size() - written(); }
};

struct ExportTargets {
  fs::path image_dir;
  fs::path mask_dir;
  std::string extension = ".png";
};

/// Resized intensity image and label mask for one pair.
inline std::pair<GrayImage, LabelMask> resize_pair(const SamplePair& pair, std::size_t dst_width,
                                                   std::size_t dst_height, KernelKind kernel,
                                                   FilterStrategy strategy) {
  const ResizeSpec spec = ResizeSpec::from(pair.image, dst_width, dst_height, kernel);
  return {resize_image(pair.image, spec), mask_resize(pair.mask, spec, strategy)};
}

/// Writes every pair at the destination size. Per-file failures are recorded
/// and the run continues.
inline ExportSummary export_resized(const std::vector<SamplePair>& pairs, std::size_t dst_width,
                                    std::size_t dst_height, KernelKind kernel,
                                    FilterStrategy strategy, const ExportTargets& targets) {
  ExportSummary summary;
  if (dst_width == 0 || dst_height == 0) throw ValidationError("export size must be >= 1");
  summary.dst_width = dst_width;
  summary.dst_height = dst_height;
  summary.kernel = kernel;
  summary.strategy = strategy;
  for (const auto& pair : pairs) {
    ExportOutcome outcome;
    outcome.id = pair.id;
    try {
      auto [image, mask] = resize_pair(pair, dst_width, dst_height, kernel, strategy);
      const AuditReport report = audit(mask);
      io::write_image(targets.image_dir / (pair.id + targets.extension), image);
      io::write_image(targets.mask_dir / (pair.id + targets.extension), mask.image);
      outcome.ok = true;
      outcome.canonical = report.is_canonical;
      outcome.extra = report.extra;
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
    summary.files.push_back(std::move(outcome));
  }
  return summary;
}

}  // namespace labelscale

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "labelscale/errors.hpp"
#include "labelscale/raster.hpp"
#include "labelscale/resample.hpp"

namespace labelscale {

enum class FilterStrategy { None, Eq1Only, FiveStep };

inline std::string_view to_string(FilterStrategy s) noexcept {
  switch (s) {
    case FilterStrategy::None: return "none";
    case FilterStrategy::Eq1Only: return "eq1";
    case FilterStrategy::FiveStep: return "five-step";
  }
  return "unknown";
}

inline std::optional<FilterStrategy> parse_filter(std::string_view name) noexcept {
  if (name == "none") return FilterStrategy::None;
  if (name == "eq1") return FilterStrategy::Eq1Only;
  if (name == "five-step") return FilterStrategy::FiveStep;
  return std::nullopt;
}

inline constexpr Intensity kMiddleLabel = 128;

/// Three-band threshold onto {0,128,255}: below 64 -> 0, above 192 -> 255,
/// the closed interval [64, 192] -> 128.
constexpr Intensity eq1_value(Intensity x) noexcept {
  if (x < 64) return 0;
  if (x > 192) return 255;
  return kMiddleLabel;
}

inline LabelMask eq1_threshold(const GrayImage& mask) {
  GrayImage out(mask.width(), mask.height());
  const auto in = mask.samples();
  auto so = out.samples();
  for (std::size_t i = 0; i < in.size(); ++i) so[i] = eq1_value(in[i]);
  return LabelMask{std::move(out), LabelSet::tri_class()};
}

inline void require_tri_class(const LabelSet& labels, std::string_view what) {
  if (!labels.is_tri_class()) {
    throw UnsupportedConfiguration(std::string(what) +
                                   " is only defined for the label set {0,128,255}");
  }
}

/// Intermediate rasters of the extra-label removal pipeline, kept for
/// inspection and tests.
struct FiveStepTrace {
  GrayImage s1;      // quantized interpolation
  GrayImage s2;      // thresholded at 64/192
  GrayImage middle;  // middle-class channel of s2
  GrayImage s3;      // s2 with the middle class removed
  GrayImage s4;      // median-filtered middle channel
  GrayImage s5;      // recombined result
};

inline FiveStepTrace remove_extra_labels_traced(const FloatImage& interp) {
  GrayImage s1 = quantize(interp);
  GrayImage s2 = eq1_threshold(s1).image;
  GrayImage middle = extract_class(s2, kMiddleLabel);
  GrayImage s3 = subtract(s2, middle);
  GrayImage s4 = median3x3(middle);

  GrayImage s5(s1.width(), s1.height());
  for (std::size_t i = 0; i < s5.size(); ++i) {
    if (s4.samples()[i] == kMiddleLabel) {
      s5.samples()[i] = kMiddleLabel;
    } else if (middle.samples()[i] == kMiddleLabel) {
      // Thin middle-class ribbon rejected by the median: split at the midpoint.
      s5.samples()[i] = s1.samples()[i] < kMiddleLabel ? Intensity{0} : Intensity{255};
    } else {
      s5.samples()[i] = s3.samples()[i];
    }
  }
  return {std::move(s1), std::move(s2), std::move(middle),
          std::move(s3), std::move(s4), std::move(s5)};
}

/// Removes interpolation-induced labels from a bicubic/Lanczos-resized
/// tri-class mask (threshold, subtract, median, recombine).
inline LabelMask remove_extra_labels(const FloatImage& interp,
                                     const LabelSet& labels = LabelSet::tri_class()) {
  require_tri_class(labels, "five-step filtering");
  return LabelMask{remove_extra_labels_traced(interp).s5, labels};
}

struct ExtraLabel {
  Intensity label = 0;
  std::size_t count = 0;
  std::size_t example_x = 0;
  std::size_t example_y = 0;
};

struct AuditReport {
  std::vector<Intensity> expected;
  ClassHistogram found;
  std::vector<ExtraLabel> extra;
  bool is_canonical = true;
};

inline AuditReport audit(const GrayImage& mask, std::span<const Intensity> expected) {
  if (expected.empty()) throw ValidationError("audit needs at least one expected label");
  AuditReport report;
  report.expected.assign(expected.begin(), expected.end());
  std::sort(report.expected.begin(), report.expected.end());
  report.found = class_histogram(mask);

  for (const auto& [label, count] : report.found.bins()) {
    if (std::binary_search(report.expected.begin(), report.expected.end(), label)) continue;
    ExtraLabel extra{label, count, 0, 0};
    bool located = false;
    for (std::size_t y = 0; y < mask.height() && !located; ++y) {
      for (std::size_t x = 0; x < mask.width(); ++x) {
        if (mask(x, y) == label) {
          extra.example_x = x;
          extra.example_y = y;
          located = true;
          break;
        }
      }
    }
    report.extra.push_back(extra);
  }
  report.is_canonical = report.extra.empty();
  return report;
}

inline AuditReport audit(const LabelMask& mask) { return audit(mask.image, mask.labels.values()); }

/// Resizes a canonical label mask. Nearest neighbour never needs filtering;
/// the extra-pixel kernels are post-processed according to `strategy`.
inline LabelMask mask_resize(const LabelMask& mask, const ResizeSpec& spec,
                             FilterStrategy strategy) {
  if (!mask.is_canonical()) throw ValidationError("mask_resize input mask is not canonical");

  if (spec.kernel == KernelKind::Nearest) {
    return LabelMask{resize_nearest(mask.image, spec), mask.labels};
  }
  if (strategy != FilterStrategy::None) require_tri_class(mask.labels, to_string(strategy));

  const FloatImage interp = resize_kernel(mask.image, spec);
  switch (strategy) {
    case FilterStrategy::None: return LabelMask{quantize(interp), mask.labels};
    case FilterStrategy::Eq1Only: return eq1_threshold(quantize(interp));
    case FilterStrategy::FiveStep: return remove_extra_labels(interp, mask.labels);
  }
  throw UnsupportedConfiguration("unknown filter strategy");
}

}  // namespace labelscale

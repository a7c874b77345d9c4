#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "labelscale/errors.hpp"
#include "labelscale/raster.hpp"

namespace labelscale {

/// counts(i, j) = pixels whose ground-truth label is labels[i] and whose
/// predicted label is labels[j].
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(LabelSet labels)
      : labels_(std::move(labels)), counts_(labels_.size() * labels_.size(), 0) {}

  const LabelSet& labels() const noexcept { return labels_; }
  std::size_t classes() const noexcept { return labels_.size(); }

  std::uint64_t at(std::size_t gt, std::size_t pred) const { return counts_[gt * classes() + pred]; }

  void add(std::size_t gt, std::size_t pred, std::uint64_t n = 1) {
    counts_[gt * classes() + pred] += n;
  }

  /// Entrywise sum; order-independent.
  void merge(const ConfusionMatrix& other) {
    if (!(other.labels_ == labels_)) throw ValidationError("confusion merge: label sets differ");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  }

  std::uint64_t total() const noexcept {
    std::uint64_t sum = 0;
    for (const auto c : counts_) sum += c;
    return sum;
  }

  std::uint64_t trace() const noexcept {
    std::uint64_t sum = 0;
    for (std::size_t c = 0; c < classes(); ++c) sum += at(c, c);
    return sum;
  }

  std::uint64_t true_positives(std::size_t c) const { return at(c, c); }

  std::uint64_t false_negatives(std::size_t c) const {
    std::uint64_t sum = 0;
    for (std::size_t j = 0; j < classes(); ++j) {
      if (j != c) sum += at(c, j);
    }
    return sum;
  }

  std::uint64_t false_positives(std::size_t c) const {
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < classes(); ++i) {
      if (i != c) sum += at(i, c);
    }
    return sum;
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  LabelSet labels_;
  std::vector<std::uint64_t> counts_;
};

inline void require_comparable(const LabelMask& gt, const LabelMask& pred, const char* what) {
  require_same_shape(gt.image, pred.image, what);
  if (!(gt.labels == pred.labels)) {
    throw ValidationError(std::string(what) + ": ground truth and prediction label sets differ");
  }
}

inline ConfusionMatrix confusion(const LabelMask& gt, const LabelMask& pred) {
  require_comparable(gt, pred, "confusion");
  ConfusionMatrix cm(gt.labels);
  const auto g = gt.image.samples();
  const auto p = pred.image.samples();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t gi = gt.labels.index_of(g[i]);
    const std::size_t pi = gt.labels.index_of(p[i]);
    if (gi == gt.labels.size() || pi == gt.labels.size()) {
      throw ValidationError("confusion: mask is not canonical (pixel " + std::to_string(i) + ")");
    }
    cm.add(gi, pi);
  }
  return cm;
}

/// Per-class accuracy (recall) and IoU. A class with an empty denominator
/// has no value and is left out of every aggregate.
struct ClassMetrics {
  std::vector<std::optional<double>> accuracy;
  std::vector<std::optional<double>> iou;
  double global_accuracy = 0.0;
};

inline std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

inline ClassMetrics class_metrics(const ConfusionMatrix& cm) {
  ClassMetrics out;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const auto tp = cm.true_positives(c);
    const auto fn = cm.false_negatives(c);
    const auto fp = cm.false_positives(c);
    out.accuracy.push_back(ratio(tp, tp + fn));
    out.iou.push_back(ratio(tp, tp + fp + fn));
  }
  out.global_accuracy = ratio(cm.trace(), cm.total()).value_or(0.0);
  return out;
}

struct DiceScores {
  std::vector<std::optional<double>> per_class;
  /// Unweighted mean over classes present in ground truth or prediction.
  double mean = 0.0;
};

inline DiceScores dice(const ConfusionMatrix& cm) {
  DiceScores out;
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const auto tp = cm.true_positives(c);
    const auto d = ratio(2 * tp, 2 * tp + cm.false_positives(c) + cm.false_negatives(c));
    out.per_class.push_back(d);
    if (d) {
      sum += *d;
      ++present;
    }
  }
  out.mean = present == 0 ? 0.0 : sum / static_cast<double>(present);
  return out;
}

inline DiceScores dice(const LabelMask& gt, const LabelMask& pred) {
  return dice(confusion(gt, pred));
}

/// Pixels of `label` with at least one 4-neighbour of another label; the
/// frame outside the image counts as another label.
inline std::vector<std::uint8_t> boundary_map(const GrayImage& mask, Intensity label) {
  const std::size_t w = mask.width();
  const std::size_t h = mask.height();
  std::vector<std::uint8_t> edge(w * h, 0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (mask(x, y) != label) continue;
      const bool on_frame = x == 0 || y == 0 || x + 1 == w || y + 1 == h;
      edge[y * w + x] = on_frame || mask(x - 1, y) != label || mask(x + 1, y) != label ||
                        mask(x, y - 1) != label || mask(x, y + 1) != label;
    }
  }
  return edge;
}

/// 0.75% of the image diagonal, at least one pixel.
inline double default_bf_theta(std::size_t width, std::size_t height) {
  const double diag = std::hypot(static_cast<double>(width), static_cast<double>(height));
  return std::max(1.0, 0.0075 * diag);
}

namespace detail {

// Fraction of `from` boundary pixels with a `to` boundary pixel within theta.
inline std::optional<double> matched_fraction(std::span<const std::uint8_t> from,
                                              std::span<const std::uint8_t> to, std::size_t w,
                                              std::size_t h, double theta) {
  const auto r = static_cast<std::ptrdiff_t>(std::floor(theta));
  const double theta2 = theta * theta;
  std::uint64_t total = 0;
  std::uint64_t hit = 0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (!from[y * w + x]) continue;
      ++total;
      bool found = false;
      for (std::ptrdiff_t dy = -r; dy <= r && !found; ++dy) {
        const auto yy = static_cast<std::ptrdiff_t>(y) + dy;
        if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
          const auto xx = static_cast<std::ptrdiff_t>(x) + dx;
          if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(w)) continue;
          if (static_cast<double>(dx * dx + dy * dy) > theta2) continue;
          if (to[static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)]) {
            found = true;
            break;
          }
        }
      }
      hit += found;
    }
  }
  return ratio(hit, total);
}

}  // namespace detail

/// Boundary F1 for one class. 1.0 when neither mask has a boundary for the
/// class, 0.0 when only one of them does.
inline double bf_score(const GrayImage& gt, const GrayImage& pred, Intensity label,
                       double theta) {
  require_same_shape(gt, pred, "bf_score");
  if (!(theta > 0.0)) throw ValidationError("bf_score: theta must be > 0");
  const auto gt_edge = boundary_map(gt, label);
  const auto pred_edge = boundary_map(pred, label);
  const auto precision =
      detail::matched_fraction(pred_edge, gt_edge, gt.width(), gt.height(), theta);
  const auto recall = detail::matched_fraction(gt_edge, pred_edge, gt.width(), gt.height(), theta);
  if (!precision && !recall) return 1.0;
  const double p = precision.value_or(0.0);
  const double r = recall.value_or(0.0);
  return (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

inline double bf_score(const LabelMask& gt, const LabelMask& pred, Intensity label, double theta) {
  return bf_score(gt.image, pred.image, label, theta);
}

/// Region1 is the brightest label, Region2 the next, and so on; for
/// {0,128,255} this gives Region1=255, Region2=128, Region3=0.
inline std::string region_name(const LabelSet& labels, Intensity label) {
  const std::size_t idx = labels.index_of(label);
  return "Region" + std::to_string(labels.size() - idx);
}

struct RegionScores {
  Intensity label = 0;
  std::string name;
  std::optional<double> accuracy;
  std::optional<double> iou;
  std::optional<double> mean_bf;
};

struct SegEvalReport {
  LabelSet labels = LabelSet::tri_class();
  std::vector<RegionScores> regions;  // ordered Region1, Region2, ...
  double global_accuracy = 0.0;
  std::vector<double> per_image_dice;
  double theta = 0.0;  // 0 means per-image default
  ConfusionMatrix confusion{LabelSet::tri_class()};
};

using MaskPair = std::pair<LabelMask, LabelMask>;

/// Accuracy/IoU/global from the pooled confusion matrix; mean BF per class
/// averaged over the images where the class appears in either mask; one
/// Dice value per pair. `theta` <= 0 selects default_bf_theta per image.
inline SegEvalReport evaluate_corpus(std::span<const MaskPair> pairs, double theta = 0.0) {
  if (pairs.empty()) throw ValidationError("evaluate_corpus: empty corpus");
  const LabelSet& labels = pairs.front().first.labels;

  ConfusionMatrix pooled(labels);
  std::vector<double> bf_sum(labels.size(), 0.0);
  std::vector<std::size_t> bf_n(labels.size(), 0);
  SegEvalReport report;
  report.labels = labels;
  report.theta = theta > 0.0 ? theta : 0.0;

  for (const auto& [gt, pred] : pairs) {
    if (!(gt.labels == labels)) throw ValidationError("evaluate_corpus: mixed label sets");
    const ConfusionMatrix cm = confusion(gt, pred);
    pooled.merge(cm);
    report.per_image_dice.push_back(dice(cm).mean);

    const double t = theta > 0.0 ? theta : default_bf_theta(gt.image.width(), gt.image.height());
    for (std::size_t c = 0; c < labels.size(); ++c) {
      const bool in_gt = cm.true_positives(c) + cm.false_negatives(c) > 0;
      const bool in_pred = cm.true_positives(c) + cm.false_positives(c) > 0;
      if (!in_gt && !in_pred) continue;
      bf_sum[c] += bf_score(gt.image, pred.image, labels[c], t);
      ++bf_n[c];
    }
  }

  const ClassMetrics m = class_metrics(pooled);
  for (std::size_t k = labels.size(); k-- > 0;) {
    RegionScores r;
    r.label = labels[k];
    r.name = region_name(labels, labels[k]);
    r.accuracy = m.accuracy[k];
    r.iou = m.iou[k];
    if (bf_n[k] > 0) r.mean_bf = bf_sum[k] / static_cast<double>(bf_n[k]);
    report.regions.push_back(std::move(r));
  }
  report.global_accuracy = m.global_accuracy;
  report.confusion = std::move(pooled);
  return report;
}

}  // namespace labelscale

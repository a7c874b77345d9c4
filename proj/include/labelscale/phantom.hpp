#pragma once

// Synthetic short-axis phantoms: a myocardial ring (128) with an optional
// enhanced scar wedge (255) on background (0), plus a matching noisy
// intensity image. Used for demos and end-to-end runs in place of clinical
// data.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "labelscale/dataset.hpp"
#include "labelscale/raster.hpp"

namespace labelscale {

struct PhantomSpec {
  std::size_t width = 128;
  std::size_t height = 128;
  double noise_sigma = 12.0;
};

inline double gaussian(Rng& rng) {
  // Box-Muller; 1 - unit() keeps the log argument in (0, 1].
  const double u1 = 1.0 - rng.unit();
  const double u2 = rng.unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline SamplePair make_phantom(const std::string& id, const PhantomSpec& spec, Rng& rng) {
  const double w = static_cast<double>(spec.width);
  const double h = static_cast<double>(spec.height);
  const double extent = std::min(w, h);
  const auto span = [&](double lo, double hi) { return lo + (hi - lo) * rng.unit(); };

  const double cx = w / 2.0 + span(-0.08, 0.08) * extent;
  const double cy = h / 2.0 + span(-0.08, 0.08) * extent;
  const double outer = span(0.18, 0.28) * extent;
  const double thickness = std::max(3.0, span(0.06, 0.1) * extent);
  const double inner = outer - thickness;
  const double squash = span(0.85, 1.15);
  const bool has_scar = rng.unit() < 0.8;
  const double scar_start = span(0.0, 2.0 * std::numbers::pi);
  const double scar_span = span(std::numbers::pi / 6.0, 2.0 * std::numbers::pi / 3.0);
  const double transmurality = span(0.4, 1.0);

  GrayImage mask(spec.width, spec.height, 0);
  GrayImage image(spec.width, spec.height, 0);
  for (std::size_t y = 0; y < spec.height; ++y) {
    for (std::size_t x = 0; x < spec.width; ++x) {
      const double dx = static_cast<double>(x) + 0.5 - cx;
      const double dy = (static_cast<double>(y) + 0.5 - cy) * squash;
      const double r = std::hypot(dx, dy);
      double base = 60.0;  // surrounding tissue
      Intensity label = 0;
      if (r < inner) {
        base = 150.0;  // blood pool
      } else if (r <= outer) {
        label = 128;
        base = 40.0;  // nulled myocardium
        double angle = std::atan2(dy, dx) - scar_start;
        angle = std::fmod(angle + 4.0 * std::numbers::pi, 2.0 * std::numbers::pi);
        const double depth = (r - inner) / thickness;  // 0 at endocardium
        if (has_scar && angle < scar_span && depth <= transmurality) {
          label = 255;
          base = 220.0;
        }
      }
      mask(x, y) = label;
      image(x, y) = quantize_sample(base + spec.noise_sigma * gaussian(rng));
    }
  }
  return {id, std::move(image), LabelMask{std::move(mask), LabelSet::tri_class()}};
}

inline std::vector<SamplePair> make_phantom_corpus(std::size_t count, const PhantomSpec& spec,
                                                   std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SamplePair> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "phantom_%04zu", i);
    out.push_back(make_phantom(id, spec, rng));
  }
  return out;
}

}  // namespace labelscale

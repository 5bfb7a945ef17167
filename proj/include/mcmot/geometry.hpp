#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <numeric>
#include <optional>
#include <vector>

#include "mcmot/error.hpp"

namespace mcmot {

/// Axis-aligned image box in top-left/width/height form (pixels).
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double center_x() const { return x + 0.5 * w; }
  double center_y() const { return y + 0.5 * h; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Measurement-space box: center-x, center-y, aspect (w/h), height.
using Xyah = std::array<double, 4>;
/// Corner form: left, top, right, bottom.
using Tlbr = std::array<double, 4>;

using Embedding = std::vector<float>;

inline constexpr std::size_t kDefaultEmbeddingDim = 512;

struct Detection {
  long frame = 0;
  BoundingBox box;
  double confidence = 0.0;
  int class_id = 0;
  std::optional<Embedding> embedding;
};

inline Xyah to_xyah(const BoundingBox& b) {
  if (!(b.h > 0.0)) fail(ErrorCategory::domain, "to_xyah: box height must be positive");
  return {b.x + 0.5 * b.w, b.y + 0.5 * b.h, b.w / b.h, b.h};
}

inline BoundingBox from_xyah(const Xyah& m) {
  const double w = m[2] * m[3];
  return {m[0] - 0.5 * w, m[1] - 0.5 * m[3], w, m[3]};
}

inline Tlbr to_tlbr(const BoundingBox& b) { return {b.x, b.y, b.x + b.w, b.y + b.h}; }

inline BoundingBox from_tlbr(const Tlbr& t) { return {t[0], t[1], t[2] - t[0], t[3] - t[1]}; }

/// Intersection over union. Boxes touching only along an edge score 0.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
  if (!(a.w > 0.0 && a.h > 0.0 && b.w > 0.0 && b.h > 0.0)) {
    fail(ErrorCategory::domain, "iou: boxes must have positive area");
  }
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

/// Greedy per-class non-maximum suppression. Output is in descending
/// confidence order; equal confidences keep input order.
inline std::vector<Detection> nms(const std::vector<Detection>& dets, double overlap_threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return dets[i].confidence > dets[j].confidence;
  });

  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return dets[k].class_id == dets[i].class_id &&
             iou(dets[k].box, dets[i].box) > overlap_threshold;
    });
    if (!suppressed) kept.push_back(i);
  }

  std::vector<Detection> out;
  out.reserve(kept.size());
  for (std::size_t k : kept) out.push_back(dets[k]);
  return out;
}

}  // namespace mcmot

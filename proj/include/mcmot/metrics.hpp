#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "mcmot/assignment.hpp"
#include "mcmot/error.hpp"
#include "mcmot/geometry.hpp"
#include "mcmot/tracker.hpp"

namespace mcmot {

// ---------------------------------------------------------------------------
// Output refinement

struct RefineConfig {
  double min_width = 0.0;   // exclusive
  double min_height = 0.0;  // exclusive
  std::size_t min_track_length = 0;
  double min_mean_confidence = 0.0;

  void validate() const {
    if (min_width < 0.0 || min_height < 0.0 || min_mean_confidence < 0.0) {
      fail(ErrorCategory::config, "refine thresholds must be non-negative");
    }
  }
};

namespace detail {
inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace detail

/// Component-wise median width/height of a tracklet's boxes.
inline BoundingBox median_box(const Tracklet& t) {
  if (t.boxes.empty()) return {};
  std::vector<double> ws, hs;
  for (const BoundingBox& b : t.boxes) {
    ws.push_back(b.w);
    hs.push_back(b.h);
  }
  return {0.0, 0.0, detail::median(std::move(ws)), detail::median(std::move(hs))};
}

inline bool passes_refine(const Tracklet& t, const RefineConfig& cfg) {
  if (t.boxes.empty()) return false;
  const BoundingBox m = median_box(t);
  return m.w > cfg.min_width && m.h > cfg.min_height && t.length() >= cfg.min_track_length &&
         t.mean_confidence >= cfg.min_mean_confidence;
}

/// Drops tracklets that are too small, too short, or too low in confidence.
inline std::vector<Tracklet> refine(const std::vector<Tracklet>& tracklets, const RefineConfig& cfg) {
  std::vector<Tracklet> out;
  for (const Tracklet& t : tracklets) {
    if (passes_refine(t, cfg)) out.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Counting metrics

/// Euclidean norm of the per-set count differences.
inline double l2_count_error(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) fail(ErrorCategory::domain, "l2_count_error: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Ratios over identity counts; absent where the denominator is zero.
///   accuracy = TP/(TP+FP+FN), precision = TP/(TP+FP), recall = TP/(TP+FN),
///   F1 = 2TP/(2TP+FP+FN).
struct ConfusionRatios {
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

inline ConfusionRatios confusion_ratios(const ConfusionCounts& c) {
  auto ratio = [](double num, double den) -> std::optional<double> {
    if (den == 0.0) return std::nullopt;
    return num / den;
  };
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
  return {ratio(tp, tp + fp + fn), ratio(tp, tp + fp), ratio(tp, tp + fn), ratio(2 * tp, 2 * tp + fp + fn)};
}

/// One-to-one greedy matching of predicted clusters to truth identities by
/// overlap. `overlap(i, j)` is the evidence that cluster i is identity j
/// (e.g. number of matched frames); only positive overlaps can pair.
/// Highest overlap first; ties go to the lower cluster then lower identity.
inline std::vector<std::pair<std::size_t, std::size_t>> greedy_identity_match(const Matrix<double>& overlap) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
  for (std::size_t i = 0; i < overlap.rows(); ++i) {
    for (std::size_t j = 0; j < overlap.cols(); ++j) {
      if (overlap(i, j) > 0.0) cand.emplace_back(overlap(i, j), i, j);
    }
  }
  std::stable_sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    return std::pair(std::get<1>(a), std::get<2>(a)) < std::pair(std::get<1>(b), std::get<2>(b));
  });
  std::vector<char> row_used(overlap.rows(), 0), col_used(overlap.cols(), 0);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& [v, i, j] : cand) {
    if (row_used[i] || col_used[j]) continue;
    row_used[i] = col_used[j] = 1;
    out.emplace_back(i, j);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// TP/FP/FN from cluster-to-identity evidence. `cluster_votes[i]` lists the
/// truth identity observed for each piece of evidence supporting cluster i
/// (negative = no identity); `truth_ids` are the identities present.
inline ConfusionCounts count_confusion(std::span<const std::vector<int>> cluster_votes, std::span<const int> truth_ids) {
  std::map<int, std::size_t> col;
  for (int id : truth_ids) col.emplace(id, col.size());
  Matrix<double> overlap(cluster_votes.size(), col.size(), 0.0);
  for (std::size_t i = 0; i < cluster_votes.size(); ++i) {
    for (int id : cluster_votes[i]) {
      if (auto it = col.find(id); it != col.end()) overlap(i, it->second) += 1.0;
    }
  }
  const std::size_t tp = greedy_identity_match(overlap).size();
  return {tp, cluster_votes.size() - tp, col.size() - tp};
}

struct CountReport {
  std::vector<double> per_set_predicted;
  std::vector<double> per_set_truth;
  double l2_error = 0.0;
  ConfusionCounts confusion;
  ConfusionRatios ratios;
};

inline CountReport make_count_report(std::vector<double> predicted, std::vector<double> truth, ConfusionCounts c) {
  CountReport r;
  r.l2_error = l2_count_error(predicted, truth);
  r.per_set_predicted = std::move(predicted);
  r.per_set_truth = std::move(truth);
  r.confusion = c;
  r.ratios = confusion_ratios(c);
  return r;
}

// ---------------------------------------------------------------------------
// Identity consistency

/// One box of an identity-labelled trajectory (hypothesis or truth).
struct LabeledBox {
  long frame = 0;
  int id = 0;
  BoundingBox box;
};

inline constexpr double kCorrespondenceIou = 0.5;

/// Per-frame hypothesis<->truth correspondence: maximum number of pairs with
/// IoU >= 0.5, then maximum total IoU. Returns (frame, truth id, hyp id).
inline std::vector<std::tuple<long, int, int>> frame_correspondences(std::span<const LabeledBox> hyp,
                                                                     std::span<const LabeledBox> truth) {
  std::map<long, std::pair<std::vector<const LabeledBox*>, std::vector<const LabeledBox*>>> frames;
  for (const LabeledBox& b : truth) frames[b.frame].first.push_back(&b);
  for (const LabeledBox& b : hyp) frames[b.frame].second.push_back(&b);

  std::vector<std::tuple<long, int, int>> out;
  for (const auto& [frame, sides] : frames) {
    const auto& [ts, hs] = sides;
    if (ts.empty() || hs.empty()) continue;
    CostMatrix c(ts.size(), hs.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
      for (std::size_t j = 0; j < hs.size(); ++j) {
        const double v = iou(ts[i]->box, hs[j]->box);
        c(i, j) = v >= kCorrespondenceIou ? 1.0 - v : kInfeasible;
      }
    }
    for (auto [i, j] : solve_assignment(c).pairs) out.emplace_back(frame, ts[i]->id, hs[j]->id);
  }
  return out;
}

/// Number of frames at which a truth identity's corresponding hypothesis id
/// differs from the one it last corresponded to.
inline std::size_t id_switches(std::span<const LabeledBox> hyp, std::span<const LabeledBox> truth) {
  std::map<int, int> last;
  std::size_t switches = 0;
  for (const auto& [frame, tid, hid] : frame_correspondences(hyp, truth)) {
    auto it = last.find(tid);
    if (it != last.end() && it->second != hid) ++switches;
    last[tid] = hid;
  }
  return switches;
}

/// Number of times a truth trajectory goes from covered to uncovered and is
/// later covered again.
inline std::size_t fragmentations(std::span<const LabeledBox> hyp, std::span<const LabeledBox> truth) {
  std::map<int, std::vector<std::pair<long, bool>>> timeline;  // truth id -> (frame, covered)
  std::map<std::pair<long, int>, bool> covered;
  for (const auto& [frame, tid, hid] : frame_correspondences(hyp, truth)) covered[{frame, tid}] = true;
  for (const LabeledBox& b : truth) timeline[b.id].emplace_back(b.frame, covered.count({b.frame, b.id}) > 0);

  std::size_t frags = 0;
  for (auto& [tid, rows] : timeline) {
    std::sort(rows.begin(), rows.end());
    bool was_covered = false, gap = false;
    for (const auto& [frame, c] : rows) {
      if (c) {
        if (gap) ++frags;
        was_covered = true;
        gap = false;
      } else if (was_covered) {
        gap = true;
      }
    }
  }
  return frags;
}

}  // namespace mcmot

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mcmot/assignment.hpp"
#include "mcmot/error.hpp"
#include "mcmot/geometry.hpp"
#include "mcmot/kalman.hpp"

namespace mcmot {

enum class AppearanceMetric { euclidean, cosine };

inline std::string_view to_string(AppearanceMetric m) {
  return m == AppearanceMetric::euclidean ? "euclidean" : "cosine";
}

struct TrackerConfig {
  double min_confidence = 0.3;
  double nms_threshold = 1.0;
  int max_age = 30;
  int n_init = 3;
  int nn_budget = 100;
  double max_appearance_distance = 0.4;
  double max_iou_distance = 0.7;
  AppearanceMetric appearance_metric = AppearanceMetric::euclidean;
  int frame_stride = 1;
  double gating_threshold = kChi2Gate4;
  bool matching_cascade = true;
  NoiseProfile noise;

  void validate() const {
    if (max_age < 1 || n_init < 1 || nn_budget < 1 || frame_stride < 1) {
      fail(ErrorCategory::config, "max_age, n_init, nn_budget and frame_stride must be >= 1");
    }
    if (min_confidence < 0.0 || min_confidence > 1.0 || nms_threshold < 0.0 || nms_threshold > 1.0 ||
        max_iou_distance < 0.0 || max_iou_distance > 1.0) {
      fail(ErrorCategory::config, "confidence, nms and iou thresholds must lie in [0,1]");
    }
    if (!(max_appearance_distance > 0.0) || !(gating_threshold > 0.0)) {
      fail(ErrorCategory::config, "distance thresholds must be positive");
    }
  }
};

/// Distance between two embeddings under the chosen metric.
inline double embedding_distance(std::span<const float> a, std::span<const float> b, AppearanceMetric metric) {
  if (a.size() != b.size()) fail(ErrorCategory::domain, "embedding dimensions differ");
  const Eigen::Map<const Eigen::VectorXf> va(a.data(), static_cast<Eigen::Index>(a.size()));
  const Eigen::Map<const Eigen::VectorXf> vb(b.data(), static_cast<Eigen::Index>(b.size()));
  if (metric == AppearanceMetric::euclidean) return std::sqrt(static_cast<double>((va - vb).squaredNorm()));
  const double denom = static_cast<double>(va.norm()) * static_cast<double>(vb.norm());
  if (denom == 0.0) return 1.0;
  return 1.0 - static_cast<double>(va.dot(vb)) / denom;
}

/// Bounded ring buffer of recent embeddings, one per column.
class AppearanceGallery {
 public:
  AppearanceGallery(std::size_t budget, std::size_t dim)
      : store_(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(budget)) {}

  std::size_t size() const { return size_; }
  std::size_t budget() const { return static_cast<std::size_t>(store_.cols()); }
  std::size_t dim() const { return static_cast<std::size_t>(store_.rows()); }
  bool empty() const { return size_ == 0; }

  void push(std::span<const float> e) {
    if (e.size() != dim()) fail(ErrorCategory::domain, "embedding dimension does not match the gallery");
    store_.col(static_cast<Eigen::Index>(next_)) =
        Eigen::Map<const Eigen::VectorXf>(e.data(), static_cast<Eigen::Index>(e.size()));
    next_ = (next_ + 1) % budget();
    size_ = std::min(size_ + 1, budget());
  }

  /// Nearest-neighbour distance from `e` to any stored embedding.
  double min_distance(std::span<const float> e, AppearanceMetric metric) const {
    if (size_ == 0) fail(ErrorCategory::domain, "empty appearance gallery");
    if (e.size() != dim()) fail(ErrorCategory::domain, "embedding dimension does not match the gallery");
    const Eigen::Map<const Eigen::VectorXf> q(e.data(), static_cast<Eigen::Index>(e.size()));
    const auto live = store_.leftCols(static_cast<Eigen::Index>(size_));
    if (metric == AppearanceMetric::euclidean) {
      const float best = (live.colwise() - q).colwise().squaredNorm().minCoeff();
      return std::sqrt(static_cast<double>(best));
    }
    const Eigen::RowVectorXf dots = q.transpose() * live;
    const Eigen::RowVectorXf norms = live.colwise().norm();
    const float qn = q.norm();
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < dots.size(); ++i) {
      const double denom = static_cast<double>(norms(i)) * static_cast<double>(qn);
      best = std::min(best, denom == 0.0 ? 1.0 : 1.0 - static_cast<double>(dots(i)) / denom);
    }
    return best;
  }

 private:
  Eigen::MatrixXf store_;
  std::size_t next_ = 0;
  std::size_t size_ = 0;
};

enum class TrackStatus { tentative, confirmed, deleted };

struct HistoryRow {
  long frame = 0;
  BoundingBox box;
  double confidence = 0.0;
  std::optional<Embedding> embedding;
};

struct Track {
  int track_id = 0;
  TrackStatus status = TrackStatus::tentative;
  KalmanState kstate;
  std::optional<AppearanceGallery> gallery;
  int hits = 1;
  int age = 1;
  int time_since_update = 0;
  bool ever_confirmed = false;
  std::vector<HistoryRow> history;
};

/// A finished per-camera trajectory ready for cross-camera association.
struct Tracklet {
  int camera_id = 0;
  int track_id = 0;
  std::vector<long> frames;
  std::vector<BoundingBox> boxes;
  std::vector<Embedding> embeddings;
  std::vector<double> confidences;
  double mean_confidence = 0.0;

  std::size_t length() const { return frames.size(); }
};

/// Confirmed track updated at the current frame.
struct TrackOutput {
  int track_id = 0;
  BoundingBox box;
  double confidence = 0.0;
};

/// Nearest-neighbour appearance cost between track galleries and detection
/// embeddings. Throws if any detection lacks an embedding or any gallery is
/// empty; callers fall back to IoU matching in that case.
inline CostMatrix appearance_cost(std::span<const Track> tracks, std::span<const Detection> dets,
                                  AppearanceMetric metric) {
  CostMatrix c(tracks.size(), dets.size());
  for (std::size_t k = 0; k < dets.size(); ++k) {
    if (!dets[k].embedding) fail(ErrorCategory::domain, "appearance_cost: detection without embedding");
  }
  for (std::size_t r = 0; r < tracks.size(); ++r) {
    if (!tracks[r].gallery || tracks[r].gallery->empty()) {
      fail(ErrorCategory::domain, "appearance_cost: track without appearance gallery");
    }
    for (std::size_t k = 0; k < dets.size(); ++k) {
      c(r, k) = tracks[r].gallery->min_distance(*dets[k].embedding, metric);
    }
  }
  return c;
}

/// Single-camera online tracker (one instance per camera, not thread-safe).
class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg = {}, int camera_id = 0)
      : cfg_(cfg), camera_id_(camera_id), kf_((cfg.validate(), cfg.noise)) {}

  const TrackerConfig& config() const { return cfg_; }
  int camera_id() const { return camera_id_; }
  std::span<const Track> tracks() const { return tracks_; }

  /// Advances one frame. `dets` must already be confidence- and NMS-filtered.
  std::vector<TrackOutput> step(long frame, std::span<const Detection> dets) {
    if (last_frame_ && frame <= *last_frame_) {
      fail(ErrorCategory::domain, "tracker frames must be strictly increasing");
    }
    last_frame_ = frame;

    for (Track& t : tracks_) {
      t.kstate = kf_.predict(t.kstate);
      ++t.age;
      ++t.time_since_update;
    }

    std::vector<Xyah> measurements;
    measurements.reserve(dets.size());
    for (const Detection& d : dets) measurements.push_back(to_xyah(d.box));

    std::vector<std::size_t> confirmed, unconfirmed;
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
      const Track& t = tracks_[i];
      if (t.status == TrackStatus::confirmed && t.gallery && !t.gallery->empty()) {
        confirmed.push_back(i);
      } else if (t.status != TrackStatus::confirmed) {
        unconfirmed.push_back(i);
      }
    }
    std::vector<std::size_t> with_embedding;
    for (std::size_t k = 0; k < dets.size(); ++k) {
      if (dets[k].embedding) with_embedding.push_back(k);
    }

    std::vector<std::pair<std::size_t, std::size_t>> matches;  // (track index, det index)
    std::vector<char> det_taken(dets.size(), 0), track_taken(tracks_.size(), 0);

    // Appearance stage, Mahalanobis distance as a hard gate.
    if (!confirmed.empty() && !with_embedding.empty()) {
      auto cost_fn = [&](const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
        CostMatrix c(rows.size(), cols.size(), kInfeasible);
        std::vector<Xyah> zs;
        zs.reserve(cols.size());
        for (std::size_t k : cols) zs.push_back(measurements[with_embedding[k]]);
        for (std::size_t r = 0; r < rows.size(); ++r) {
          const Track& t = tracks_[confirmed[rows[r]]];
          const std::vector<double> gd = kf_.gating_distance(t.kstate, zs);
          for (std::size_t k = 0; k < cols.size(); ++k) {
            if (gd[k] > cfg_.gating_threshold) continue;
            c(r, k) = t.gallery->min_distance(*dets[with_embedding[cols[k]]].embedding, cfg_.appearance_metric);
          }
        }
        return c;
      };
      Matching m;
      if (cfg_.matching_cascade) {
        std::vector<int> tsu;
        tsu.reserve(confirmed.size());
        for (std::size_t i : confirmed) tsu.push_back(tracks_[i].time_since_update);
        m = matching_cascade(cost_fn, tsu, with_embedding.size(), cfg_.max_age, cfg_.max_appearance_distance);
      } else {
        std::vector<std::size_t> rows(confirmed.size()), cols(with_embedding.size());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        std::iota(cols.begin(), cols.end(), std::size_t{0});
        m = min_cost_matching(cost_fn, cfg_.max_appearance_distance, rows, cols);
      }
      for (auto [r, k] : m.pairs) {
        matches.emplace_back(confirmed[r], with_embedding[k]);
        track_taken[confirmed[r]] = 1;
        det_taken[with_embedding[k]] = 1;
      }
    }

    // IoU stage: tentative tracks, confirmed tracks missed for exactly one
    // frame, and confirmed tracks that never had an embedding.
    std::vector<std::size_t> iou_tracks = unconfirmed;
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
      const Track& t = tracks_[i];
      if (t.status != TrackStatus::confirmed || track_taken[i]) continue;
      const bool motion_only = !t.gallery || t.gallery->empty();
      if (t.time_since_update == 1 || motion_only) iou_tracks.push_back(i);
    }
    std::sort(iou_tracks.begin(), iou_tracks.end());
    std::vector<std::size_t> iou_dets;
    for (std::size_t k = 0; k < dets.size(); ++k) {
      if (!det_taken[k]) iou_dets.push_back(k);
    }
    if (!iou_tracks.empty() && !iou_dets.empty()) {
      std::vector<BoundingBox> tboxes, dboxes;
      for (std::size_t i : iou_tracks) tboxes.push_back(state_box(tracks_[i].kstate));
      for (std::size_t k : iou_dets) dboxes.push_back(dets[k].box);
      const Matching m = iou_matching(tboxes, dboxes, cfg_.max_iou_distance);
      for (auto [r, k] : m.pairs) {
        matches.emplace_back(iou_tracks[r], iou_dets[k]);
        track_taken[iou_tracks[r]] = 1;
        det_taken[iou_dets[k]] = 1;
      }
    }

    for (auto [ti, di] : matches) apply_update(tracks_[ti], frame, dets[di], measurements[di]);

    for (std::size_t i = 0; i < tracks_.size(); ++i) {
      if (track_taken[i]) continue;
      Track& t = tracks_[i];
      if (t.status == TrackStatus::tentative || t.time_since_update > cfg_.max_age) {
        t.status = TrackStatus::deleted;
      }
    }

    for (std::size_t k = 0; k < dets.size(); ++k) {
      if (!det_taken[k]) spawn(frame, dets[k], measurements[k]);
    }

    std::vector<Track> alive;
    alive.reserve(tracks_.size());
    for (Track& t : tracks_) {
      if (t.status != TrackStatus::deleted) {
        alive.push_back(std::move(t));
      } else if (t.ever_confirmed) {
        finished_.push_back(std::move(t));
      }
    }
    tracks_ = std::move(alive);

    std::vector<TrackOutput> out;
    for (const Track& t : tracks_) {
      if (t.status == TrackStatus::confirmed && t.time_since_update == 0) {
        out.push_back({t.track_id, state_box(t.kstate), t.history.back().confidence});
      }
    }
    return out;
  }

  /// Every track that ever reached Confirmed, ordered by id.
  std::vector<Tracklet> export_tracklets() const {
    std::vector<const Track*> src;
    for (const Track& t : finished_) src.push_back(&t);
    for (const Track& t : tracks_) {
      if (t.ever_confirmed) src.push_back(&t);
    }
    std::sort(src.begin(), src.end(), [](const Track* a, const Track* b) { return a->track_id < b->track_id; });

    std::vector<Tracklet> out;
    out.reserve(src.size());
    for (const Track* t : src) {
      Tracklet tl;
      tl.camera_id = camera_id_;
      tl.track_id = t->track_id;
      const bool all_embedded = std::all_of(t->history.begin(), t->history.end(),
                                            [](const HistoryRow& h) { return h.embedding.has_value(); });
      double conf_sum = 0.0;
      for (const HistoryRow& h : t->history) {
        tl.frames.push_back(h.frame);
        tl.boxes.push_back(h.box);
        tl.confidences.push_back(h.confidence);
        if (all_embedded) tl.embeddings.push_back(*h.embedding);
        conf_sum += h.confidence;
      }
      tl.mean_confidence = t->history.empty() ? 0.0 : conf_sum / static_cast<double>(t->history.size());
      out.push_back(std::move(tl));
    }
    return out;
  }

 private:
  void apply_update(Track& t, long frame, const Detection& d, const Xyah& z) {
    t.kstate = kf_.update(t.kstate, z);
    if (d.embedding) push_embedding(t, *d.embedding);
    ++t.hits;
    t.time_since_update = 0;
    t.history.push_back({frame, d.box, d.confidence, d.embedding});
    if (t.status == TrackStatus::tentative && t.hits >= cfg_.n_init) {
      t.status = TrackStatus::confirmed;
      t.ever_confirmed = true;
    }
  }

  void spawn(long frame, const Detection& d, const Xyah& z) {
    Track t;
    t.track_id = next_id_++;
    t.kstate = kf_.initiate(z);
    if (d.embedding) push_embedding(t, *d.embedding);
    t.history.push_back({frame, d.box, d.confidence, d.embedding});
    if (cfg_.n_init <= 1) {
      t.status = TrackStatus::confirmed;
      t.ever_confirmed = true;
    }
    tracks_.push_back(std::move(t));
  }

  void push_embedding(Track& t, const Embedding& e) {
    if (!t.gallery) t.gallery.emplace(static_cast<std::size_t>(cfg_.nn_budget), e.size());
    t.gallery->push(e);
  }

  TrackerConfig cfg_;
  int camera_id_;
  KalmanFilter kf_;
  std::vector<Track> tracks_;
  std::vector<Track> finished_;
  int next_id_ = 1;
  std::optional<long> last_frame_;
};

}  // namespace mcmot

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mcmot/error.hpp"
#include "mcmot/geometry.hpp"
#include "mcmot/metrics.hpp"

namespace mcmot::sim {

/// SplitMix64 (Steele, Lea & Flood 2014): state advances by a fixed odd
/// increment and each output is a bijective mix of the state, so a stream is
/// fully defined by its seed on every platform. Distributions below are
/// written out explicitly for the same reason.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Knuth's multiplication method; fine for the small rates used here.
  int poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    const double limit = std::exp(-lambda);
    int k = 0;
    double p = uniform();
    while (p > limit) {
      ++k;
      p *= uniform();
    }
    return k;
  }

 private:
  std::uint64_t state_;
  std::optional<double> spare_;
};

/// Independent stream for one purpose of one scenario.
inline SplitMix64 substream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0) {
  SplitMix64 mix(seed ^ (tag * 0xD1B54A32D192ED03ull) ^ (index * 0xABC98388FB8FAC03ull));
  return SplitMix64(mix.next());
}

struct Occlusion {
  int camera = 0;
  long frame_begin = 0;  // inclusive
  long frame_end = 0;    // exclusive
  BoundingBox region;    // truth boxes whose center falls inside emit nothing
};

struct ScenarioConfig {
  std::uint64_t seed = 0;
  int cameras = 3;
  int identities = 10;
  long frames = 300;
  double image_width = 1920.0;
  double image_height = 1080.0;
  std::size_t embedding_dim = kDefaultEmbeddingDim;
  /// Expected L2 norm of the noise added to a ground embedding before
  /// re-normalization (per-component sigma is this over sqrt(D)).
  double embedding_noise_sigma = 0.0;
  double identity_min_separation = 1.0;
  double miss_prob = 0.0;
  double false_positive_rate = 0.0;  // expected false detections per frame
  std::vector<Occlusion> occlusions;
  double motion_jitter_sigma = 0.0;  // pixels, on emitted detection boxes
  double global_motion_sigma = 0.0;  // pixels/frame random walk shared by a camera
  double presence_prob = 1.0;        // chance an identity appears in a given camera
  double min_visible_fraction = 0.5; // shortest appearance as a fraction of frames
  double max_speed = 3.0;            // pixels/frame
  double min_box_height = 140.0;
  double max_box_height = 260.0;
  double min_aspect = 0.45;
  double max_aspect = 0.65;

  void validate() const {
    auto bad = [](const std::string& m) { fail(ErrorCategory::config, "scenario: " + m); };
    if (cameras < 1) bad("cameras must be >= 1");
    if (identities < 1) bad("identities must be >= 1");
    if (frames < 1) bad("frames must be >= 1");
    if (embedding_dim < 1) bad("embedding_dim must be >= 1");
    if (!(identity_min_separation > 0.0)) bad("identity_min_separation must be positive");
    if (identity_min_separation > 2.0) bad("identity_min_separation exceeds the unit-sphere diameter");
    if (miss_prob < 0.0 || miss_prob > 1.0) bad("miss_prob must lie in [0,1]");
    if (presence_prob <= 0.0 || presence_prob > 1.0) bad("presence_prob must lie in (0,1]");
    if (min_visible_fraction <= 0.0 || min_visible_fraction > 1.0) bad("min_visible_fraction must lie in (0,1]");
    if (false_positive_rate < 0.0 || embedding_noise_sigma < 0.0 || motion_jitter_sigma < 0.0 ||
        global_motion_sigma < 0.0 || max_speed < 0.0) {
      bad("rates and noise levels must be non-negative");
    }
    if (!(min_box_height > 0.0) || max_box_height < min_box_height || !(min_aspect > 0.0) || max_aspect < min_aspect) {
      bad("box size ranges are invalid");
    }
    if (max_box_height > image_height || max_box_height * max_aspect > image_width) {
      bad("boxes do not fit in the image");
    }
  }
};

struct Identity {
  int id = 0;
  Embedding embedding;  // unit length
};

struct CameraTruth {
  int camera_id = 0;
  std::vector<LabeledBox> boxes;  // sorted by (frame, identity)
  std::vector<int> identities;    // sorted, those with at least one box
};

struct GroundTruth {
  std::vector<Identity> identities;
  std::vector<CameraTruth> cameras;

  /// Identities visible in at least one camera.
  std::vector<int> present_identities() const {
    std::vector<int> ids;
    for (const CameraTruth& c : cameras) ids.insert(ids.end(), c.identities.begin(), c.identities.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
  }
};

struct Scenario {
  ScenarioConfig config;
  GroundTruth truth;
  std::vector<std::vector<Detection>> detections;  // per camera, sorted by frame
};

namespace detail {

enum StreamTag : std::uint64_t { embeddings_tag = 1, trajectories_tag = 2, detections_tag = 3, motion_tag = 4 };

inline Embedding random_unit(SplitMix64& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  while (norm == 0.0) {
    for (double& x : v) x = rng.normal();
    norm = 0.0;
    for (double x : v) norm += x * x;
  }
  norm = std::sqrt(norm);
  Embedding out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

inline double l2(const Embedding& a, const Embedding& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

inline BoundingBox clamp_into(BoundingBox b, double width, double height) {
  b.w = std::clamp(b.w, 1.0, width);
  b.h = std::clamp(b.h, 1.0, height);
  b.x = std::clamp(b.x, 0.0, width - b.w);
  b.y = std::clamp(b.y, 0.0, height - b.h);
  return b;
}

inline bool contains(const BoundingBox& region, double px, double py) {
  return px >= region.x && px < region.right() && py >= region.y && py < region.bottom();
}

}  // namespace detail

/// Ground embeddings by rejection sampling on the unit sphere.
inline std::vector<Identity> generate_identities(const ScenarioConfig& cfg) {
  constexpr int kMaxAttempts = 10000;
  SplitMix64 rng = substream(cfg.seed, detail::embeddings_tag);
  std::vector<Identity> ids;
  for (int i = 0; i < cfg.identities; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      Embedding e = detail::random_unit(rng, cfg.embedding_dim);
      placed = std::all_of(ids.begin(), ids.end(), [&](const Identity& o) {
        return detail::l2(o.embedding, e) >= cfg.identity_min_separation;
      });
      if (placed) ids.push_back({i + 1, std::move(e)});
    }
    if (!placed) {
      fail(ErrorCategory::config, "scenario: cannot place " + std::to_string(cfg.identities) +
                                      " identities with separation " + std::to_string(cfg.identity_min_separation));
    }
  }
  return ids;
}

/// Deterministic scenario for a given config (including its seed).
inline Scenario generate(const ScenarioConfig& cfg) {
  cfg.validate();
  Scenario sc;
  sc.config = cfg;
  sc.truth.identities = generate_identities(cfg);
  const auto W = cfg.image_width;
  const auto H = cfg.image_height;

  // Which identities appear in which camera; every identity appears somewhere.
  std::vector<std::vector<char>> present(static_cast<std::size_t>(cfg.cameras),
                                         std::vector<char>(static_cast<std::size_t>(cfg.identities), 0));
  {
    SplitMix64 rng = substream(cfg.seed, detail::trajectories_tag, 0);
    for (int id = 0; id < cfg.identities; ++id) {
      bool any = false;
      for (int c = 0; c < cfg.cameras; ++c) {
        present[c][id] = rng.uniform() < cfg.presence_prob;
        any = any || present[c][id];
      }
      if (!any) present[static_cast<std::size_t>(id % cfg.cameras)][id] = 1;
    }
  }

  for (int c = 0; c < cfg.cameras; ++c) {
    SplitMix64 traj = substream(cfg.seed, detail::trajectories_tag, static_cast<std::uint64_t>(c) + 1);
    SplitMix64 motion = substream(cfg.seed, detail::motion_tag, static_cast<std::uint64_t>(c));
    SplitMix64 emit = substream(cfg.seed, detail::detections_tag, static_cast<std::uint64_t>(c));

    // Shared camera shake.
    std::vector<std::pair<double, double>> offset(static_cast<std::size_t>(cfg.frames), {0.0, 0.0});
    if (cfg.global_motion_sigma > 0.0) {
      double ox = 0.0, oy = 0.0;
      for (long f = 0; f < cfg.frames; ++f) {
        ox += cfg.global_motion_sigma * motion.normal();
        oy += cfg.global_motion_sigma * motion.normal();
        offset[static_cast<std::size_t>(f)] = {ox, oy};
      }
    }

    CameraTruth truth;
    truth.camera_id = c;
    for (int id = 0; id < cfg.identities; ++id) {
      // Draw the trajectory unconditionally so presence does not shift the stream.
      const long min_len = std::max<long>(1, static_cast<long>(std::ceil(cfg.min_visible_fraction * cfg.frames)));
      const long len = min_len + static_cast<long>(traj.uniform() * static_cast<double>(cfg.frames - min_len + 1));
      const long length = std::min(len, cfg.frames);
      const long start = static_cast<long>(traj.uniform() * static_cast<double>(cfg.frames - length + 1));
      const double h = traj.uniform(cfg.min_box_height, cfg.max_box_height);
      const double w = h * traj.uniform(cfg.min_aspect, cfg.max_aspect);
      const double x0 = traj.uniform(0.0, W - w);
      const double y0 = traj.uniform(0.0, H - h);
      const double span = static_cast<double>(std::max<long>(length - 1, 1));
      const double x1 = std::clamp(x0 + traj.uniform(-cfg.max_speed, cfg.max_speed) * span, 0.0, W - w);
      const double y1 = std::clamp(y0 + traj.uniform(-cfg.max_speed, cfg.max_speed) * span, 0.0, H - h);
      const double vx = (x1 - x0) / span;
      const double vy = (y1 - y0) / span;
      if (!present[c][id]) continue;
      for (long k = 0; k < length; ++k) {
        const long f = start + k;
        BoundingBox b{x0 + vx * static_cast<double>(k), y0 + vy * static_cast<double>(k), w, h};
        b.x += offset[static_cast<std::size_t>(f)].first;
        b.y += offset[static_cast<std::size_t>(f)].second;
        truth.boxes.push_back({f, id + 1, detail::clamp_into(b, W, H)});
      }
      truth.identities.push_back(id + 1);
    }
    std::sort(truth.boxes.begin(), truth.boxes.end(), [](const LabeledBox& a, const LabeledBox& b) {
      return std::pair(a.frame, a.id) < std::pair(b.frame, b.id);
    });

    std::vector<Detection> dets;
    const double per_dim_sigma =
        cfg.embedding_noise_sigma / std::sqrt(static_cast<double>(cfg.embedding_dim));
    std::size_t cursor = 0;
    for (long f = 0; f < cfg.frames; ++f) {
      for (; cursor < truth.boxes.size() && truth.boxes[cursor].frame == f; ++cursor) {
        const LabeledBox& tb = truth.boxes[cursor];
        const bool occluded = std::any_of(cfg.occlusions.begin(), cfg.occlusions.end(), [&](const Occlusion& o) {
          return o.camera == c && f >= o.frame_begin && f < o.frame_end &&
                 detail::contains(o.region, tb.box.center_x(), tb.box.center_y());
        });
        const bool missed = emit.uniform() < cfg.miss_prob;
        if (occluded || missed) continue;

        Detection d;
        d.frame = f;
        d.box = tb.box;
        if (cfg.motion_jitter_sigma > 0.0) {
          d.box.x += cfg.motion_jitter_sigma * emit.normal();
          d.box.y += cfg.motion_jitter_sigma * emit.normal();
          d.box.w += cfg.motion_jitter_sigma * emit.normal();
          d.box.h += cfg.motion_jitter_sigma * emit.normal();
          d.box = detail::clamp_into(d.box, W, H);
        }
        d.confidence = emit.uniform(0.5, 1.0);
        const Embedding& ground = sc.truth.identities[static_cast<std::size_t>(tb.id - 1)].embedding;
        if (cfg.embedding_noise_sigma > 0.0) {
          std::vector<double> v(ground.size());
          double norm = 0.0;
          for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = static_cast<double>(ground[i]) + per_dim_sigma * emit.normal();
            norm += v[i] * v[i];
          }
          norm = std::sqrt(norm);
          Embedding e(v.size());
          for (std::size_t i = 0; i < v.size(); ++i) e[i] = static_cast<float>(v[i] / norm);
          d.embedding = std::move(e);
        } else {
          d.embedding = ground;
        }
        dets.push_back(std::move(d));
      }
      const int false_positives = emit.poisson(cfg.false_positive_rate);
      for (int k = 0; k < false_positives; ++k) {
        Detection d;
        d.frame = f;
        const double h = emit.uniform(cfg.min_box_height, cfg.max_box_height);
        const double w = h * emit.uniform(cfg.min_aspect, cfg.max_aspect);
        d.box = {emit.uniform(0.0, W - w), emit.uniform(0.0, H - h), w, h};
        d.confidence = emit.uniform(0.5, 1.0);
        d.embedding = detail::random_unit(emit, cfg.embedding_dim);
        dets.push_back(std::move(d));
      }
    }
    sc.detections.push_back(std::move(dets));
    sc.truth.cameras.push_back(std::move(truth));
  }
  return sc;
}

/// Largest pairwise L2 distance between embeddings of the same identity and
/// smallest between different identities, over the given labelled vectors.
struct SeparationStats {
  double max_intra = 0.0;
  double min_inter = std::numeric_limits<double>::infinity();
};

template <class Vec>
SeparationStats separation(const std::vector<std::pair<int, Vec>>& labelled) {
  SeparationStats s;
  for (std::size_t i = 0; i < labelled.size(); ++i) {
    for (std::size_t j = i + 1; j < labelled.size(); ++j) {
      const double d = (labelled[i].second - labelled[j].second).norm();
      if (labelled[i].first == labelled[j].first) {
        s.max_intra = std::max(s.max_intra, d);
      } else {
        s.min_inter = std::min(s.min_inter, d);
      }
    }
  }
  return s;
}

}  // namespace mcmot::sim

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "mcmot/association.hpp"
#include "mcmot/geometry.hpp"
#include "mcmot/io/config.hpp"
#include "mcmot/metrics.hpp"
#include "mcmot/sim.hpp"
#include "mcmot/tracker.hpp"

namespace mcmot {

/// Confidence floor, then per-class NMS.
inline std::vector<Detection> filter_detections(std::span<const Detection> dets, const io::PipelineConfig& cfg) {
  std::vector<Detection> kept;
  const double floor = cfg.ingest_threshold();
  for (const Detection& d : dets) {
    if (d.confidence >= floor) kept.push_back(d);
  }
  return nms(kept, cfg.tracker.nms_threshold);
}

struct CameraRun {
  int camera_id = 0;
  std::vector<Tracklet> tracklets;
  long frames_processed = 0;
};

/// Tracks one camera's frame-sorted detection stream. Every kept frame in
/// [0, num_frames) is stepped, including frames without detections;
/// `num_frames` defaults to one past the last detection frame.
inline CameraRun track_camera(int camera_id, std::span<const Detection> dets, const io::PipelineConfig& cfg,
                              std::optional<long> num_frames = std::nullopt) {
  cfg.validate();
  CameraRun run;
  run.camera_id = camera_id;
  Tracker tracker(cfg.tracker, camera_id);
  const long end = num_frames.value_or(dets.empty() ? 0 : dets.back().frame + 1);
  std::size_t cursor = 0;
  for (long f = 0; f < end; ++f) {
    const std::size_t begin = cursor;
    while (cursor < dets.size() && dets[cursor].frame == f) ++cursor;
    if (cursor < dets.size() && dets[cursor].frame < f) {
      fail(ErrorCategory::domain, "detections are not sorted by frame");
    }
    if (!cfg.decimation.keeps(f)) continue;
    tracker.step(f, filter_detections(dets.subspan(begin, cursor - begin), cfg));
    ++run.frames_processed;
  }
  run.tracklets = tracker.export_tracklets();
  return run;
}

/// Runs one tracker per camera on up to `threads` workers. Each worker owns
/// its tracker; results are placed by camera index so output never depends
/// on scheduling.
inline std::vector<CameraRun> track_cameras(const std::map<int, std::vector<Detection>>& streams,
                                            const io::PipelineConfig& cfg, unsigned threads = 1,
                                            std::optional<long> num_frames = std::nullopt) {
  std::vector<std::pair<int, const std::vector<Detection>*>> jobs;
  for (const auto& [cam, dets] : streams) jobs.emplace_back(cam, &dets);
  std::vector<CameraRun> out(jobs.size());
  if (threads <= 1 || jobs.size() <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = track_camera(jobs[i].first, *jobs[i].second, cfg, num_frames);
    return out;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        out[i] = track_camera(jobs[i].first, *jobs[i].second, cfg, num_frames);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned n = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

struct AssociationResult {
  AssociationConfig config;
  std::vector<Cluster> clusters;
  std::size_t unique_count = 0;
};

/// Everything a results file records.
struct PipelineResult {
  std::vector<Tracklet> tracklets;   // all exported tracklets, (camera, track) order
  std::vector<char> kept;            // per tracklet: survived refinement
  std::vector<AssociationResult> associations;
  long frames_processed = 0;
  std::optional<double> wall_time_s;
  std::optional<CountReport> count_report;
  std::vector<int> camera_ids;  // cameras processed, including those without tracklets
};

/// Associates tracklets with each requested method, then applies refinement
/// (when enabled): refined-out tracklets leave their clusters, empty clusters
/// disappear and global ids are renumbered 1..K in order.
inline std::vector<AssociationResult> associate_and_refine(const std::map<int, std::vector<Tracklet>>& per_camera,
                                                           const io::PipelineConfig& cfg,
                                                           const std::vector<AssociationMethod>& methods,
                                                           std::vector<char>* kept_out = nullptr) {
  std::set<TrackletKey> dropped;
  if (cfg.refine_enabled) {
    for (const auto& [cam, ts] : per_camera) {
      for (const Tracklet& t : ts) {
        if (!passes_refine(t, cfg.refine)) dropped.emplace(t.camera_id, t.track_id);
      }
    }
  }
  if (kept_out) {
    kept_out->clear();
    for (const auto& [cam, ts] : per_camera) {
      for (const Tracklet& t : ts) kept_out->push_back(!dropped.count({t.camera_id, t.track_id}));
    }
  }

  std::vector<AssociationResult> out;
  for (AssociationMethod m : methods) {
    AssociationConfig ac = cfg.association;
    ac.method = m;
    std::vector<Cluster> raw = associate_multicamera(per_camera, ac);
    std::vector<Cluster> clusters;
    for (Cluster& c : raw) {
      Cluster k;
      for (std::size_t i = 0; i < c.members.size(); ++i) {
        if (dropped.count(c.members[i])) continue;
        k.members.push_back(c.members[i]);
        k.member_embeddings.push_back(std::move(c.member_embeddings[i]));
      }
      if (k.members.empty()) continue;
      k.recompute_centroid();
      k.global_id = static_cast<int>(clusters.size()) + 1;
      clusters.push_back(std::move(k));
    }
    AssociationResult r{ac, std::move(clusters), 0};
    r.unique_count = count_unique(r.clusters);
    out.push_back(std::move(r));
  }
  return out;
}

/// Track every camera, then associate. Wall time covers both stages.
inline PipelineResult run_pipeline(const std::map<int, std::vector<Detection>>& streams, const io::PipelineConfig& cfg,
                                   const std::vector<AssociationMethod>& methods, unsigned threads = 1,
                                   std::optional<long> num_frames = std::nullopt) {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineResult res;
  std::map<int, std::vector<Tracklet>> per_camera;
  for (CameraRun& run : track_cameras(streams, cfg, threads, num_frames)) {
    res.frames_processed += run.frames_processed;
    res.camera_ids.push_back(run.camera_id);
    per_camera[run.camera_id] = std::move(run.tracklets);
  }
  res.associations = associate_and_refine(per_camera, cfg, methods, &res.kept);
  for (auto& [cam, ts] : per_camera) {
    for (Tracklet& t : ts) res.tracklets.push_back(std::move(t));
  }
  res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// ---------------------------------------------------------------------------
// Evaluation against ground truth

/// Truth identity for each (camera, track, frame) row that overlaps a truth
/// box, using the same per-frame correspondence as id_switches.
inline std::map<TrackletKey, std::vector<int>> tracklet_identity_votes(const std::vector<Tracklet>& tracklets,
                                                                       const sim::GroundTruth& truth) {
  std::map<TrackletKey, std::vector<int>> votes;
  std::map<int, const sim::CameraTruth*> cams;
  for (const sim::CameraTruth& c : truth.cameras) cams[c.camera_id] = &c;
  std::map<int, std::vector<LabeledBox>> hyp;
  for (const Tracklet& t : tracklets) {
    votes[{t.camera_id, t.track_id}];
    for (std::size_t i = 0; i < t.length(); ++i) hyp[t.camera_id].push_back({t.frames[i], t.track_id, t.boxes[i]});
  }
  for (const auto& [cam, boxes] : hyp) {
    auto it = cams.find(cam);
    if (it == cams.end()) continue;
    for (const auto& [frame, tid, hid] : frame_correspondences(boxes, it->second->boxes)) {
      votes[{cam, hid}].push_back(tid);
    }
  }
  return votes;
}

/// TP/FP/FN of one association against the truth identities present.
inline ConfusionCounts evaluate_clusters(const std::vector<Cluster>& clusters, const std::vector<Tracklet>& tracklets,
                                         const sim::GroundTruth& truth) {
  const auto votes = tracklet_identity_votes(tracklets, truth);
  std::vector<std::vector<int>> cluster_votes;
  for (const Cluster& c : clusters) {
    std::vector<int> v;
    for (const TrackletKey& k : c.members) {
      if (auto it = votes.find(k); it != votes.end()) v.insert(v.end(), it->second.begin(), it->second.end());
    }
    cluster_votes.push_back(std::move(v));
  }
  const std::vector<int> ids = truth.present_identities();
  return count_confusion(cluster_votes, ids);
}

/// ID switches summed over cameras, tracklets as hypotheses.
inline std::size_t total_id_switches(const std::vector<Tracklet>& tracklets, const sim::GroundTruth& truth) {
  std::size_t total = 0;
  for (const sim::CameraTruth& c : truth.cameras) {
    std::vector<LabeledBox> hyp;
    for (const Tracklet& t : tracklets) {
      if (t.camera_id != c.camera_id) continue;
      for (std::size_t i = 0; i < t.length(); ++i) hyp.push_back({t.frames[i], t.track_id, t.boxes[i]});
    }
    total += id_switches(hyp, c.boxes);
  }
  return total;
}

/// Detection streams of a scenario keyed by camera id.
inline std::map<int, std::vector<Detection>> scenario_streams(const sim::Scenario& sc) {
  std::map<int, std::vector<Detection>> out;
  for (std::size_t c = 0; c < sc.detections.size(); ++c) out[sc.truth.cameras[c].camera_id] = sc.detections[c];
  return out;
}

}  // namespace mcmot

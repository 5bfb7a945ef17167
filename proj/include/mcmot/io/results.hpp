#pragma once

// JSON documents. Floats are rounded to 9 significant digits before being
// stored, so the serializer's shortest round-trip output never exceeds them.
//
// results  {"format":"mcmot-results/1", "cameras":[...], "tracklets":[...],
//           "associations":[{"method","threshold","intra_first","clusters":[
//           {"global_id","members":[[camera,track],...]}],"unique_count"}],
//           "unique_count", "count_report"?, "timing":{...}}
// truth    {"format":"mcmot-truth/1", "cameras":[{"camera_id","identities",
//           "boxes":[[frame,identity,x,y,w,h],...]}], "identities":[{"id",
//           "embedding":[...]}], "unique_count"}

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcmot/error.hpp"
#include "mcmot/io/config.hpp"
#include "mcmot/io/formats.hpp"
#include "mcmot/metrics.hpp"
#include "mcmot/pipeline.hpp"
#include "mcmot/sim.hpp"

namespace mcmot::io {

using nlohmann::json;

inline constexpr const char* kResultsFormat = "mcmot-results/1";
inline constexpr const char* kTruthFormat = "mcmot-truth/1";

inline json box_json(const BoundingBox& b) {
  return json::array({round_sig9(b.x), round_sig9(b.y), round_sig9(b.w), round_sig9(b.h)});
}

inline json optional_json(const std::optional<double>& v) { return v ? json(round_sig9(*v)) : json(nullptr); }

inline std::optional<double> optional_from(const json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

/// Writes a JSON document as UTF-8 with two-space indent and a final LF.
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json parse_json(std::istream& in, const std::string& source) {
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCategory::parse, source + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// CountReport

inline json to_json(const CountReport& r) {
  json j;
  json pred = json::array(), truth = json::array();
  for (double v : r.per_set_predicted) pred.push_back(round_sig9(v));
  for (double v : r.per_set_truth) truth.push_back(round_sig9(v));
  j["per_set_predicted"] = pred;
  j["per_set_truth"] = truth;
  j["l2_error"] = round_sig9(r.l2_error);
  j["tp"] = r.confusion.tp;
  j["fp"] = r.confusion.fp;
  j["fn"] = r.confusion.fn;
  j["accuracy"] = optional_json(r.ratios.accuracy);
  j["precision"] = optional_json(r.ratios.precision);
  j["recall"] = optional_json(r.ratios.recall);
  j["f1"] = optional_json(r.ratios.f1);
  return j;
}

// ---------------------------------------------------------------------------
// Results

/// `reproducible` leaves wall-clock fields null so repeated runs are
/// byte-identical; the caller still measures and reports timing elsewhere.
inline json results_to_json(const PipelineResult& r, bool reproducible = false) {
  json j;
  j["format"] = kResultsFormat;
  j["cameras"] = r.camera_ids;
  json tracklets = json::array();
  for (std::size_t i = 0; i < r.tracklets.size(); ++i) {
    const Tracklet& t = r.tracklets[i];
    json boxes = json::array();
    for (const BoundingBox& b : t.boxes) boxes.push_back(box_json(b));
    tracklets.push_back({{"camera_id", t.camera_id},
                         {"track_id", t.track_id},
                         {"frames", t.frames},
                         {"boxes", boxes},
                         {"mean_confidence", round_sig9(t.mean_confidence)},
                         {"kept", i < r.kept.size() ? static_cast<bool>(r.kept[i]) : true}});
  }
  j["tracklets"] = tracklets;
  json assoc = json::array();
  for (const AssociationResult& a : r.associations) {
    json clusters = json::array();
    for (const Cluster& c : a.clusters) {
      json members = json::array();
      for (const auto& [cam, tid] : c.members) members.push_back(json::array({cam, tid}));
      clusters.push_back({{"global_id", c.global_id}, {"members", members}});
    }
    assoc.push_back({{"method", std::string(to_string(a.config.method))},
                     {"threshold", round_sig9(a.config.threshold)},
                     {"intra_first", a.config.intra_first},
                     {"clusters", clusters},
                     {"unique_count", a.unique_count}});
  }
  j["associations"] = assoc;
  j["unique_count"] = r.associations.empty() ? 0 : r.associations.front().unique_count;
  if (r.count_report) j["count_report"] = to_json(*r.count_report);
  json timing = {{"frames_processed", r.frames_processed}, {"wall_time_s", nullptr}, {"effective_fps", nullptr}};
  if (!reproducible && r.wall_time_s) {
    const double wall = *r.wall_time_s;
    timing["wall_time_s"] = round_sig9(wall);
    if (wall > 0.0) timing["effective_fps"] = round_sig9(static_cast<double>(r.frames_processed) / wall);
  }
  j["timing"] = timing;
  return j;
}

/// Reads the parts of a results file needed for evaluation. Cluster
/// embeddings are not stored, so clusters come back with members only.
inline PipelineResult results_from_json(const json& j) {
  try {
    if (j.value("format", std::string()) != kResultsFormat) {
      fail(ErrorCategory::parse, "results: unsupported format tag");
    }
    PipelineResult r;
    r.camera_ids = j.at("cameras").get<std::vector<int>>();
    for (const json& t : j.at("tracklets")) {
      Tracklet tl;
      tl.camera_id = t.at("camera_id").get<int>();
      tl.track_id = t.at("track_id").get<int>();
      tl.frames = t.at("frames").get<std::vector<long>>();
      for (const json& b : t.at("boxes")) tl.boxes.push_back({b.at(0), b.at(1), b.at(2), b.at(3)});
      if (tl.boxes.size() != tl.frames.size()) fail(ErrorCategory::parse, "results: frames/boxes length mismatch");
      tl.mean_confidence = t.at("mean_confidence").get<double>();
      r.kept.push_back(t.value("kept", true));
      r.tracklets.push_back(std::move(tl));
    }
    for (const json& a : j.at("associations")) {
      AssociationResult ar;
      ar.config.method = parse_method(a.at("method").get<std::string>());
      ar.config.threshold = a.at("threshold").get<double>();
      ar.config.intra_first = a.at("intra_first").get<bool>();
      for (const json& c : a.at("clusters")) {
        Cluster cl;
        cl.global_id = c.at("global_id").get<int>();
        for (const json& m : c.at("members")) cl.members.emplace_back(m.at(0).get<int>(), m.at(1).get<int>());
        ar.clusters.push_back(std::move(cl));
      }
      ar.unique_count = a.at("unique_count").get<std::size_t>();
      if (ar.unique_count != ar.clusters.size()) fail(ErrorCategory::parse, "results: unique_count != cluster count");
      r.associations.push_back(std::move(ar));
    }
    const json& timing = j.at("timing");
    r.frames_processed = timing.at("frames_processed").get<long>();
    r.wall_time_s = optional_from(timing.at("wall_time_s"));
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCategory::parse, std::string("results: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Truth

/// Truth document for the given cameras (all cameras when `only` is empty).
/// Ground embeddings of every identity are always listed.
inline json truth_to_json(const sim::GroundTruth& g, std::optional<int> only = std::nullopt) {
  json j;
  j["format"] = kTruthFormat;
  json cams = json::array();
  std::set<int> present;
  for (const sim::CameraTruth& c : g.cameras) {
    if (only && c.camera_id != *only) continue;
    json boxes = json::array();
    for (const LabeledBox& b : c.boxes) {
      boxes.push_back(json::array({b.frame, b.id, round_sig9(b.box.x), round_sig9(b.box.y), round_sig9(b.box.w),
                                   round_sig9(b.box.h)}));
    }
    cams.push_back({{"camera_id", c.camera_id}, {"identities", c.identities}, {"boxes", boxes}});
    present.insert(c.identities.begin(), c.identities.end());
  }
  j["cameras"] = cams;
  json ids = json::array();
  for (const sim::Identity& id : g.identities) {
    json e = json::array();
    for (float v : id.embedding) e.push_back(round_sig9(static_cast<double>(v)));
    ids.push_back({{"id", id.id}, {"embedding", e}});
  }
  j["identities"] = ids;
  j["unique_count"] = present.size();
  return j;
}

inline sim::GroundTruth truth_from_json(const json& j) {
  try {
    if (j.value("format", std::string()) != kTruthFormat) fail(ErrorCategory::parse, "truth: unsupported format tag");
    sim::GroundTruth g;
    for (const json& c : j.at("cameras")) {
      sim::CameraTruth ct;
      ct.camera_id = c.at("camera_id").get<int>();
      ct.identities = c.at("identities").get<std::vector<int>>();
      for (const json& b : c.at("boxes")) {
        ct.boxes.push_back({b.at(0).get<long>(), b.at(1).get<int>(), {b.at(2), b.at(3), b.at(4), b.at(5)}});
      }
      g.cameras.push_back(std::move(ct));
    }
    for (const json& id : j.at("identities")) {
      g.identities.push_back({id.at("id").get<int>(), id.at("embedding").get<std::vector<float>>()});
    }
    return g;
  } catch (const json::exception& e) {
    fail(ErrorCategory::parse, std::string("truth: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Scenario config

inline json to_json(const sim::ScenarioConfig& c) {
  json occ = json::array();
  for (const sim::Occlusion& o : c.occlusions) {
    occ.push_back({{"camera", o.camera}, {"frame_begin", o.frame_begin}, {"frame_end", o.frame_end},
                   {"region", box_json(o.region)}});
  }
  return {{"seed", c.seed},
          {"cameras", c.cameras},
          {"identities", c.identities},
          {"frames", c.frames},
          {"image_width", c.image_width},
          {"image_height", c.image_height},
          {"embedding_dim", c.embedding_dim},
          {"embedding_noise_sigma", c.embedding_noise_sigma},
          {"identity_min_separation", c.identity_min_separation},
          {"miss_prob", c.miss_prob},
          {"false_positive_rate", c.false_positive_rate},
          {"occlusions", occ},
          {"motion_jitter_sigma", c.motion_jitter_sigma},
          {"global_motion_sigma", c.global_motion_sigma},
          {"presence_prob", c.presence_prob},
          {"min_visible_fraction", c.min_visible_fraction},
          {"max_speed", c.max_speed},
          {"min_box_height", c.min_box_height},
          {"max_box_height", c.max_box_height},
          {"min_aspect", c.min_aspect},
          {"max_aspect", c.max_aspect}};
}

/// Scenario config from a JSON object; missing keys keep their defaults,
/// unknown keys are rejected.
inline sim::ScenarioConfig scenario_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCategory::config, "scenario configuration must be a JSON object");
  sim::ScenarioConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "cameras") c.cameras = v.get<int>();
      else if (key == "identities") c.identities = v.get<int>();
      else if (key == "frames") c.frames = v.get<long>();
      else if (key == "image_width") c.image_width = v.get<double>();
      else if (key == "image_height") c.image_height = v.get<double>();
      else if (key == "embedding_dim") c.embedding_dim = v.get<std::size_t>();
      else if (key == "embedding_noise_sigma") c.embedding_noise_sigma = v.get<double>();
      else if (key == "identity_min_separation") c.identity_min_separation = v.get<double>();
      else if (key == "miss_prob") c.miss_prob = v.get<double>();
      else if (key == "false_positive_rate") c.false_positive_rate = v.get<double>();
      else if (key == "motion_jitter_sigma") c.motion_jitter_sigma = v.get<double>();
      else if (key == "global_motion_sigma") c.global_motion_sigma = v.get<double>();
      else if (key == "presence_prob") c.presence_prob = v.get<double>();
      else if (key == "min_visible_fraction") c.min_visible_fraction = v.get<double>();
      else if (key == "max_speed") c.max_speed = v.get<double>();
      else if (key == "min_box_height") c.min_box_height = v.get<double>();
      else if (key == "max_box_height") c.max_box_height = v.get<double>();
      else if (key == "min_aspect") c.min_aspect = v.get<double>();
      else if (key == "max_aspect") c.max_aspect = v.get<double>();
      else if (key == "occlusions") {
        for (const json& o : v) {
          const json& r = o.at("region");
          c.occlusions.push_back({o.at("camera").get<int>(), o.at("frame_begin").get<long>(),
                                  o.at("frame_end").get<long>(), {r.at(0), r.at(1), r.at(2), r.at(3)}});
        }
      } else {
        fail(ErrorCategory::config, "unknown scenario key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCategory::config, std::string("ill-typed scenario value: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalSet {
  PipelineResult results;
  sim::GroundTruth truth;
};

/// One CountReport per association method. Sets are paired by position;
/// each set's camera ids must match its truth's.
inline std::vector<std::pair<std::string, CountReport>> evaluate(const std::vector<EvalSet>& sets) {
  if (sets.empty()) fail(ErrorCategory::domain, "evaluate: no result sets");
  const std::size_t methods = sets.front().results.associations.size();
  for (const EvalSet& s : sets) {
    std::set<int> rc(s.results.camera_ids.begin(), s.results.camera_ids.end());
    std::set<int> tc;
    for (const sim::CameraTruth& c : s.truth.cameras) tc.insert(c.camera_id);
    if (rc != tc) fail(ErrorCategory::mismatch, "camera set of results does not match truth");
    if (s.results.associations.size() != methods) {
      fail(ErrorCategory::mismatch, "result sets carry different association methods");
    }
  }
  std::vector<std::pair<std::string, CountReport>> out;
  for (std::size_t m = 0; m < methods; ++m) {
    std::vector<double> pred, truth;
    ConfusionCounts total;
    for (const EvalSet& s : sets) {
      const AssociationResult& a = s.results.associations[m];
      pred.push_back(static_cast<double>(a.unique_count));
      truth.push_back(static_cast<double>(s.truth.present_identities().size()));
      total += evaluate_clusters(a.clusters, s.results.tracklets, s.truth);
    }
    out.emplace_back(std::string(to_string(sets.front().results.associations[m].config.method)),
                     make_count_report(std::move(pred), std::move(truth), total));
  }
  return out;
}

}  // namespace mcmot::io

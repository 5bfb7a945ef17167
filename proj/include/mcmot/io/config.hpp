#pragma once

#include <optional>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "mcmot/association.hpp"
#include "mcmot/error.hpp"
#include "mcmot/metrics.hpp"
#include "mcmot/tracker.hpp"

namespace mcmot::io {

/// Which frames of a stream reach the tracker: frame f is kept when
/// f % stride == 0 and f % block < keep. The tracker treats consecutive kept
/// frames as one time step apart.
struct Decimation {
  int stride = 1;
  int keep = 1;
  int block = 1;

  bool keeps(long frame) const { return frame % stride == 0 && frame % block < keep; }

  void validate() const {
    if (stride < 1 || block < 1 || keep < 1 || keep > block) {
      fail(ErrorCategory::config, "decimation requires stride >= 1 and 1 <= keep <= block");
    }
  }
};

/// Everything a pipeline run needs, usually derived from a named preset.
struct PipelineConfig {
  std::string preset = "default";
  TrackerConfig tracker;
  /// Detector-level score floor applied together with tracker.min_confidence.
  double conf_threshold = 0.0;
  Decimation decimation;
  bool refine_enabled = false;
  RefineConfig refine;
  AssociationConfig association;
  // Carried for completeness of the study2 table; no stage consumes them.
  std::optional<double> pose_threshold;
  std::optional<double> pose_variance;

  double ingest_threshold() const { return std::max(tracker.min_confidence, conf_threshold); }

  void validate() const {
    tracker.validate();
    decimation.validate();
    refine.validate();
    association.validate();
    if (conf_threshold < 0.0 || conf_threshold > 1.0) fail(ErrorCategory::config, "conf_threshold must lie in [0,1]");
    if (decimation.stride != tracker.frame_stride) {
      fail(ErrorCategory::config, "frame_stride and decimation stride disagree");
    }
  }

  friend bool operator==(const PipelineConfig& a, const PipelineConfig& b);
};

/// Engineering defaults for synthetic data; no published table behind them.
inline PipelineConfig default_preset() { return PipelineConfig{}; }

/// Crowded fixed-camera setting: detection threshold 0.3, confidence
/// threshold 0.6 (applied to tracklets at export), NMS 0.4, 180-frame track
/// buffer, 270 of every 300 frames processed.
inline PipelineConfig study1_preset() {
  PipelineConfig c;
  c.preset = "study1";
  c.tracker.min_confidence = 0.3;
  c.tracker.nms_threshold = 0.4;
  c.tracker.max_age = 180;
  c.decimation = {1, 270, 300};
  c.refine_enabled = true;
  c.refine.min_mean_confidence = 0.6;
  return c;
}

/// Moving-camera setting: max age 250, nn budget 100, Euclidean appearance
/// distance with max distance 0.05, min confidence 0.65, detector conf 0.25,
/// objects kept only if wider than 60 and taller than 50, every 4th frame.
inline PipelineConfig study2_preset() {
  PipelineConfig c;
  c.preset = "study2";
  c.tracker.max_age = 250;
  c.tracker.nn_budget = 100;
  c.tracker.appearance_metric = AppearanceMetric::euclidean;
  c.tracker.min_confidence = 0.65;
  c.tracker.max_appearance_distance = 0.05;
  c.tracker.nms_threshold = 1.0;
  c.tracker.frame_stride = 4;
  c.conf_threshold = 0.25;
  c.decimation = {4, 1, 1};
  c.refine_enabled = true;
  c.refine.min_width = 60.0;
  c.refine.min_height = 50.0;
  c.refine.min_mean_confidence = 0.65;
  c.pose_threshold = 0.25;
  c.pose_variance = 0.1;
  return c;
}

inline PipelineConfig preset_by_name(const std::string& name) {
  if (name == "default") return default_preset();
  if (name == "study1") return study1_preset();
  if (name == "study2") return study2_preset();
  fail(ErrorCategory::config, "unknown preset '" + name + "'");
}

inline AppearanceMetric parse_metric(const std::string& s) {
  if (s == "euclidean") return AppearanceMetric::euclidean;
  if (s == "cosine") return AppearanceMetric::cosine;
  fail(ErrorCategory::config, "unknown appearance metric '" + s + "'");
}

inline AssociationMethod parse_method(const std::string& s) {
  if (s == "euclidean") return AssociationMethod::euclidean;
  if (s == "voting") return AssociationMethod::voting;
  if (s == "euclidean+voting") return AssociationMethod::euclidean_voting;
  fail(ErrorCategory::config, "unknown association method '" + s + "'");
}

inline nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json j;
  j["preset"] = c.preset;
  j["min_confidence"] = c.tracker.min_confidence;
  j["conf_threshold"] = c.conf_threshold;
  j["nms_threshold"] = c.tracker.nms_threshold;
  j["max_age"] = c.tracker.max_age;
  j["n_init"] = c.tracker.n_init;
  j["nn_budget"] = c.tracker.nn_budget;
  j["max_appearance_distance"] = c.tracker.max_appearance_distance;
  j["max_iou_distance"] = c.tracker.max_iou_distance;
  j["appearance_metric"] = std::string(to_string(c.tracker.appearance_metric));
  j["gating_threshold"] = c.tracker.gating_threshold;
  j["matching_cascade"] = c.tracker.matching_cascade;
  j["std_weight_position"] = c.tracker.noise.std_weight_position;
  j["std_weight_velocity"] = c.tracker.noise.std_weight_velocity;
  j["frame_stride"] = c.decimation.stride;
  j["frame_keep"] = c.decimation.keep;
  j["frame_block"] = c.decimation.block;
  j["refine"] = c.refine_enabled;
  j["min_width"] = c.refine.min_width;
  j["min_height"] = c.refine.min_height;
  j["min_track_length"] = c.refine.min_track_length;
  j["min_mean_confidence"] = c.refine.min_mean_confidence;
  j["association_method"] = std::string(to_string(c.association.method));
  j["association_threshold"] = c.association.threshold;
  j["intra_first"] = c.association.intra_first;
  if (c.pose_threshold) j["pose_threshold"] = *c.pose_threshold;
  if (c.pose_variance) j["pose_variance"] = *c.pose_variance;
  return j;
}

/// Builds a config from `{"preset": name, <overrides>...}`. Unknown keys and
/// ill-typed values are config errors.
inline PipelineConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCategory::config, "configuration must be a JSON object");
  PipelineConfig c = preset_by_name(j.value("preset", std::string("default")));
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "preset") continue;
      else if (key == "min_confidence") c.tracker.min_confidence = v.get<double>();
      else if (key == "conf_threshold") c.conf_threshold = v.get<double>();
      else if (key == "nms_threshold") c.tracker.nms_threshold = v.get<double>();
      else if (key == "max_age") c.tracker.max_age = v.get<int>();
      else if (key == "n_init") c.tracker.n_init = v.get<int>();
      else if (key == "nn_budget") c.tracker.nn_budget = v.get<int>();
      else if (key == "max_appearance_distance") c.tracker.max_appearance_distance = v.get<double>();
      else if (key == "max_iou_distance") c.tracker.max_iou_distance = v.get<double>();
      else if (key == "appearance_metric") c.tracker.appearance_metric = parse_metric(v.get<std::string>());
      else if (key == "gating_threshold") c.tracker.gating_threshold = v.get<double>();
      else if (key == "matching_cascade") c.tracker.matching_cascade = v.get<bool>();
      else if (key == "std_weight_position") c.tracker.noise.std_weight_position = v.get<double>();
      else if (key == "std_weight_velocity") c.tracker.noise.std_weight_velocity = v.get<double>();
      else if (key == "frame_stride") c.decimation.stride = c.tracker.frame_stride = v.get<int>();
      else if (key == "frame_keep") c.decimation.keep = v.get<int>();
      else if (key == "frame_block") c.decimation.block = v.get<int>();
      else if (key == "refine") c.refine_enabled = v.get<bool>();
      else if (key == "min_width") c.refine.min_width = v.get<double>();
      else if (key == "min_height") c.refine.min_height = v.get<double>();
      else if (key == "min_track_length") c.refine.min_track_length = v.get<std::size_t>();
      else if (key == "min_mean_confidence") c.refine.min_mean_confidence = v.get<double>();
      else if (key == "association_method") c.association.method = parse_method(v.get<std::string>());
      else if (key == "association_threshold") c.association.threshold = v.get<double>();
      else if (key == "intra_first") c.association.intra_first = v.get<bool>();
      else if (key == "pose_threshold") c.pose_threshold = v.get<double>();
      else if (key == "pose_variance") c.pose_variance = v.get<double>();
      else fail(ErrorCategory::config, "unknown configuration key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::config, std::string("ill-typed configuration value: ") + e.what());
  }
  c.validate();
  return c;
}

inline bool operator==(const PipelineConfig& a, const PipelineConfig& b) { return to_json(a) == to_json(b); }

}  // namespace mcmot::io

#pragma once

// Directory layouts.
//
//   scenario dir   scenario.json, truth.json,
//                  cam<N>/detections.csv, cam<N>/embeddings.csv, cam<N>/truth.json
//   tracks dir     cam<N>.tracks.csv, cam<N>.embeddings.csv

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "mcmot/error.hpp"
#include "mcmot/io/formats.hpp"
#include "mcmot/io/results.hpp"
#include "mcmot/sim.hpp"

namespace mcmot::io {

namespace fs = std::filesystem;

/// Writes `text`, creating missing parent directories.
inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorCategory::io, "cannot create '" + path.parent_path().string() + "': " + ec.message());
  }
  auto out = open_output(path.string());
  out << text;
  if (!out) fail(ErrorCategory::io, "write to '" + path.string() + "' failed");
}

inline std::string read_text(const fs::path& path) {
  auto in = open_input(path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json read_json_file(const fs::path& path) {
  auto in = open_input(path.string());
  return parse_json(in, path.string());
}

inline fs::path camera_dir(const fs::path& root, int camera) { return root / ("cam" + std::to_string(camera)); }

/// Embedding sidecar for a track file: `x.tracks.csv` -> `x.embeddings.csv`.
inline fs::path track_embeddings_path(const fs::path& tracks) {
  const std::string s = tracks.string();
  const std::string suffix = ".tracks.csv";
  if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return s.substr(0, s.size() - suffix.size()) + ".embeddings.csv";
  }
  return s + ".embeddings.csv";
}

inline fs::path track_file_path(const fs::path& dir, int camera) {
  return dir / ("cam" + std::to_string(camera) + ".tracks.csv");
}

/// Writes a scenario; the same scenario always produces the same bytes.
inline void write_scenario(const fs::path& root, const sim::Scenario& sc) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) fail(ErrorCategory::io, "cannot create '" + root.string() + "': " + ec.message());
  write_text(root / "scenario.json", dump(to_json(sc.config)));
  write_text(root / "truth.json", dump(truth_to_json(sc.truth)));
  for (std::size_t c = 0; c < sc.detections.size(); ++c) {
    const int cam = sc.truth.cameras[c].camera_id;
    const fs::path dir = camera_dir(root, cam);
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCategory::io, "cannot create '" + dir.string() + "': " + ec.message());
    auto [rows, emb] = from_detections(sc.detections[c]);
    emb.dim = sc.config.embedding_dim;
    std::ostringstream d, e;
    write_detections(d, rows);
    write_embeddings(e, emb);
    write_text(dir / "detections.csv", d.str());
    write_text(dir / "embeddings.csv", e.str());
    write_text(dir / "truth.json", dump(truth_to_json(sc.truth, cam)));
  }
}

/// Detections (with embeddings when the sidecar exists) of one file pair.
inline std::vector<Detection> load_detections(const fs::path& detections, const std::optional<fs::path>& embeddings) {
  auto din = open_input(detections.string());
  const auto rows = read_detections(din, detections.string());
  if (!embeddings) return to_detections(rows, nullptr);
  auto ein = open_input(embeddings->string());
  const EmbeddingTable table = read_embeddings(ein, embeddings->string());
  return to_detections(rows, &table);
}

/// Camera ids found as `cam<N>` entries (directories or `cam<N>.tracks.csv`).
inline std::vector<int> list_cameras(const fs::path& dir, bool track_files) {
  if (!fs::is_directory(dir)) fail(ErrorCategory::io, "'" + dir.string() + "' is not a directory");
  static const std::regex cam_dir(R"(cam(\d+))");
  static const std::regex cam_tracks(R"(cam(\d+)\.tracks\.csv)");
  std::vector<int> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (track_files ? (entry.is_regular_file() && std::regex_match(name, m, cam_tracks))
                    : (entry.is_directory() && std::regex_match(name, m, cam_dir))) {
      ids.push_back(std::stoi(m[1].str()));
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

/// Per-camera detection streams of a scenario directory.
inline std::map<int, std::vector<Detection>> load_scenario_streams(const fs::path& root) {
  std::map<int, std::vector<Detection>> out;
  for (int cam : list_cameras(root, false)) {
    const fs::path dir = camera_dir(root, cam);
    const fs::path emb = dir / "embeddings.csv";
    out[cam] = load_detections(dir / "detections.csv", fs::exists(emb) ? std::optional(emb) : std::nullopt);
  }
  if (out.empty()) fail(ErrorCategory::io, "no cam<N> directories under '" + root.string() + "'");
  return out;
}

/// Writes a camera's tracklets as a track file plus embedding sidecar (the
/// sidecar only when the tracklets carry embeddings).
inline void write_track_files(const fs::path& tracks, const std::vector<Tracklet>& tracklets,
                              std::optional<fs::path> embeddings = std::nullopt) {
  auto [rows, emb] = from_tracklets(tracklets);
  std::ostringstream t;
  write_tracks(t, rows);
  write_text(tracks, t.str());
  const bool has_embeddings = std::any_of(tracklets.begin(), tracklets.end(),
                                          [](const Tracklet& tl) { return !tl.embeddings.empty(); });
  if (has_embeddings) {
    std::ostringstream e;
    write_embeddings(e, emb);
    write_text(embeddings.value_or(track_embeddings_path(tracks)), e.str());
  }
}

/// Tracklets of every `cam<N>.tracks.csv` in `dir`. Sidecars are required
/// when `require_embeddings` is set.
inline std::map<int, std::vector<Tracklet>> load_track_dir(const fs::path& dir, bool require_embeddings) {
  std::map<int, std::vector<Tracklet>> out;
  for (int cam : list_cameras(dir, true)) {
    const fs::path tracks = track_file_path(dir, cam);
    const fs::path emb = track_embeddings_path(tracks);
    auto tin = open_input(tracks.string());
    const auto rows = read_tracks(tin, tracks.string());
    if (fs::exists(emb)) {
      auto ein = open_input(emb.string());
      const EmbeddingTable table = read_embeddings(ein, emb.string());
      out[cam] = to_tracklets(cam, rows, &table);
    } else {
      if (require_embeddings && !rows.empty()) {
        fail(ErrorCategory::mismatch, "association needs embeddings but '" + emb.string() + "' is missing");
      }
      out[cam] = to_tracklets(cam, rows, nullptr);
    }
  }
  if (out.empty()) fail(ErrorCategory::io, "no cam<N>.tracks.csv files under '" + dir.string() + "'");
  return out;
}

}  // namespace mcmot::io

#pragma once

// CSV file formats (UTF-8, LF line endings, '.' decimal separator, floats
// written with 9 significant digits):
//
//   detections   frame,det_id,x,y,w,h,confidence,class_id
//   embeddings   frame,<key>,e0,...,e{D-1}      key = det_id or track_id
//   tracks       frame,track_id,x,y,w,h,confidence
//
// Rows are sorted by frame (then by id). The embedding dimension D is the
// header's column count minus two.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mcmot/error.hpp"
#include "mcmot/geometry.hpp"
#include "mcmot/tracker.hpp"

namespace mcmot::io {

/// Shortest text with 9 significant digits; "-0" is written as "0".
inline std::string format_float(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

/// Value after a write/read cycle through `format_float`.
inline double round_sig9(double v) {
  const std::string s = format_float(v);
  double out = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), out);
  return out;
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

[[noreturn]] inline void parse_error(const std::string& source, std::size_t line, const std::string& msg) {
  fail(ErrorCategory::parse, source + ":" + std::to_string(line) + ": " + msg);
}

template <class T>
T parse_number(std::string_view field, const std::string& source, std::size_t line, std::string_view what) {
  T value{};
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last || field.empty()) {
    parse_error(source, line, "invalid " + std::string(what) + " '" + std::string(field) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) parse_error(source, line, "non-finite " + std::string(what));
  }
  return value;
}

/// Reads lines, stripping a trailing '\r'; returns (line number, text) pairs.
inline std::vector<std::pair<std::size_t, std::string>> read_lines(std::istream& in) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out.emplace_back(n, std::move(line));
  }
  return out;
}

}  // namespace detail

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::io, "cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCategory::io, "cannot open '" + path + "' for writing");
  return out;
}

// ---------------------------------------------------------------------------
// Detections

inline constexpr std::string_view kDetectionHeader = "frame,det_id,x,y,w,h,confidence,class_id";

struct DetectionRow {
  long frame = 0;
  long det_id = 0;
  BoundingBox box;
  double confidence = 0.0;
  int class_id = 0;

  friend bool operator==(const DetectionRow&, const DetectionRow&) = default;
};

inline void write_detections(std::ostream& out, const std::vector<DetectionRow>& rows) {
  out << kDetectionHeader << '\n';
  for (const DetectionRow& r : rows) {
    out << r.frame << ',' << r.det_id << ',' << format_float(r.box.x) << ',' << format_float(r.box.y) << ','
        << format_float(r.box.w) << ',' << format_float(r.box.h) << ',' << format_float(r.confidence) << ','
        << r.class_id << '\n';
  }
}

inline std::vector<DetectionRow> read_detections(std::istream& in, const std::string& source = "detections") {
  const auto lines = detail::read_lines(in);
  if (lines.empty()) detail::parse_error(source, 1, "missing header");
  if (lines.front().second != kDetectionHeader) {
    detail::parse_error(source, lines.front().first, "expected header '" + std::string(kDetectionHeader) + "'");
  }
  std::vector<DetectionRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [n, text] = lines[i];
    const auto f = detail::split(text);
    if (f.size() != 8) detail::parse_error(source, n, "expected 8 fields, got " + std::to_string(f.size()));
    DetectionRow r;
    r.frame = detail::parse_number<long>(f[0], source, n, "frame");
    r.det_id = detail::parse_number<long>(f[1], source, n, "det_id");
    r.box.x = detail::parse_number<double>(f[2], source, n, "x");
    r.box.y = detail::parse_number<double>(f[3], source, n, "y");
    r.box.w = detail::parse_number<double>(f[4], source, n, "w");
    r.box.h = detail::parse_number<double>(f[5], source, n, "h");
    r.confidence = detail::parse_number<double>(f[6], source, n, "confidence");
    r.class_id = detail::parse_number<int>(f[7], source, n, "class_id");
    if (r.frame < 0) detail::parse_error(source, n, "negative frame index");
    if (r.confidence < 0.0 || r.confidence > 1.0) detail::parse_error(source, n, "confidence outside [0,1]");
    if (!(r.box.w > 0.0 && r.box.h > 0.0)) detail::parse_error(source, n, "box width and height must be positive");
    if (!rows.empty() && r.frame < rows.back().frame) detail::parse_error(source, n, "frames are not sorted");
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Embeddings

struct EmbeddingTable {
  std::string key_name = "det_id";
  std::size_t dim = 0;
  std::vector<std::pair<std::pair<long, long>, Embedding>> rows;  // ((frame, id), vector)

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;
};

inline void write_embeddings(std::ostream& out, const EmbeddingTable& t) {
  out << "frame," << t.key_name;
  for (std::size_t i = 0; i < t.dim; ++i) out << ",e" << i;
  out << '\n';
  for (const auto& [key, e] : t.rows) {
    if (e.size() != t.dim) fail(ErrorCategory::domain, "embedding length differs from table dimension");
    out << key.first << ',' << key.second;
    for (float v : e) out << ',' << format_float(static_cast<double>(v));
    out << '\n';
  }
}

inline EmbeddingTable read_embeddings(std::istream& in, const std::string& source = "embeddings") {
  const auto lines = detail::read_lines(in);
  if (lines.empty()) detail::parse_error(source, 1, "missing header");
  const auto header = detail::split(lines.front().second);
  if (header.size() < 3 || header[0] != "frame" || (header[1] != "det_id" && header[1] != "track_id")) {
    detail::parse_error(source, lines.front().first, "expected header 'frame,det_id|track_id,e0,...'");
  }
  EmbeddingTable t;
  t.key_name = std::string(header[1]);
  t.dim = header.size() - 2;
  for (std::size_t i = 0; i < t.dim; ++i) {
    if (header[i + 2] != "e" + std::to_string(i)) {
      detail::parse_error(source, lines.front().first, "embedding columns must be named e0..e{D-1}");
    }
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [n, text] = lines[i];
    const auto f = detail::split(text);
    if (f.size() != t.dim + 2) {
      detail::parse_error(source, n, "expected " + std::to_string(t.dim + 2) + " fields, got " + std::to_string(f.size()));
    }
    const long frame = detail::parse_number<long>(f[0], source, n, "frame");
    const long id = detail::parse_number<long>(f[1], source, n, t.key_name);
    Embedding e(t.dim);
    for (std::size_t k = 0; k < t.dim; ++k) e[k] = detail::parse_number<float>(f[k + 2], source, n, "embedding value");
    t.rows.push_back({{frame, id}, std::move(e)});
  }
  return t;
}

/// Joins detection rows with their embeddings. Every detection needs exactly
/// one embedding and every embedding must belong to a detection.
inline std::vector<Detection> to_detections(const std::vector<DetectionRow>& rows, const EmbeddingTable* emb) {
  std::vector<Detection> out;
  out.reserve(rows.size());
  std::map<std::pair<long, long>, const Embedding*> lookup;
  if (emb) {
    for (const auto& [key, e] : emb->rows) {
      if (!lookup.emplace(key, &e).second) {
        fail(ErrorCategory::mismatch, "duplicate embedding key (frame " + std::to_string(key.first) + ", " +
                                          emb->key_name + " " + std::to_string(key.second) + ")");
      }
    }
  }
  std::map<std::pair<long, long>, bool> seen;
  for (const DetectionRow& r : rows) {
    Detection d;
    d.frame = r.frame;
    d.box = r.box;
    d.confidence = r.confidence;
    d.class_id = r.class_id;
    const std::pair key{r.frame, r.det_id};
    if (!seen.emplace(key, true).second) {
      fail(ErrorCategory::mismatch, "duplicate detection key (frame " + std::to_string(r.frame) + ", det_id " +
                                        std::to_string(r.det_id) + ")");
    }
    if (emb) {
      auto it = lookup.find(key);
      if (it == lookup.end()) {
        fail(ErrorCategory::mismatch, "no embedding for detection (frame " + std::to_string(r.frame) + ", det_id " +
                                          std::to_string(r.det_id) + ")");
      }
      d.embedding = *it->second;
    }
    out.push_back(std::move(d));
  }
  if (emb) {
    for (const auto& [key, e] : emb->rows) {
      if (!seen.count(key)) {
        fail(ErrorCategory::mismatch, "embedding without detection (frame " + std::to_string(key.first) + ", det_id " +
                                          std::to_string(key.second) + ")");
      }
    }
  }
  return out;
}

/// Detection rows numbered 0..n-1 within each frame, plus their embeddings.
inline std::pair<std::vector<DetectionRow>, EmbeddingTable> from_detections(const std::vector<Detection>& dets) {
  std::vector<DetectionRow> rows;
  EmbeddingTable t;
  long frame = -1;
  long next_id = 0;
  for (const Detection& d : dets) {
    if (d.frame != frame) {
      frame = d.frame;
      next_id = 0;
    }
    rows.push_back({d.frame, next_id, d.box, d.confidence, d.class_id});
    if (d.embedding) {
      t.dim = d.embedding->size();
      t.rows.push_back({{d.frame, next_id}, *d.embedding});
    }
    ++next_id;
  }
  return {std::move(rows), std::move(t)};
}

// ---------------------------------------------------------------------------
// Tracks

inline constexpr std::string_view kTrackHeader = "frame,track_id,x,y,w,h,confidence";

struct TrackRow {
  long frame = 0;
  int track_id = 0;
  BoundingBox box;
  double confidence = 0.0;

  friend bool operator==(const TrackRow&, const TrackRow&) = default;
};

inline void write_tracks(std::ostream& out, const std::vector<TrackRow>& rows) {
  out << kTrackHeader << '\n';
  for (const TrackRow& r : rows) {
    out << r.frame << ',' << r.track_id << ',' << format_float(r.box.x) << ',' << format_float(r.box.y) << ','
        << format_float(r.box.w) << ',' << format_float(r.box.h) << ',' << format_float(r.confidence) << '\n';
  }
}

inline std::vector<TrackRow> read_tracks(std::istream& in, const std::string& source = "tracks") {
  const auto lines = detail::read_lines(in);
  if (lines.empty()) detail::parse_error(source, 1, "missing header");
  if (lines.front().second != kTrackHeader) {
    detail::parse_error(source, lines.front().first, "expected header '" + std::string(kTrackHeader) + "'");
  }
  std::vector<TrackRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [n, text] = lines[i];
    const auto f = detail::split(text);
    if (f.size() != 7) detail::parse_error(source, n, "expected 7 fields, got " + std::to_string(f.size()));
    TrackRow r;
    r.frame = detail::parse_number<long>(f[0], source, n, "frame");
    r.track_id = detail::parse_number<int>(f[1], source, n, "track_id");
    r.box.x = detail::parse_number<double>(f[2], source, n, "x");
    r.box.y = detail::parse_number<double>(f[3], source, n, "y");
    r.box.w = detail::parse_number<double>(f[4], source, n, "w");
    r.box.h = detail::parse_number<double>(f[5], source, n, "h");
    r.confidence = detail::parse_number<double>(f[6], source, n, "confidence");
    if (r.confidence < 0.0 || r.confidence > 1.0) detail::parse_error(source, n, "confidence outside [0,1]");
    if (!rows.empty() && r.frame < rows.back().frame) detail::parse_error(source, n, "frames are not sorted");
    rows.push_back(r);
  }
  return rows;
}

/// Flattens tracklets into frame-major track rows and a track_id-keyed
/// embedding table (empty when the tracklets carry no embeddings).
inline std::pair<std::vector<TrackRow>, EmbeddingTable> from_tracklets(const std::vector<Tracklet>& tracklets) {
  std::vector<std::pair<TrackRow, const Embedding*>> rows;
  for (const Tracklet& t : tracklets) {
    for (std::size_t i = 0; i < t.length(); ++i) {
      rows.push_back({{t.frames[i], t.track_id, t.boxes[i], t.confidences[i]},
                      t.embeddings.empty() ? nullptr : &t.embeddings[i]});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::pair(a.first.frame, a.first.track_id) < std::pair(b.first.frame, b.first.track_id);
  });
  std::vector<TrackRow> out;
  EmbeddingTable emb;
  emb.key_name = "track_id";
  for (const auto& [r, e] : rows) {
    out.push_back(r);
    if (e) {
      emb.dim = e->size();
      emb.rows.push_back({{r.frame, r.track_id}, *e});
    }
  }
  return {std::move(out), std::move(emb)};
}

/// Rebuilds tracklets (ordered by track_id) from track rows and an optional
/// track_id-keyed embedding table.
inline std::vector<Tracklet> to_tracklets(int camera_id, const std::vector<TrackRow>& rows, const EmbeddingTable* emb) {
  std::map<std::pair<long, long>, const Embedding*> lookup;
  if (emb) {
    if (emb->key_name != "track_id") fail(ErrorCategory::mismatch, "track embeddings must be keyed by track_id");
    for (const auto& [key, e] : emb->rows) {
      if (!lookup.emplace(key, &e).second) {
        fail(ErrorCategory::mismatch, "duplicate embedding key (frame " + std::to_string(key.first) + ", track_id " +
                                          std::to_string(key.second) + ")");
      }
    }
  }
  std::map<int, Tracklet> by_id;
  for (const TrackRow& r : rows) {
    Tracklet& t = by_id[r.track_id];
    t.camera_id = camera_id;
    t.track_id = r.track_id;
    if (!t.frames.empty() && r.frame <= t.frames.back()) {
      fail(ErrorCategory::parse, "track " + std::to_string(r.track_id) + " repeats frame " + std::to_string(r.frame));
    }
    t.frames.push_back(r.frame);
    t.boxes.push_back(r.box);
    t.confidences.push_back(r.confidence);
    if (emb) {
      auto it = lookup.find({r.frame, r.track_id});
      if (it == lookup.end()) {
        fail(ErrorCategory::mismatch, "no embedding for track row (frame " + std::to_string(r.frame) + ", track_id " +
                                          std::to_string(r.track_id) + ")");
      }
      t.embeddings.push_back(*it->second);
    }
  }
  if (emb && lookup.size() != rows.size()) {
    fail(ErrorCategory::mismatch, "track embedding table has rows without a matching track row");
  }
  std::vector<Tracklet> out;
  for (auto& [id, t] : by_id) {
    double sum = 0.0;
    for (double c : t.confidences) sum += c;
    t.mean_confidence = sum / static_cast<double>(t.confidences.size());
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace mcmot::io

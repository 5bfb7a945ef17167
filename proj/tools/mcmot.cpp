// mcmot: command-line driver for the multi-camera tracking pipeline.
//
//   mcmot simulate  --out DIR [--config scenario.json] [--seed N]
//   mcmot track     --detections F [--embeddings F] --output F [--camera-id N]
//   mcmot associate --tracks DIR --output F [--method M] [--threshold T]
//   mcmot count     --scenario DIR --output F [--threads N]
//   mcmot eval      --results F... --truth F... [--output F]
//
// Exit status: 0 on success, otherwise one code per error category, with
// "error[<category>]: <message>" on stderr.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "mcmot/error.hpp"
#include "mcmot/io/config.hpp"
#include "mcmot/io/files.hpp"
#include "mcmot/io/formats.hpp"
#include "mcmot/io/results.hpp"
#include "mcmot/pipeline.hpp"
#include "mcmot/sim.hpp"

namespace fs = std::filesystem;
using namespace mcmot;

namespace {

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::domain: return 3;
    case ErrorCategory::numeric: return 4;
    case ErrorCategory::parse: return 5;
    case ErrorCategory::config: return 6;
    case ErrorCategory::mismatch: return 7;
    case ErrorCategory::io: return 8;
  }
  return 1;
}

struct ConfigOptions {
  std::string config_file;
  std::string preset;
  std::optional<int> frame_stride;
  std::optional<double> threshold;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_file, "JSON configuration ({\"preset\": ..., overrides})");
    app->add_option("--preset", preset, "Named preset: default, study1, study2");
    app->add_option("--frame-stride", frame_stride, "Process every N-th frame");
    app->add_option("--threshold", threshold, "Association distance threshold");
  }

  io::PipelineConfig load() const {
    nlohmann::json j = nlohmann::json::object();
    if (!config_file.empty()) j = io::read_json_file(config_file);
    if (!preset.empty()) j["preset"] = preset;
    if (frame_stride) j["frame_stride"] = *frame_stride;
    if (threshold) j["association_threshold"] = *threshold;
    return io::config_from_json(j);
  }
};

std::vector<AssociationMethod> parse_methods(const std::string& m, const io::PipelineConfig& cfg) {
  if (m.empty()) return {cfg.association.method};
  if (m == "both") return {AssociationMethod::euclidean, AssociationMethod::voting};
  return {io::parse_method(m)};
}

void print_timing(const char* stage, long frames, double seconds) {
  std::fprintf(stderr, "%s: %ld frames in %.3f s (%.1f fps)\n", stage, frames, seconds,
               seconds > 0 ? static_cast<double>(frames) / seconds : 0.0);
}

void print_report(const std::string& method, const CountReport& r) {
  auto pct = [](const std::optional<double>& v) {
    char buf[32];
    if (!v) return std::string("n/a");
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * *v);
    return std::string(buf);
  };
  std::printf("method=%s l2_error=%s tp=%zu fp=%zu fn=%zu accuracy=%s recall=%s f1=%s\n", method.c_str(),
              io::format_float(r.l2_error).c_str(), r.confusion.tp, r.confusion.fp, r.confusion.fn,
              pct(r.ratios.accuracy).c_str(), pct(r.ratios.recall).c_str(), pct(r.ratios.f1).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-camera multi-object tracking and unique-person counting"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic multi-camera scenario");
  std::string sim_config, sim_out;
  std::optional<std::uint64_t> sim_seed;
  std::optional<int> sim_cameras, sim_identities;
  std::optional<long> sim_frames;
  simulate->add_option("--config", sim_config, "Scenario JSON");
  simulate->add_option("--seed", sim_seed, "PRNG seed (overrides the config)");
  simulate->add_option("--cameras", sim_cameras);
  simulate->add_option("--identities", sim_identities);
  simulate->add_option("--frames", sim_frames);
  simulate->add_option("--out", sim_out, "Output directory")->required();

  // track
  auto* track = app.add_subcommand("track", "Track one camera's detections");
  std::string trk_dets, trk_emb, trk_out, trk_out_emb;
  int trk_camera = 0;
  std::optional<long> trk_frames;
  ConfigOptions trk_cfg;
  track->add_option("--detections", trk_dets, "Detection CSV")->required();
  track->add_option("--embeddings", trk_emb, "Embedding CSV keyed by (frame, det_id)");
  track->add_option("--camera-id", trk_camera);
  track->add_option("--num-frames", trk_frames, "Stream length (default: last detection frame + 1)");
  track->add_option("--output", trk_out, "Track CSV to write")->required();
  track->add_option("--output-embeddings", trk_out_emb, "Track embedding CSV (default: next to --output)");
  trk_cfg.add_to(track);

  // associate
  auto* associate = app.add_subcommand("associate", "Associate tracklets across cameras");
  std::string asc_tracks, asc_out, asc_method, asc_truth;
  bool asc_repro = false;
  ConfigOptions asc_cfg;
  associate->add_option("--tracks", asc_tracks, "Directory of cam<N>.tracks.csv files")->required();
  associate->add_option("--method", asc_method, "euclidean | voting | euclidean+voting | both");
  associate->add_option("--truth", asc_truth, "Truth JSON; adds a count report");
  associate->add_option("--output", asc_out, "Results JSON")->required();
  associate->add_flag("--reproducible", asc_repro, "Write null wall-clock timing for byte-stable output");
  asc_cfg.add_to(associate);

  // count
  auto* count = app.add_subcommand("count", "Track all cameras of a scenario and count unique persons");
  std::string cnt_scenario, cnt_out, cnt_method, cnt_truth;
  unsigned cnt_threads = 1;
  bool cnt_repro = false;
  std::optional<long> cnt_frames;
  ConfigOptions cnt_cfg;
  count->add_option("--scenario", cnt_scenario, "Directory with cam<N>/detections.csv")->required();
  count->add_option("--method", cnt_method, "euclidean | voting | euclidean+voting | both");
  count->add_option("--threads", cnt_threads, "Per-camera worker threads");
  count->add_option("--num-frames", cnt_frames);
  count->add_option("--truth", cnt_truth, "Truth JSON (default: <scenario>/truth.json when present)");
  count->add_option("--output", cnt_out, "Results JSON")->required();
  count->add_flag("--reproducible", cnt_repro, "Write null wall-clock timing for byte-stable output");
  cnt_cfg.add_to(count);

  // eval
  auto* eval = app.add_subcommand("eval", "Score results files against truth files");
  std::vector<std::string> ev_results, ev_truth;
  std::string ev_out;
  eval->add_option("--results", ev_results, "Results JSON (one per set)")->required();
  eval->add_option("--truth", ev_truth, "Truth JSON (one per set, same order)")->required();
  eval->add_option("--output", ev_out, "Report JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      sim::ScenarioConfig cfg;
      if (!sim_config.empty()) cfg = io::scenario_from_json(io::read_json_file(sim_config));
      if (sim_seed) cfg.seed = *sim_seed;
      if (sim_cameras) cfg.cameras = *sim_cameras;
      if (sim_identities) cfg.identities = *sim_identities;
      if (sim_frames) cfg.frames = *sim_frames;
      io::write_scenario(sim_out, sim::generate(cfg));
      return 0;
    }

    if (*track) {
      const io::PipelineConfig cfg = trk_cfg.load();
      const auto t0 = std::chrono::steady_clock::now();
      const auto dets = io::load_detections(trk_dets, trk_emb.empty() ? std::nullopt : std::optional<fs::path>(trk_emb));
      const CameraRun run = track_camera(trk_camera, dets, cfg, trk_frames);
      io::write_track_files(trk_out, run.tracklets,
                            trk_out_emb.empty() ? std::nullopt : std::optional<fs::path>(trk_out_emb));
      print_timing("track", run.frames_processed,
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      return 0;
    }

    if (*associate) {
      const io::PipelineConfig cfg = asc_cfg.load();
      const auto methods = parse_methods(asc_method, cfg);
      const auto t0 = std::chrono::steady_clock::now();
      auto per_camera = io::load_track_dir(asc_tracks, true);
      PipelineResult res;
      res.associations = associate_and_refine(per_camera, cfg, methods, &res.kept);
      std::set<long> frames;
      for (auto& [cam, ts] : per_camera) {
        res.camera_ids.push_back(cam);
        std::set<long> cam_frames;
        for (Tracklet& t : ts) {
          cam_frames.insert(t.frames.begin(), t.frames.end());
          res.tracklets.push_back(std::move(t));
        }
        res.frames_processed += static_cast<long>(cam_frames.size());
      }
      res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (!asc_truth.empty()) {
        const auto reports = io::evaluate({{res, io::truth_from_json(io::read_json_file(asc_truth))}});
        res.count_report = reports.front().second;
      }
      io::write_text(asc_out, io::dump(io::results_to_json(res, asc_repro)));
      print_timing("associate", res.frames_processed, *res.wall_time_s);
      return 0;
    }

    if (*count) {
      const io::PipelineConfig cfg = cnt_cfg.load();
      const auto methods = parse_methods(cnt_method, cfg);
      const auto streams = io::load_scenario_streams(cnt_scenario);
      PipelineResult res = run_pipeline(streams, cfg, methods, cnt_threads, cnt_frames);
      fs::path truth = cnt_truth;
      if (truth.empty() && fs::exists(fs::path(cnt_scenario) / "truth.json")) truth = fs::path(cnt_scenario) / "truth.json";
      if (!truth.empty()) {
        res.count_report = io::evaluate({{res, io::truth_from_json(io::read_json_file(truth))}}).front().second;
      }
      io::write_text(cnt_out, io::dump(io::results_to_json(res, cnt_repro)));
      print_timing("count", res.frames_processed, *res.wall_time_s);
      std::printf("unique_count=%zu\n", res.associations.front().unique_count);
      return 0;
    }

    if (*eval) {
      if (ev_results.size() != ev_truth.size()) {
        fail(ErrorCategory::mismatch, "--results and --truth must be given the same number of times");
      }
      std::vector<io::EvalSet> sets;
      for (std::size_t i = 0; i < ev_results.size(); ++i) {
        sets.push_back({io::results_from_json(io::read_json_file(ev_results[i])),
                        io::truth_from_json(io::read_json_file(ev_truth[i]))});
      }
      nlohmann::json out = nlohmann::json::array();
      for (const auto& [method, report] : io::evaluate(sets)) {
        print_report(method, report);
        nlohmann::json j = io::to_json(report);
        j["method"] = method;
        out.push_back(j);
      }
      if (!ev_out.empty()) io::write_text(ev_out, io::dump(out));
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error[%s]: %s\n", std::string(to_string(e.category())).c_str(), e.what());
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[internal]: %s\n", e.what());
    return 1;
  }
  return 0;
}

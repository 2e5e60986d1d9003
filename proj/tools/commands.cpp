#include "commands.hpp"

#include "trajex/digest.hpp"
#include "trajex/errors.hpp"
#include "trajex/parallel.hpp"
#include "trajex/pipeline.hpp"
#include "trajex/random.hpp"
#include "trajex/simulator.hpp"
#include "trajex/tracker_config.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <functional>
#include <sstream>

namespace trajex::cli {

namespace {

using ordered_json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << content;
  if (!out) throw IoError("write failed: " + p.string());
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw IoError("cannot create output directory " + p.string());
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const Error& e) {
    // configuration documents, calibration and scenario geometry
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
}

ordered_json manifest_base(const std::string& command, const std::string& argv_line) {
  ordered_json m;
  m["tool"] = "trajex";
  m["version"] = kVersion;
  m["command"] = command;
  m["argv"] = argv_line;
  return m;
}

void finish_manifest(ordered_json& m, const fs::path& file, Clock::time_point start) {
  m["runtime_s"] = std::chrono::duration<double>(Clock::now() - start).count();
  write_file(file, m.dump(2) + "\n");
}

std::string dump(const auto& items, auto writer) {
  std::ostringstream ss;
  writer(ss, items);
  return ss.str();
}

TransformRegistry load_frames(const std::optional<fs::path>& frames) {
  TransformRegistry reg;
  if (!frames) {
    // without calibration the Road plane is taken as the Setup plane
    reg.add(FrameTransform::identity(Frame::Road, Frame::Setup));
    return reg;
  }
  const auto doc = nlohmann::json::parse(read_file(*frames), nullptr, false);
  if (doc.is_discarded() || !doc.contains("transforms") || !doc["transforms"].is_array()) {
    throw ConfigError(frames->string() + ": expected {\"transforms\": [correspondence sets]}");
  }
  for (const auto& set : doc["transforms"]) reg.add(estimate_frame_transform(correspondences_from_json(set.dump())));
  return reg;
}

}  // namespace

std::string trajectories_name(SensorMode mode) { return fmt::format("trajectories_{}.csv", to_string(mode)); }

int cmd_simulate(const SimulateOptions& opt, std::ostream& err, const std::string& argv_line) {
  return guarded(err, [&] {
    const auto start = Clock::now();
    ScenarioConfig cfg = opt.config ? scenario_from_json(read_file(*opt.config)) : default_scenario();
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.duration) cfg.duration = *opt.duration;
    cfg.validate();

    const SimulationOutput sim = simulate(cfg);
    ensure_dir(opt.out);
    const std::string scenario_json = scenario_to_json(cfg);
    write_file(opt.out / "scenario.json", scenario_json);
    write_file(opt.out / "gt.csv", dump(sim.ground_truth, [](std::ostream& o, const auto& v) {
                 write_ground_truth(o, v);
               }));
    write_file(opt.out / "cam.jsonl", dump(sim.camera, [](std::ostream& o, const auto& v) { write_camera_log(o, v); }));
    write_file(opt.out / "radar.jsonl", dump(sim.radar, [](std::ostream& o, const auto& v) { write_radar_log(o, v); }));

    auto homography = ordered_json::parse(correspondences_to_json(sim.homography_pairs));
    homography["optical_axis_deg"] = rad2deg(sim.optical_axis);
    write_file(opt.out / "homography.json", homography.dump(2) + "\n");
    ordered_json frames;
    frames["transforms"] = ordered_json::array();
    for (const auto& set : sim.frame_pairs) frames["transforms"].push_back(ordered_json::parse(correspondences_to_json(set)));
    write_file(opt.out / "frames.json", frames.dump(2) + "\n");

    auto m = manifest_base("simulate", argv_line);
    m["seed"] = cfg.seed;
    m["rng"] = CounterRng::kAlgorithm;
    m["config_digests"] = {{"scenario", sha256_hex(scenario_json)}};
    m["inputs"] = {{"config", opt.config ? opt.config->string() : std::string("<default>")}};
    m["outputs"] = {"scenario.json", "gt.csv", "cam.jsonl", "radar.jsonl", "homography.json", "frames.json"};
    m["counts"] = {{"vehicles", sim.ground_truth.size()},
                   {"camera_detections", sim.camera.size()},
                   {"radar_detections", sim.radar.size()}};
    finish_manifest(m, opt.out / "manifest.json", start);
    return static_cast<int>(kOk);
  });
}

int cmd_extract(const ExtractOptions& opt, std::ostream& err, const std::string& argv_line) {
  return guarded(err, [&] {
    const auto start = Clock::now();

    TrackerConfig cfg;
    bool axis_from_config = false;
    if (opt.config) {
      const std::string text = read_file(*opt.config);
      cfg = tracker_config_from_json(text);
      const auto raw = nlohmann::json::parse(text, nullptr, false);
      axis_from_config = raw.is_object() && raw.contains("footprint") && raw["footprint"].is_object() &&
                         raw["footprint"].contains("optical_axis_deg");
    }

    const std::string hom_text = read_file(opt.homography);
    const Homography h = estimate_homography(correspondences_from_json(hom_text));
    if (!axis_from_config) {
      const auto raw = nlohmann::json::parse(hom_text, nullptr, false);
      if (raw.is_object() && raw.contains("optical_axis_deg") && raw["optical_axis_deg"].is_number()) {
        cfg.footprint.optical_axis = deg2rad(raw["optical_axis_deg"].get<double>());
      }
    }
    const TransformRegistry frames = load_frames(opt.frames);
    const FrameTransform road_from_setup = frames.resolve(Frame::Setup, Frame::Road);
    if (opt.frame != Frame::Road) frames.resolve(Frame::Road, opt.frame);  // fail before the work

    ParseResult<CameraDetection> cam;
    ParseResult<RadarDetection> rad;
    if (opt.mode != SensorMode::Radar) {
      std::istringstream in(read_file(opt.camera));
      cam = parse_camera_log(in);
    }
    if (opt.mode != SensorMode::Camera) {
      std::istringstream in(read_file(opt.radar));
      rad = parse_radar_log(in);
    }
    for (const auto& e : cam.errors) err << "warning: camera log line " << e.line << ": " << e.reason << '\n';
    for (const auto& e : rad.errors) err << "warning: radar log line " << e.line << ": " << e.reason << '\n';
    if (cam.resorted) err << "warning: camera log was not time-ordered; sorted\n";
    if (rad.resorted) err << "warning: radar log was not time-ordered; sorted\n";

    const std::string tracker_json = tracker_config_to_json(cfg);
    const std::string digest = sha256_hex(tracker_json + "\nmode=" + std::string(to_string(opt.mode)));
    ensure_dir(opt.out);
    const fs::path traj_file = opt.out / trajectories_name(opt.mode);
    const std::string tag(to_string(opt.mode));

    const ExtractionResult res = extract(cam.records, rad.records, h, road_from_setup, cfg, opt.mode);
    write_file(traj_file, dump(res.trajectories, [&](std::ostream& o, const auto& v) {
                 export_trajectories(o, v, opt.frame, frames, digest);
               }));
    std::string discarded = "track_id,duration,detections,reason\n";
    for (const auto& d : res.tracks.discarded) {
      discarded += fmt::format("{},{:.3f},{},{}\n", d.id, d.duration, d.detections, d.reason);
    }
    write_file(opt.out / ("discarded_" + tag + ".csv"), discarded);
    write_file(opt.out / ("summary_" + tag + ".txt"), summary_text(res.summary));
    write_file(opt.out / ("tracker_" + tag + ".json"), tracker_json);

    auto m = manifest_base("extract", argv_line);
    m["mode"] = tag;
    m["frame"] = to_string(opt.frame);
    m["config_digests"] = {{"tracker", sha256_hex(tracker_json)}, {"trajectories", digest}};
    m["inputs"] = {{"camera", opt.camera.string()},
                   {"radar", opt.radar.string()},
                   {"homography", opt.homography.string()},
                   {"frames", opt.frames ? opt.frames->string() : std::string()},
                   {"config", opt.config ? opt.config->string() : std::string("<default>")}};
    m["outputs"] = {traj_file.filename().string(), "discarded_" + tag + ".csv", "summary_" + tag + ".txt",
                    "tracker_" + tag + ".json"};
    m["counts"] = {{"camera_records", cam.records.size()},
                   {"radar_records", rad.records.size()},
                   {"malformed", cam.errors.size() + rad.errors.size()},
                   {"roi_rejected", res.roi_rejected},
                   {"tracks", res.trajectories.size()},
                   {"discarded", res.tracks.discarded.size()}};
    finish_manifest(m, opt.out / ("manifest_extract_" + tag + ".json"), start);

    if (cam.records.empty() && rad.records.empty()) {
      err << "warning: no detections in the selected input; wrote an empty trajectory file\n";
      return static_cast<int>(kEmptyInput);
    }
    return static_cast<int>(kOk);
  });
}

int cmd_evaluate(const EvaluateOptions& opt, std::ostream& err, const std::string& argv_line) {
  return guarded(err, [&] {
    const auto start = Clock::now();
    if (opt.runs.empty()) throw ConfigError("evaluate: no runs given");
    if (!(opt.interval_max > opt.interval_min)) throw ConfigError("--interval: max must exceed min");
    const std::vector<double> grid = make_grid(opt.interval_min, opt.interval_max, opt.grid_step);

    // one evaluation unit per (run, reference vehicle)
    struct Unit {
      std::size_t run;
      const GroundTruthTrajectory* ref;
    };
    std::vector<std::vector<GroundTruthTrajectory>> gts;
    for (const auto& r : opt.runs) {
      std::istringstream in(read_file(r.ground_truth));
      gts.push_back(read_ground_truth(in));
    }
    std::vector<Unit> units;
    for (std::size_t i = 0; i < gts.size(); ++i) {
      for (const auto& g : gts[i]) units.push_back({i, &g});
    }

    std::vector<SensorMode> modes;
    for (auto mode : {SensorMode::Camera, SensorMode::Radar, SensorMode::Fused}) {
      bool any = false;
      bool all = true;
      for (const auto& r : opt.runs) {
        auto it = r.trajectories.find(mode);
        const bool present = it != r.trajectories.end() && fs::exists(it->second);
        any = any || present;
        all = all && present;
        if (it != r.trajectories.end() && !present) {
          err << "warning: " << to_string(mode) << " trajectories missing: " << it->second.string() << '\n';
        }
      }
      if (any && !all) err << "warning: mode " << to_string(mode) << " skipped; not present for every run\n";
      if (all) modes.push_back(mode);
    }
    if (modes.empty()) throw IoError("evaluate: no trajectory files found for any mode");

    ensure_dir(opt.out);
    bool association_failed = false;
    std::map<SensorMode, BiasTable> tables;
    std::string index = "mode,unit,run,vehicle_id,track_id,multiple_crossings\n";
    std::vector<std::string> outputs;

    for (auto mode : modes) {
      std::vector<TrajectoryDocument> docs;
      for (const auto& r : opt.runs) {
        std::istringstream in(read_file(r.trajectories.at(mode)));
        docs.push_back(import_trajectories(in));
        if (docs.back().frame != Frame::Setup) {
          throw ConfigError(r.trajectories.at(mode).string() + ": evaluation expects Setup-frame trajectories");
        }
      }
      std::vector<int> match(units.size(), -1);
      std::vector<ErrorCurve> curves(units.size());
      parallel_for(units.size(), [&](std::size_t u) {
        const auto& doc = docs[units[u].run];
        match[u] = associate_reference(units[u].ref->samples, doc.trajectories);
        if (match[u] < 0) return;
        curves[u] = error_curve(units[u].ref->samples, doc.trajectories[static_cast<std::size_t>(match[u])].samples,
                                grid, opt.metric, true);
      });

      std::vector<ErrorCurve> kept;
      for (std::size_t u = 0; u < units.size(); ++u) {
        const auto tag = to_string(mode);
        if (match[u] < 0) {
          err << fmt::format("error: {}: vehicle {} of run {} has no associated track\n", tag,
                             units[u].ref->vehicle_id, units[u].run);
          association_failed = true;
          continue;
        }
        const auto& traj = docs[units[u].run].trajectories[static_cast<std::size_t>(match[u])];
        index += fmt::format("{},{},{},{},{},{}\n", tag, u, units[u].run, units[u].ref->vehicle_id, traj.id,
                             curves[u].multiple_crossings ? 1 : 0);
        const std::string name = fmt::format("errors_{}_run{}.csv", tag, u);
        write_file(opt.out / name, error_curve_csv(curves[u]));
        outputs.push_back(name);
        kept.push_back(curves[u]);
      }
      if (kept.empty()) continue;
      tables.emplace(mode, aggregate_bias_std(kept, opt.interval_min, opt.interval_max));
      const std::string name = fmt::format("bias_std_{}.csv", to_string(mode));
      write_file(opt.out / name, bias_table_csv(tables.at(mode)));
      outputs.push_back(name);
    }
    write_file(opt.out / "runs.csv", index);

    if (!tables.empty()) {
      const ComparisonTable table = comparison_table(tables, {});
      write_file(opt.out / "comparison.csv", comparison_csv(table));
      std::string summary = comparison_text(table);
      summary += fmt::format("\ninterval: [{}, {}] m, grid step {} m, distance {}\n", opt.interval_min,
                             opt.interval_max, opt.grid_step,
                             opt.metric == DistanceMetric::Radial ? "radial" : "along-lane");
      summary += fmt::format("reference vehicles: {}\n", units.size());
      write_file(opt.out / "summary.txt", summary);
      outputs.insert(outputs.end(), {"comparison.csv", "summary.txt"});
    }

    auto m = manifest_base("evaluate", argv_line);
    ordered_json runs = ordered_json::array();
    for (const auto& r : opt.runs) {
      ordered_json jr;
      jr["gt"] = r.ground_truth.string();
      for (const auto& [mode, p] : r.trajectories) jr[std::string(to_string(mode))] = p.string();
      runs.push_back(jr);
    }
    m["inputs"] = runs;
    m["grid"] = {{"min", opt.interval_min}, {"max", opt.interval_max}, {"step", opt.grid_step}};
    m["outputs"] = outputs;
    finish_manifest(m, opt.out / "manifest_evaluate.json", start);
    return static_cast<int>(association_failed ? kAssociationFailure : kOk);
  });
}

}  // namespace trajex::cli

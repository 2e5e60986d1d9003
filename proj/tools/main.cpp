#include "commands.hpp"

#include "trajex/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace trajex;
using namespace trajex::cli;

namespace {

std::pair<double, double> parse_interval(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw ConfigError("--interval expects MIN:MAX");
  try {
    return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
  } catch (const std::logic_error&) {
    throw ConfigError("--interval expects MIN:MAX");
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::string argv_line;
  for (int i = 0; i < argc; ++i) argv_line += (i ? " " : "") + std::string(argv[i]);

  CLI::App app{"trajex: trajectory extraction from camera and radar detection logs"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // simulate
  SimulateOptions sim;
  std::string sim_config;
  std::uint64_t seed = 0;
  double duration = 0.0;
  auto* s = app.add_subcommand("simulate", "generate ground truth and sensor logs");
  s->add_option("--config", sim_config, "scenario JSON");
  auto* seed_opt = s->add_option("--seed", seed, "overrides the scenario seed");
  auto* dur_opt = s->add_option("--duration", duration, "overrides the scenario duration [s]");
  s->add_option("--out", sim.out, "output directory")->required();

  // extract
  ExtractOptions ex;
  std::string run_dir, ex_config, frames, mode = "fused", frame = "setup";
  auto* e = app.add_subcommand("extract", "detections to smoothed trajectories");
  e->add_option("--run", run_dir, "directory written by simulate (supplies default inputs and output)");
  e->add_option("--camera", ex.camera, "camera JSONL log");
  e->add_option("--radar", ex.radar, "radar JSONL log");
  e->add_option("--homography", ex.homography, "image/road correspondences JSON");
  e->add_option("--frames", frames, "frame correspondences JSON");
  e->add_option("--config", ex_config, "tracker config JSON");
  e->add_option("--mode", mode, "camera | radar | fused")->check(CLI::IsMember({"camera", "radar", "fused"}));
  e->add_option("--frame", frame, "output frame: setup | road | map")->check(CLI::IsMember({"setup", "road", "map"}));
  e->add_option("--out", ex.out, "output directory");

  // evaluate
  EvaluateOptions ev;
  std::string gt, interval = "35:135", metric = "radial";
  std::vector<std::string> trajs, runs;
  auto* v = app.add_subcommand("evaluate", "distance-indexed errors against ground truth");
  v->add_option("--gt", gt, "ground truth CSV");
  v->add_option("--traj", trajs, "MODE=PATH trajectories (repeatable)");
  v->add_option("--run", runs, "directory with gt.csv and trajectories_<mode>.csv (repeatable)");
  v->add_option("--out", ev.out, "output directory")->required();
  v->add_option("--grid-step", ev.grid_step, "grid step [m]");
  v->add_option("--interval", interval, "aggregation interval MIN:MAX [m]");
  v->add_option("--distance", metric, "radial | along-lane")->check(CLI::IsMember({"radial", "along-lane"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : static_cast<int>(kConfigError);
  }

  try {
    if (*s) {
      if (!sim_config.empty()) sim.config = sim_config;
      if (*seed_opt) sim.seed = seed;
      if (*dur_opt) sim.duration = duration;
      return cmd_simulate(sim, std::cerr, argv_line);
    }
    if (*e) {
      ex.mode = mode_from_string(mode);
      ex.frame = frame_from_string(frame);
      if (!run_dir.empty()) {
        const fs::path r(run_dir);
        if (ex.camera.empty()) ex.camera = r / "cam.jsonl";
        if (ex.radar.empty()) ex.radar = r / "radar.jsonl";
        if (ex.homography.empty()) ex.homography = r / "homography.json";
        if (frames.empty() && fs::exists(r / "frames.json")) frames = (r / "frames.json").string();
        if (ex.out.empty()) ex.out = r;
      }
      if (ex.homography.empty() || ex.out.empty()) throw ConfigError("extract: --homography and --out (or --run) required");
      if (!frames.empty()) ex.frames = frames;
      if (!ex_config.empty()) ex.config = ex_config;
      return cmd_extract(ex, std::cerr, argv_line);
    }
    if (*v) {
      std::tie(ev.interval_min, ev.interval_max) = parse_interval(interval);
      ev.metric = metric == "radial" ? DistanceMetric::Radial : DistanceMetric::AlongLane;
      for (const auto& r : runs) {
        EvaluationRun run;
        run.ground_truth = fs::path(r) / "gt.csv";
        for (auto m : {SensorMode::Camera, SensorMode::Radar, SensorMode::Fused}) {
          const fs::path p = fs::path(r) / trajectories_name(m);
          if (fs::exists(p)) run.trajectories[m] = p;
        }
        ev.runs.push_back(run);
      }
      if (!gt.empty()) {
        EvaluationRun run;
        run.ground_truth = gt;
        for (const auto& t : trajs) {
          const auto eq = t.find('=');
          if (eq == std::string::npos) throw ConfigError("--traj expects MODE=PATH");
          run.trajectories[mode_from_string(t.substr(0, eq))] = t.substr(eq + 1);
        }
        ev.runs.push_back(run);
      } else if (!trajs.empty()) {
        throw ConfigError("--traj requires --gt");
      }
      return cmd_evaluate(ev, std::cerr, argv_line);
    }
  } catch (const Error& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return kConfigError;
  }
  return kOk;
}

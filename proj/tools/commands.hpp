#pragma once

#include "trajex/evaluation.hpp"
#include "trajex/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace trajex::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kConfigError = 2, kIoError = 3, kEmptyInput = 4, kAssociationFailure = 5 };

constexpr const char* kVersion = "0.1.0";

struct SimulateOptions {
  std::optional<fs::path> config;
  fs::path out;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
};

struct ExtractOptions {
  fs::path camera;
  fs::path radar;
  fs::path homography;
  std::optional<fs::path> frames;
  std::optional<fs::path> config;  // tracker config
  SensorMode mode = SensorMode::Fused;
  Frame frame = Frame::Setup;
  fs::path out;
};

struct EvaluationRun {
  fs::path ground_truth;
  std::map<SensorMode, fs::path> trajectories;
};

struct EvaluateOptions {
  std::vector<EvaluationRun> runs;
  fs::path out;
  double grid_step = 1.0;
  double interval_min = 35.0;
  double interval_max = 135.0;
  DistanceMetric metric = DistanceMetric::Radial;
};

/// File name of an extraction result inside its output directory.
std::string trajectories_name(SensorMode mode);

/// Each command reports problems on `err` and returns an ExitCode.
/// `argv_line` is recorded in the manifest so the run can be repeated.
int cmd_simulate(const SimulateOptions& opt, std::ostream& err, const std::string& argv_line = {});
int cmd_extract(const ExtractOptions& opt, std::ostream& err, const std::string& argv_line = {});
int cmd_evaluate(const EvaluateOptions& opt, std::ostream& err, const std::string& argv_line = {});

}  // namespace trajex::cli

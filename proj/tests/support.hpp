#pragma once

#include "trajex/evaluation.hpp"
#include "trajex/pipeline.hpp"
#include "trajex/simulator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace trajex::test {

/// Zero noise, dropouts, clutter and clock offset.
void make_noise_free(ScenarioConfig& cfg);

/// Default lanes without random arrivals and one scripted vehicle that
/// accelerates and brakes. `lane` is "far", "near" or "merge".
ScenarioConfig single_vehicle_scenario(std::uint64_t seed, const std::string& lane);

struct ModeRun {
  std::vector<SmoothedTrajectory> trajectories;  // Setup frame
  ExtractionResult raw;
};

/// Extraction as the CLI does it: calibration re-estimated from the
/// simulator's correspondence sets, output in the Setup frame.
ModeRun run_mode(const SimulationOutput& sim, const TrackerConfig& cfg, SensorMode mode);

/// Error curve of the trajectory associated with each ground-truth vehicle;
/// vehicles without an associated trajectory are skipped and counted.
std::vector<ErrorCurve> curves_for(const SimulationOutput& sim, const std::vector<SmoothedTrajectory>& trajs,
                                   const std::vector<double>& grid, int* unassociated = nullptr);

/// Random SPD matrix with eigenvalues in [lo, hi].
Eigen::MatrixXd random_spd(int n, std::uint64_t seed, double lo = 0.1, double hi = 10.0);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

std::string slurp(const std::filesystem::path& p);

}  // namespace trajex::test

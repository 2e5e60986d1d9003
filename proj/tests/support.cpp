#include "support.hpp"

#include "trajex/random.hpp"

#include <fstream>
#include <sstream>

namespace trajex::test {

void make_noise_free(ScenarioConfig& cfg) {
  auto& c = cfg.camera;
  c.noise_u = c.noise_v = 0.0;
  c.false_negative = 0.0;
  c.false_positive_rate = 0.0;
  c.misclassification = 0.0;
  c.width_noise = 0.0;
  c.dropouts.clear();
  c.dropout_per_vehicle = 0.0;
  auto& r = cfg.radar;
  r.noise_x = r.noise_y = r.noise_v = 0.0;
  r.dimension_noise = 0.0;
  r.clock_offset = 0.0;
  r.bias_x = r.bias_x_slope = 0.0;
}

ScenarioConfig single_vehicle_scenario(std::uint64_t seed, const std::string& lane) {
  ScenarioConfig cfg = default_scenario();
  cfg.seed = seed;
  for (auto& l : cfg.lanes) l.arrival_rate = 0.0;
  CounterRng rng(seed, "test/single-vehicle");
  VehicleSpec v;
  v.lane = lane;
  v.spawn_time = 0.0;
  v.initial_speed = lane == "merge" ? rng.uniform(18.0, 24.0) : rng.uniform(22.0, 30.0);
  // accelerate, cruise, brake, accelerate: the reference drive speeds up and slows down on purpose
  v.segments = {{rng.uniform(1.0, 2.0), 0.0},
                {rng.uniform(1.5, 2.5), rng.uniform(0.8, 1.5)},
                {rng.uniform(1.0, 2.0), -rng.uniform(1.0, 2.0)},
                {rng.uniform(1.0, 2.0), rng.uniform(0.5, 1.2)}};
  cfg.vehicles.push_back(v);
  return cfg;
}

ModeRun run_mode(const SimulationOutput& sim, const TrackerConfig& cfg_in, SensorMode mode) {
  TrackerConfig cfg = cfg_in;
  cfg.footprint.optical_axis = sim.optical_axis;
  const Homography h = estimate_homography(sim.homography_pairs);
  TransformRegistry reg;
  for (const auto& set : sim.frame_pairs) reg.add(estimate_frame_transform(set));
  const FrameTransform road_from_setup = reg.resolve(Frame::Setup, Frame::Road);
  ModeRun out;
  out.raw = extract(sim.camera, sim.radar, h, road_from_setup, cfg, mode);
  out.trajectories = to_frame(out.raw.trajectories, Frame::Setup, reg);
  return out;
}

std::vector<ErrorCurve> curves_for(const SimulationOutput& sim, const std::vector<SmoothedTrajectory>& trajs,
                                   const std::vector<double>& grid, int* unassociated) {
  std::vector<ErrorCurve> curves;
  int missing = 0;
  for (const auto& gt : sim.ground_truth) {
    const int k = associate_reference(gt.samples, trajs);
    if (k < 0) {
      ++missing;
      continue;
    }
    curves.push_back(error_curve(gt.samples, trajs[static_cast<std::size_t>(k)].samples, grid,
                                 DistanceMetric::Radial, true));
  }
  if (unassociated != nullptr) *unassociated = missing;
  return curves;
}

Eigen::MatrixXd random_spd(int n, std::uint64_t seed, double lo, double hi) {
  CounterRng rng(seed, "test/spd");
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd ev(n);
  for (int i = 0; i < n; ++i) ev(i) = rng.uniform(lo, hi);
  return q * ev.asDiagonal() * q.transpose();
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("trajex_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace trajex::test

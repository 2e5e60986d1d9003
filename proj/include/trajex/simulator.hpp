#pragma once

#include "trajex/geometry.hpp"
#include "trajex/ingest.hpp"
#include "trajex/postprocess.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trajex {

struct SpeedSegment {
  double duration = 0.0;      // s
  double acceleration = 0.0;  // m/s^2
};

/// Bounds for randomly drawn piecewise-constant-acceleration profiles.
struct SpeedProfileConfig {
  double initial_min = 24.0;
  double initial_max = 32.0;
  double segment_min = 1.5;
  double segment_max = 4.0;
  double accel_max = 1.5;
  double speed_min = 8.0;
  double speed_max = 40.0;
};

struct LaneConfig {
  std::string name;
  std::vector<Eigen::Vector2d> polyline;  // Setup frame, in driving order
  double arrival_rate = 0.0;              // vehicles / minute
  std::optional<SpeedProfileConfig> speed;  // overrides the scenario default
};

/// A scripted vehicle, used in addition to random arrivals.
struct VehicleSpec {
  std::string lane;
  double spawn_time = 0.0;
  ObjectClass object_class = ObjectClass::Car;
  double initial_speed = 25.0;
  std::vector<SpeedSegment> segments;  // constant speed after the last segment
};

struct CameraSimConfig {
  double rate = 30.0;  // Hz
  double noise_u = 2.0;  // px
  double noise_v = 2.0;  // px
  double false_negative = 0.05;
  double false_positive_rate = 0.1;  // per second
  double confidence_mean = 0.91;
  double confidence_concentration = 50.0;  // Beta a + b
  double misclassification = 0.0;
  double width_noise = 0.05;  // relative
  double appear = 135.0;      // m
  double disappear = 35.0;    // m
  // pinhole mounted at the Setup origin, looking along +x
  double mount_height = 18.0;  // m
  double focal = 2000.0;       // px
  double look_distance = 70.0;  // m, ground distance of the principal ray
  double image_width = 3840.0;
  double image_height = 2160.0;
  /// Absolute windows (open intervals) in which every camera frame is dropped.
  std::vector<std::pair<double, double>> dropouts;
  /// Length of one forced dropout per vehicle while it is visible; 0 disables.
  double dropout_per_vehicle = 0.0;
};

struct RadarSimConfig {
  double rate = 15.0;  // Hz
  double noise_x = 0.25;
  double noise_y = 0.4;
  double noise_v = 0.15;
  double dimension_noise = 0.1;  // m
  double max_range = 200.0;
  double clock_offset = 0.0;  // s, added to logged timestamps
  /// Systematic x offset: bias_x + bias_x_slope * (distance - bias_reference_distance).
  double bias_x = 0.0;
  double bias_x_slope = 0.0;
  double bias_reference_distance = 85.0;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  double duration = 60.0;  // arrivals happen in [0, duration)
  std::vector<LaneConfig> lanes;
  std::vector<VehicleSpec> vehicles;
  SpeedProfileConfig speed;
  double min_separation = 10.0;  // m between any two vehicles at any time
  CameraSimConfig camera;
  RadarSimConfig radar;
  FrameTransform road_from_setup{deg2rad(2.0), Eigen::Vector2d(-4.0, 1.5), 1.0, Frame::Setup, Frame::Road};
  FrameTransform map_from_setup{deg2rad(28.0), Eigen::Vector2d(512.0, -230.0), 1.0, Frame::Setup, Frame::Map};

  void validate() const;
};

/// Two through lanes and an entrance lane merging onto the near through lane.
std::vector<LaneConfig> default_lanes();
ScenarioConfig default_scenario();

ScenarioConfig scenario_from_json(const std::string& text);
std::string scenario_to_json(const ScenarioConfig& cfg);

struct GroundTruthTrajectory {
  int vehicle_id = 0;
  ObjectClass object_class = ObjectClass::Car;
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
  std::vector<TrajectorySample> samples;  // 100 Hz, Setup frame
};

constexpr double kGroundTruthRate = 100.0;

std::vector<GroundTruthTrajectory> generate_ground_truth(const ScenarioConfig& cfg);

/// Linear interpolation of position/velocity, circular for heading.
/// Returns nothing outside the trajectory's time span.
std::optional<TrajectorySample> sample_at(const GroundTruthTrajectory& gt, double t);

/// Camera model of the scenario: Image -> Road homography.
Homography scenario_homography(const ScenarioConfig& cfg);
/// Exact correspondences used to publish the homography.
CorrespondenceSet scenario_homography_correspondences(const ScenarioConfig& cfg);
/// Correspondence sets Road -> Setup and Setup -> Map.
std::vector<CorrespondenceSet> scenario_frame_correspondences(const ScenarioConfig& cfg);

std::vector<CameraDetection> simulate_camera(std::span<const GroundTruthTrajectory> gt, const Homography& image_to_road,
                                             const ScenarioConfig& cfg);
std::vector<RadarDetection> simulate_radar(std::span<const GroundTruthTrajectory> gt, const ScenarioConfig& cfg);

void write_ground_truth(std::ostream& out, std::span<const GroundTruthTrajectory> gt);
std::vector<GroundTruthTrajectory> read_ground_truth(std::istream& in);

struct SimulationOutput {
  std::vector<GroundTruthTrajectory> ground_truth;
  std::vector<CameraDetection> camera;
  std::vector<RadarDetection> radar;
  CorrespondenceSet homography_pairs;
  std::vector<CorrespondenceSet> frame_pairs;
  double optical_axis = 0.0;  // Road frame heading of the optical axis
};

SimulationOutput simulate(const ScenarioConfig& cfg);

}  // namespace trajex

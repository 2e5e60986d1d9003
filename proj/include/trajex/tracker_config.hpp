#pragma once

#include "trajex/geometry.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace trajex {

/// Tracker and post-processing parameters. Every field has a default; the
/// JSON document may set any subset of them.
struct TrackerConfig {
  double keep_alive = 0.5;               // s
  double iou_threshold = 0.3;
  double road_gate = 3.5;                // m; covers ~3 sigma of camera range noise at 135 m
  double process_noise_intensity = 0.5;  // m^2/s^3
  Eigen::Vector2d r_cam{1.0 * 1.0, 0.15 * 0.15};
  Eigen::Vector4d r_radar{0.3 * 0.3, 0.5 * 0.5, 0.2 * 0.2, 0.3 * 0.3};
  double init_pos_var = 1.0;
  double init_vel_var_camera = 100.0;
  double init_vel_var_radar = 1.0;
  double min_track_duration = 1.0;  // s
  int min_track_detections = 10;

  // post-processing
  double heading_speed_floor = 0.5;  // m/s
  int dimension_trim_min_count = 5;

  FootprintModel footprint;
  /// Road-frame region; detections outside are dropped before tracking.
  std::optional<std::vector<Eigen::Vector2d>> roi;

  Eigen::Matrix2d camera_noise() const { return r_cam.asDiagonal(); }
  Eigen::Matrix4d radar_noise() const { return r_radar.asDiagonal(); }

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

TrackerConfig tracker_config_from_json(const std::string& text);
std::string tracker_config_to_json(const TrackerConfig& cfg);

}  // namespace trajex

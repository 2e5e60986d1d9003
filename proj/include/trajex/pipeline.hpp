#pragma once

#include "trajex/evaluation.hpp"
#include "trajex/geometry.hpp"
#include "trajex/ingest.hpp"
#include "trajex/postprocess.hpp"
#include "trajex/tracker.hpp"
#include "trajex/tracker_config.hpp"

#include <span>
#include <vector>

namespace trajex {

struct ExtractionResult {
  std::vector<SmoothedTrajectory> trajectories;  // Road frame
  FinalizeResult tracks;
  SummaryStats summary;
  std::size_t roi_rejected = 0;
};

/// Merge by sensor mode, optional region filter, tracking and smoothing.
/// In camera mode the radar log is ignored and vice versa.
ExtractionResult extract(std::span<const CameraDetection> camera, std::span<const RadarDetection> radar,
                         const Homography& image_to_road, const FrameTransform& road_from_setup,
                         const TrackerConfig& cfg, SensorMode mode);

/// Re-expresses smoothed trajectories in `target`.
std::vector<SmoothedTrajectory> to_frame(std::span<const SmoothedTrajectory> trajs, Frame target,
                                         const TransformRegistry& registry);

}  // namespace trajex

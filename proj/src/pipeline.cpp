#include "trajex/pipeline.hpp"

#include "trajex/errors.hpp"

#include <algorithm>

namespace trajex {

ExtractionResult extract(std::span<const CameraDetection> camera, std::span<const RadarDetection> radar,
                         const Homography& image_to_road, const FrameTransform& road_from_setup,
                         const TrackerConfig& cfg, SensorMode mode) {
  const std::span<const CameraDetection> cam = mode == SensorMode::Radar ? std::span<const CameraDetection>{} : camera;
  const std::span<const RadarDetection> rad = mode == SensorMode::Camera ? std::span<const RadarDetection>{} : radar;
  std::vector<Measurement> stream = merge_streams(cam, rad);

  ExtractionResult out;
  if (cfg.roi) {
    const RegionOfInterest roi(*cfg.roi);
    auto kept = filter_roi(stream, roi, image_to_road, road_from_setup);
    out.roi_rejected = stream.size() - kept.size();
    stream = std::move(kept);
  }

  Tracker tracker(cfg, image_to_road, road_from_setup);
  out.tracks = run_tracker(tracker, stream);

  std::vector<Track> kept;
  for (auto& t : out.tracks.finished) {
    try {
      out.trajectories.push_back(rts_smooth(t, cfg));
      kept.push_back(std::move(t));
    } catch (const TooShort& e) {
      out.tracks.discarded.push_back({t.id, t.duration(), t.detection_count(), e.what()});
    }
  }
  out.tracks.finished = std::move(kept);

  double span = 0.0;
  if (!stream.empty()) span = stream.back().timestamp() - stream.front().timestamp();
  out.summary = summary_stats(out.tracks.finished, span);
  return out;
}

std::vector<SmoothedTrajectory> to_frame(std::span<const SmoothedTrajectory> trajs, Frame target,
                                         const TransformRegistry& registry) {
  std::vector<SmoothedTrajectory> out;
  out.reserve(trajs.size());
  for (const auto& t : trajs) out.push_back(to_frame(t, target, registry));
  return out;
}

}  // namespace trajex

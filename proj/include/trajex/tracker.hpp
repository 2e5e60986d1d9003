#pragma once

#include "trajex/geometry.hpp"
#include "trajex/ingest.hpp"
#include "trajex/kalman.hpp"
#include "trajex/tracker_config.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace trajex {

using TrackId = std::int64_t;

/// One filter step of a track. Camera and radar detections that share a
/// timestamp are folded into the same entry.
struct HistoryEntry {
  double timestamp = 0.0;
  std::optional<CameraDetection> camera;
  std::optional<RadarDetection> radar;  // Road frame
  std::optional<Eigen::Vector2d> camera_road;  // footprint point used for the update
  KalmanState filtered;
};

struct DimensionSample {
  double value = 0.0;
  double distance = 0.0;  // m from the sensor setup
};

enum class Dimension { Length = 0, Width = 1, Height = 2 };

struct Track {
  TrackId id = 0;
  KalmanState state;  // at last_update_time
  std::optional<BoundingBox> last_box;
  double last_box_time = 0.0;  // timestamp of last_box
  double last_update_time = 0.0;
  double creation_time = 0.0;
  std::vector<HistoryEntry> history;
  std::array<double, 4> class_votes{};  // car, bus, truck, motorcycle
  std::array<std::vector<DimensionSample>, 3> dimension_samples;
  double matched_iou_sum = 0.0;
  int matched_iou_count = 0;

  int camera_detections() const;
  int radar_detections() const;
  int detection_count() const { return camera_detections() + radar_detections(); }
  double duration() const { return last_update_time - creation_time; }
  /// Longest interval between consecutive detections.
  double max_detection_gap() const;
};

/// Matching view of a live track, predicted to the batch timestamp.
struct PredictedTrack {
  TrackId id = 0;
  KalmanState state;
  std::optional<BoundingBox> last_box;
};

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (detection, track) indices
  std::vector<std::size_t> unassigned_detections;
  std::vector<std::size_t> unassigned_tracks;
};

/// Greedy globally-nearest-first association on Road distance, gated.
/// Detections must be in the Road frame.
Assignment match_radar(std::span<const RadarDetection> dets, std::span<const PredictedTrack> tracks,
                       const TrackerConfig& cfg);

/// Camera association: a pair is admissible when IoU with the track's last
/// box reaches the threshold or the footprint's Road distance to the
/// prediction is inside the gate. Admissible pairs are taken greedily by
/// higher IoU, then smaller distance.
Assignment match_camera(std::span<const CameraDetection> dets, std::span<const PredictedTrack> tracks,
                        const Homography& h, const TrackerConfig& cfg);

/// Footprint of a camera detection in the Road frame, compensated with the
/// heading of `hint` when its speed is above the heading floor.
std::optional<Eigen::Vector2d> camera_road_point(const CameraDetection& det, const Homography& h,
                                                 const TrackerConfig& cfg,
                                                 const KalmanState* hint = nullptr);

enum class TrackEventKind { Created, Updated, Coasted, Finished };

struct TrackEvent {
  TrackEventKind kind;
  TrackId track_id;
  double timestamp;

  bool operator==(const TrackEvent&) const = default;
};

struct DiscardedTrack {
  TrackId id = 0;
  double duration = 0.0;
  int detections = 0;
  std::string reason;
};

struct FinalizeResult {
  std::vector<Track> finished;
  std::vector<DiscardedTrack> discarded;
};

/// IoU/Kalman hybrid multi-object tracker over a time-ordered measurement
/// stream. Single-threaded; identical input gives identical events and ids.
class Tracker {
 public:
  Tracker(TrackerConfig cfg, Homography image_to_road,
          FrameTransform road_from_setup = FrameTransform::identity(Frame::Setup, Frame::Road));

  /// Processes measurements sharing one timestamp. Radar detections are
  /// matched, applied and spawned before camera detections.
  std::vector<TrackEvent> step(std::span<const Measurement> batch);

  /// Finishes all live tracks and applies the minimum length filter.
  FinalizeResult finalize();

  const std::vector<Track>& live_tracks() const { return live_; }
  std::optional<double> current_time() const { return now_; }
  const TrackerConfig& config() const { return cfg_; }

 private:
  std::vector<PredictedTrack> predicted(double t) const;
  void apply_radar(Track& track, const RadarDetection& det, double t);
  void apply_camera(Track& track, const CameraDetection& det, const Eigen::Vector2d& road, double t,
                    std::optional<double> matched_iou);
  Track& spawn(double t);
  HistoryEntry& entry_at(Track& track, double t, const KalmanState& prior);
  double setup_distance(const Eigen::Vector2d& road) const;

  TrackerConfig cfg_;
  Homography image_to_road_;
  FrameTransform road_from_setup_;
  FrameTransform setup_from_road_;
  std::vector<Track> live_;
  std::vector<Track> finished_;
  TrackId next_id_ = 1;
  std::optional<double> now_;
};

/// Groups a time-ordered stream into timestamp batches and runs the tracker.
FinalizeResult run_tracker(Tracker& tracker, std::span<const Measurement> stream,
                           std::vector<TrackEvent>* events = nullptr);

}  // namespace trajex

#pragma once

#include "trajex/geometry.hpp"
#include "trajex/ingest.hpp"
#include "trajex/kalman.hpp"
#include "trajex/tracker.hpp"
#include "trajex/tracker_config.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trajex {

struct TrajectorySample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double theta = 0.0;  // radians, (-pi, pi]
};

struct Dimensions {
  std::optional<double> length;
  std::optional<double> width;
  std::optional<double> height;
};

struct SmoothedTrajectory {
  TrackId id = 0;
  ObjectClass object_class = ObjectClass::Unknown;
  Dimensions dimensions;
  Frame frame = Frame::Road;
  std::vector<TrajectorySample> samples;
};

/// Rauch–Tung–Striebel backward pass over stored forward-filter results.
/// `times` and `filtered` are parallel and strictly increasing in time.
std::vector<KalmanState> rts_smooth_states(std::span<const double> times,
                                           std::span<const KalmanState> filtered,
                                           double process_noise_intensity);

/// Smooths a finished track into a Road-frame trajectory with aggregated
/// class and dimensions. Throws TooShort for fewer than two filter steps.
SmoothedTrajectory rts_smooth(const Track& track, const TrackerConfig& cfg);

/// Confidence-weighted vote; ties resolve car > truck > bus > motorcycle.
/// Tracks without camera votes are Unknown.
ObjectClass aggregate_class(const Track& track);

/// Trims the extreme samples once there are at least `trim_min_count`, then
/// averages with weight 1 / (distance + 1 m).
std::optional<double> aggregate_dimension(std::span<const DimensionSample> samples, int trim_min_count);
Dimensions aggregate_dimensions(const Track& track, int trim_min_count);

/// atan2 heading in (-pi, pi]; empty when the speed is at or below `speed_floor`.
std::optional<double> heading(double vx, double vy, double speed_floor = 0.0);
/// Fills theta for every sample, holding the last valid heading through
/// slow segments. Leading slow samples take the first valid heading.
void assign_headings(std::vector<TrajectorySample>& samples, double speed_floor);

/// Known frame transforms; lookups chain and invert as required.
class TransformRegistry {
 public:
  void add(const FrameTransform& t);
  /// Throws UnknownFrame if no chain connects the frames.
  FrameTransform resolve(Frame from, Frame to) const;

 private:
  std::vector<FrameTransform> edges_;
};

SmoothedTrajectory to_frame(const SmoothedTrajectory& traj, Frame target, const TransformRegistry& registry);

struct TrajectoryDocument {
  Frame frame = Frame::Setup;
  std::string config_digest;
  std::vector<SmoothedTrajectory> trajectories;
};

/// CSV with '#' header lines (frame, units, config digest); 6 decimals.
void export_trajectories(std::ostream& out, std::span<const SmoothedTrajectory> trajs, Frame target,
                         const TransformRegistry& registry, const std::string& config_digest);
TrajectoryDocument import_trajectories(std::istream& in);

}  // namespace trajex

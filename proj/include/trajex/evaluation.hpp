#pragma once

#include "trajex/postprocess.hpp"
#include "trajex/tracker.hpp"

#include <array>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trajex {

enum class SensorMode { Camera, Radar, Fused };

std::string_view to_string(SensorMode mode);
/// Accepts "camera", "radar" and "fused"; throws ConfigError otherwise.
SensorMode mode_from_string(std::string_view name);

enum class Quantity { X = 0, Y, Vx, Vy, Theta };
constexpr std::array<Quantity, 5> kQuantities{Quantity::X, Quantity::Y, Quantity::Vx, Quantity::Vy, Quantity::Theta};
std::string_view to_string(Quantity q);
std::string_view unit_of(Quantity q);

/// How "distance from the sensor setup" is measured on Setup-frame samples.
enum class DistanceMetric { Radial, AlongLane };

double reference_distance(const TrajectorySample& s, DistanceMetric metric = DistanceMetric::Radial);

/// Linear interpolation between bracketing samples; theta along the shorter
/// arc. Throws OutOfRange outside the sample span.
TrajectorySample interpolate_measurement(std::span<const TrajectorySample> samples, double t);

struct Crossings {
  std::vector<double> times;  // ascending
  double first() const { return times.front(); }
  bool multiple() const { return times.size() > 1; }
};

/// All times at which the reference distance passes through d.
/// Throws NoCrossing when there is none.
Crossings distance_crossings(std::span<const TrajectorySample> ref, double d,
                             DistanceMetric metric = DistanceMetric::Radial);
/// First crossing time.
double distance_to_time(std::span<const TrajectorySample> ref, double d,
                        DistanceMetric metric = DistanceMetric::Radial);

struct EvalConfig {
  double interval_min = 35.0;
  double interval_max = 135.0;
  double grid_step = 1.0;
  DistanceMetric metric = DistanceMetric::Radial;
};

std::vector<double> make_grid(double lo, double hi, double step);

/// Per-quantity error p_ref - p_meas on a distance grid. Heading errors are
/// wrapped and stored in degrees. Undefined points hold NaN.
struct ErrorCurve {
  std::vector<double> grid;
  std::array<std::vector<double>, 5> reference;
  std::array<std::vector<double>, 5> measured;
  std::array<std::vector<double>, 5> error;
  bool multiple_crossings = false;

  const std::vector<double>& operator[](Quantity q) const { return error[static_cast<std::size_t>(q)]; }
};

/// Strict form: every grid point must have a crossing and a measurement
/// (NoCrossing / OutOfRange otherwise). With `allow_gaps`, such points
/// become NaN instead.
ErrorCurve error_curve(std::span<const TrajectorySample> ref, std::span<const TrajectorySample> meas,
                       std::span<const double> grid, DistanceMetric metric = DistanceMetric::Radial,
                       bool allow_gaps = false);

struct BiasTable {
  std::vector<double> grid;
  std::array<std::vector<double>, 5> mean;   // mu(p_er, d)
  std::array<std::vector<double>, 5> stddev;  // sigma(p_er, d), population form
  std::array<std::vector<int>, 5> count;     // runs defined at d
  std::array<double, 5> interval_mean_bias{};
  std::array<double, 5> interval_mean_std{};
  double interval_min = 35.0;
  double interval_max = 135.0;

  double mu(Quantity q, std::size_t i) const { return mean[static_cast<std::size_t>(q)][i]; }
  double sigma(Quantity q, std::size_t i) const { return stddev[static_cast<std::size_t>(q)][i]; }
};

/// Mean and standard deviation (divisor N) over runs at every grid point;
/// NaN entries are skipped. Throws GridMismatch if grids differ.
BiasTable aggregate_bias_std(std::span<const ErrorCurve> curves, double interval_min = 35.0,
                             double interval_max = 135.0);

/// measured + mu(d_measured) for every quantity, mu interpolated linearly in
/// distance and held constant beyond the table's ends.
SmoothedTrajectory debias(const SmoothedTrajectory& traj, const BiasTable& table,
                          DistanceMetric metric = DistanceMetric::Radial);

struct ComparisonTable {
  std::vector<SensorMode> modes;
  // [quantity][mode index]
  std::array<std::vector<double>, 5> bias;
  std::array<std::vector<double>, 5> stddev;

  double bias_of(Quantity q, SensorMode m) const;
  double std_of(Quantity q, SensorMode m) const;
};

/// Throws MissingMode if a required mode has no table or no tables exist.
ComparisonTable comparison_table(const std::map<SensorMode, BiasTable>& tables,
                                 std::span<const SensorMode> required);
std::string comparison_csv(const ComparisonTable& table);
/// "bias (std)" cells with two decimals, columns aligned.
std::string comparison_text(const ComparisonTable& table);

struct SummaryStats {
  std::size_t track_count = 0;
  double tracks_per_minute = 0.0;
  double mean_detections_per_track = 0.0;
  double mean_confidence = 0.0;
  double mean_matched_iou = 0.0;
  double max_detection_gap = 0.0;  // over all tracks
  std::vector<std::pair<TrackId, double>> gaps;  // per track
};

SummaryStats summary_stats(std::span<const Track> tracks, double duration);
std::string summary_text(const SummaryStats& s);

/// Index of the trajectory with the most samples within `radius` of the
/// reference at equal time, or -1. Both in the Setup frame.
int associate_reference(std::span<const TrajectorySample> ref, std::span<const SmoothedTrajectory> candidates,
                        double radius = 3.0);

/// d, then ref/meas/error for each quantity.
std::string error_curve_csv(const ErrorCurve& curve);
/// d, then mean/std/count for each quantity.
std::string bias_table_csv(const BiasTable& table);

}  // namespace trajex

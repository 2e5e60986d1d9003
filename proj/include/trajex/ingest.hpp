#pragma once

#include "trajex/geometry.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace trajex {

enum class ObjectClass { Car, Bus, Truck, Motorcycle, Unknown };

std::string_view to_string(ObjectClass c);
/// Accepts the four detector classes and "unknown".
std::optional<ObjectClass> class_from_string(std::string_view name);

struct CameraDetection {
  double timestamp = 0.0;
  BoundingBox box;
  ObjectClass object_class = ObjectClass::Car;
  double confidence = 1.0;
  std::optional<double> width;  // meters
};

/// Radar object; the radar reports in the Setup frame.
struct RadarDetection {
  double timestamp = 0.0;
  PlanePoint position{0.0, 0.0, Frame::Setup};
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
};

/// Expresses a radar detection in another frame (position and velocity).
RadarDetection transform_radar(const RadarDetection& det, const FrameTransform& t);

enum class SensorKind { Camera, Radar };

struct Measurement {
  std::variant<CameraDetection, RadarDetection> detection;
  int sensor_id = 0;

  double timestamp() const;
  SensorKind kind() const;
  const CameraDetection* camera() const { return std::get_if<CameraDetection>(&detection); }
  const RadarDetection* radar() const { return std::get_if<RadarDetection>(&detection); }
};

struct MalformedRecord {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

template <class T>
struct ParseResult {
  std::vector<T> records;
  std::vector<MalformedRecord> errors;
  /// Set when input timestamps were not monotone and a stable sort was applied.
  bool resorted = false;
};

ParseResult<CameraDetection> parse_camera_log(std::istream& in);
ParseResult<RadarDetection> parse_radar_log(std::istream& in);

void write_camera_log(std::ostream& out, std::span<const CameraDetection> dets);
void write_radar_log(std::ostream& out, std::span<const RadarDetection> dets);

/// Simple polygon in the Road frame.
class RegionOfInterest {
 public:
  explicit RegionOfInterest(std::vector<Eigen::Vector2d> polygon);

  /// Inside or on the boundary.
  bool contains(const Eigen::Vector2d& p) const;
  const std::vector<Eigen::Vector2d>& polygon() const { return polygon_; }

 private:
  std::vector<Eigen::Vector2d> polygon_;
};

/// Keeps measurements whose Road-frame location lies in the region. Camera
/// detections use the footprint point through `h`; radar detections use
/// `road_from_setup`.
std::vector<Measurement> filter_roi(
    std::span<const Measurement> dets, const RegionOfInterest& roi, const Homography& h,
    const FrameTransform& road_from_setup = FrameTransform::identity(Frame::Setup, Frame::Road));

/// Time-ordered merge; radar precedes camera on equal timestamps.
std::vector<Measurement> merge_streams(std::span<const CameraDetection> cam,
                                       std::span<const RadarDetection> radar);

}  // namespace trajex

#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace trajex {

/// Coordinate systems: the camera image, the plane defined by the homography
/// (Road), the sensor-anchored plane (Setup) and a map-anchored plane (Map).
enum class Frame { Image, Road, Setup, Map };

std::string_view to_string(Frame frame);
Frame frame_from_string(std::string_view name);

constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double radians);
inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

struct ImagePoint {
  double u = 0.0;
  double v = 0.0;
};

/// Axis-aligned image box; p1 is the top-left and p2 the bottom-right corner.
struct BoundingBox {
  ImagePoint p1;
  ImagePoint p2;

  double width() const { return p2.u - p1.u; }
  double height() const { return p2.v - p1.v; }
  double area() const { return width() * height(); }
  bool valid() const;
};

struct PlanePoint {
  double x = 0.0;
  double y = 0.0;
  Frame frame = Frame::Road;

  Eigen::Vector2d vec() const { return {x, y}; }
};

/// Projective plane-to-plane map, stored normalized so that h(2,2) == 1.
class Homography {
 public:
  explicit Homography(const Eigen::Matrix3d& h, Frame source = Frame::Image,
                      Frame target = Frame::Road);

  static Homography identity() { return Homography(Eigen::Matrix3d::Identity()); }

  const Eigen::Matrix3d& matrix() const { return h_; }
  Frame source() const { return source_; }
  Frame target() const { return target_; }

  Homography inverse() const;

  /// Maps a point; throws PointAtInfinity when the projective scale vanishes.
  Eigen::Vector2d map(const Eigen::Vector2d& p) const;

 private:
  Eigen::Matrix3d h_;
  Frame source_;
  Frame target_;
};

/// Similarity transform target = scale * R(rotation) * source + translation.
struct FrameTransform {
  double rotation = 0.0;
  Eigen::Vector2d translation = Eigen::Vector2d::Zero();
  double scale = 1.0;
  Frame source = Frame::Road;
  Frame target = Frame::Setup;

  static FrameTransform identity(Frame source, Frame target);

  Eigen::Matrix2d linear() const;
  Eigen::Vector2d apply(const Eigen::Vector2d& p) const;
  /// Maps a free vector (velocity): no translation.
  Eigen::Vector2d apply_vector(const Eigen::Vector2d& v) const;
  PlanePoint apply(const PlanePoint& p) const;

  FrameTransform inverse() const;
  /// Returns this ∘ first, i.e. first is applied before this.
  FrameTransform after(const FrameTransform& first) const;
};

struct CorrespondenceSet {
  Frame source_frame = Frame::Image;
  Frame target_frame = Frame::Road;
  std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> pairs;
};

CorrespondenceSet correspondences_from_json(std::string_view text);
std::string correspondences_to_json(const CorrespondenceSet& set);

/// Normalized DLT over all pairs; exact for four non-degenerate pairs.
Homography estimate_homography(const CorrespondenceSet& c);

PlanePoint apply_homography(const Homography& h, const ImagePoint& p);
/// Inverse direction (Road -> Image), used by the simulator.
ImagePoint project_to_image(const Homography& h, const PlanePoint& road);

/// Least-squares similarity between the two frames of the set.
FrameTransform estimate_frame_transform(const CorrespondenceSet& c);

/// Side-visibility compensation. When the angle between the vehicle heading
/// and the optical axis exceeds `threshold`, the footprint u coordinate moves
/// by coefficient * box_width * sin(view_angle). The view angle is folded into
/// (-pi/2, pi/2] so oncoming and receding traffic are treated alike; a
/// positive angle moves the point toward +u.
struct FootprintModel {
  double coefficient = 0.5;
  double threshold = deg2rad(10.0);
  double optical_axis = 0.0;  // heading of the optical axis in the Road frame
};

double view_angle(double heading, double optical_axis);
double footprint_shift(const BoundingBox& b, double heading, const FootprintModel& model);

ImagePoint footprint_point(const BoundingBox& b, std::optional<double> heading,
                           const FootprintModel& model = {});

double iou(const BoundingBox& a, const BoundingBox& b);

}  // namespace trajex

#include "trajex/ingest.hpp"

#include "trajex/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>

namespace trajex {

namespace {

using nlohmann::json;

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

double finite_number(const json& rec, const char* key) {
  const auto& v = rec.at(key);
  if (!v.is_number()) throw std::invalid_argument(std::string("field '") + key + "' is not a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw std::invalid_argument(std::string("field '") + key + "' is not finite");
  return x;
}

CameraDetection camera_from_json(const json& rec) {
  CameraDetection d;
  d.timestamp = finite_number(rec, "t");
  const auto& box = rec.at("box");
  if (!box.is_array() || box.size() != 4) throw std::invalid_argument("box must be [u1,v1,u2,v2]");
  for (const auto& v : box) {
    if (!v.is_number()) throw std::invalid_argument("box coordinates must be numbers");
  }
  d.box = {{box[0].get<double>(), box[1].get<double>()}, {box[2].get<double>(), box[3].get<double>()}};
  if (!d.box.valid()) throw std::invalid_argument("box corners must satisfy u1<u2, v1<v2");
  const auto cls = class_from_string(rec.at("class").get<std::string>());
  if (!cls || *cls == ObjectClass::Unknown) throw std::invalid_argument("unsupported class");
  d.object_class = *cls;
  d.confidence = finite_number(rec, "conf");
  if (d.confidence < 0.0 || d.confidence > 1.0) throw std::invalid_argument("conf outside [0,1]");
  if (auto it = rec.find("width"); it != rec.end() && !it->is_null()) {
    const double w = finite_number(rec, "width");
    if (w <= 0.0) throw std::invalid_argument("width must be positive");
    d.width = w;
  }
  return d;
}

RadarDetection radar_from_json(const json& rec) {
  RadarDetection d;
  d.timestamp = finite_number(rec, "t");
  d.position = {finite_number(rec, "x"), finite_number(rec, "y"), Frame::Setup};
  d.velocity = {finite_number(rec, "vx"), finite_number(rec, "vy")};
  d.length = finite_number(rec, "len");
  d.width = finite_number(rec, "wid");
  d.height = finite_number(rec, "hgt");
  if (d.length <= 0.0 || d.width <= 0.0 || d.height <= 0.0) {
    throw std::invalid_argument("len, wid and hgt must be positive");
  }
  return d;
}

template <class T, class Fn>
ParseResult<T> parse_lines(std::istream& in, Fn&& convert) {
  ParseResult<T> result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    try {
      const auto rec = json::parse(line);
      if (!rec.is_object()) throw std::invalid_argument("record is not a JSON object");
      result.records.push_back(convert(rec));
    } catch (const json::exception& e) {
      result.errors.push_back({lineno, e.what()});
    } catch (const std::invalid_argument& e) {
      result.errors.push_back({lineno, e.what()});
    }
  }
  const auto by_time = [](const T& a, const T& b) { return a.timestamp < b.timestamp; };
  if (!std::is_sorted(result.records.begin(), result.records.end(), by_time)) {
    std::stable_sort(result.records.begin(), result.records.end(), by_time);
    result.resorted = true;
  }
  return result;
}

}  // namespace

std::string_view to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::Car: return "car";
    case ObjectClass::Bus: return "bus";
    case ObjectClass::Truck: return "truck";
    case ObjectClass::Motorcycle: return "motorcycle";
    case ObjectClass::Unknown: return "unknown";
  }
  return "unknown";
}

std::optional<ObjectClass> class_from_string(std::string_view name) {
  if (name == "car") return ObjectClass::Car;
  if (name == "bus") return ObjectClass::Bus;
  if (name == "truck") return ObjectClass::Truck;
  if (name == "motorcycle") return ObjectClass::Motorcycle;
  if (name == "unknown") return ObjectClass::Unknown;
  return std::nullopt;
}

RadarDetection transform_radar(const RadarDetection& det, const FrameTransform& t) {
  RadarDetection out = det;
  out.position = t.apply(det.position);
  out.velocity = t.apply_vector(det.velocity);
  return out;
}

double Measurement::timestamp() const {
  return std::visit([](const auto& d) { return d.timestamp; }, detection);
}

SensorKind Measurement::kind() const {
  return std::holds_alternative<CameraDetection>(detection) ? SensorKind::Camera : SensorKind::Radar;
}

ParseResult<CameraDetection> parse_camera_log(std::istream& in) {
  return parse_lines<CameraDetection>(in, camera_from_json);
}

ParseResult<RadarDetection> parse_radar_log(std::istream& in) {
  return parse_lines<RadarDetection>(in, radar_from_json);
}

void write_camera_log(std::ostream& out, std::span<const CameraDetection> dets) {
  for (const auto& d : dets) {
    nlohmann::ordered_json rec;
    rec["t"] = d.timestamp;
    rec["box"] = {d.box.p1.u, d.box.p1.v, d.box.p2.u, d.box.p2.v};
    rec["class"] = std::string(to_string(d.object_class));
    rec["conf"] = d.confidence;
    rec["width"] = d.width ? nlohmann::ordered_json(*d.width) : nlohmann::ordered_json(nullptr);
    out << rec.dump() << '\n';
  }
}

void write_radar_log(std::ostream& out, std::span<const RadarDetection> dets) {
  for (const auto& d : dets) {
    nlohmann::ordered_json rec;
    rec["t"] = d.timestamp;
    rec["x"] = d.position.x;
    rec["y"] = d.position.y;
    rec["vx"] = d.velocity.x();
    rec["vy"] = d.velocity.y();
    rec["len"] = d.length;
    rec["wid"] = d.width;
    rec["hgt"] = d.height;
    out << rec.dump() << '\n';
  }
}

namespace {

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_intersect(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2, const Eigen::Vector2d& q1,
                        const Eigen::Vector2d& q2) {
  const double d1 = cross(p2 - p1, q1 - p1);
  const double d2 = cross(p2 - p1, q2 - p1);
  const double d3 = cross(q2 - q1, p1 - q1);
  const double d4 = cross(q2 - q1, p2 - q1);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

bool on_segment(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double tol = 1e-12 * std::max(1.0, ab.squaredNorm());
  if (std::abs(cross(ab, p - a)) > tol) return false;
  const double t = (p - a).dot(ab);
  return t >= -tol && t <= ab.squaredNorm() + tol;
}

}  // namespace

RegionOfInterest::RegionOfInterest(std::vector<Eigen::Vector2d> polygon) : polygon_(std::move(polygon)) {
  const std::size_t n = polygon_.size();
  if (n < 3) throw ConfigError("region of interest needs at least 3 vertices");
  double area2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!polygon_[i].allFinite()) throw ConfigError("region of interest has non-finite vertex");
    area2 += cross(polygon_[i], polygon_[(i + 1) % n]);
  }
  if (std::abs(area2) <= 0.0) throw ConfigError("region of interest has zero area");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;  // adjacent edges
      if (segments_intersect(polygon_[i], polygon_[(i + 1) % n], polygon_[j], polygon_[(j + 1) % n])) {
        throw ConfigError("region of interest is self-intersecting");
      }
    }
  }
}

bool RegionOfInterest::contains(const Eigen::Vector2d& p) const {
  const std::size_t n = polygon_.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = polygon_[i];
    const auto& b = polygon_[j];
    if (on_segment(p, a, b)) return true;
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x_cross = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

std::vector<Measurement> filter_roi(std::span<const Measurement> dets, const RegionOfInterest& roi,
                                    const Homography& h, const FrameTransform& road_from_setup) {
  std::vector<Measurement> out;
  out.reserve(dets.size());
  for (const auto& m : dets) {
    Eigen::Vector2d road;
    if (const auto* cam = m.camera()) {
      try {
        road = apply_homography(h, footprint_point(cam->box, std::nullopt)).vec();
      } catch (const PointAtInfinity&) {
        continue;
      }
    } else {
      road = road_from_setup.apply(m.radar()->position).vec();
    }
    if (roi.contains(road)) out.push_back(m);
  }
  return out;
}

std::vector<Measurement> merge_streams(std::span<const CameraDetection> cam,
                                       std::span<const RadarDetection> radar) {
  std::vector<Measurement> out;
  out.reserve(cam.size() + radar.size());
  std::size_t i = 0, j = 0;
  while (i < cam.size() || j < radar.size()) {
    const bool take_radar = j < radar.size() && (i >= cam.size() || radar[j].timestamp <= cam[i].timestamp);
    if (take_radar) {
      out.push_back({radar[j++], 1});
    } else {
      out.push_back({cam[i++], 0});
    }
  }
  return out;
}

}  // namespace trajex

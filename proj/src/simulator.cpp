#include "trajex/simulator.hpp"

#include "trajex/errors.hpp"
#include "trajex/random.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace trajex {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------- config I/O

class Reader {
 public:
  Reader(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <class T>
  void operator()(const char* key, T& out) const {
    auto it = doc_.find(key);
    if (it == doc_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key) + ": wrong type");
    }
  }

  const json* child(const char* key) const {
    auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &*it;
  }

  std::string field(const char* key) const { return path_ + "." + key; }

 private:
  const json& doc_;
  std::string path_;
};

void read_speed(const json& doc, const std::string& path, SpeedProfileConfig& s) {
  Reader r(doc, path);
  r("initial_min", s.initial_min);
  r("initial_max", s.initial_max);
  r("segment_min", s.segment_min);
  r("segment_max", s.segment_max);
  r("accel_max", s.accel_max);
  r("speed_min", s.speed_min);
  r("speed_max", s.speed_max);
}

json speed_json(const SpeedProfileConfig& s) {
  return {{"initial_min", s.initial_min}, {"initial_max", s.initial_max}, {"segment_min", s.segment_min},
          {"segment_max", s.segment_max}, {"accel_max", s.accel_max},     {"speed_min", s.speed_min},
          {"speed_max", s.speed_max}};
}

FrameTransform read_transform(const json& doc, const std::string& path, FrameTransform t) {
  Reader r(doc, path);
  double deg = rad2deg(t.rotation);
  std::vector<double> tr{t.translation.x(), t.translation.y()};
  r("rotation_deg", deg);
  r("translation", tr);
  r("scale", t.scale);
  if (tr.size() != 2) throw ConfigError(path + ".translation: expected [x, y]");
  if (!(t.scale > 0.0)) throw ConfigError(path + ".scale: must be > 0");
  t.rotation = deg2rad(deg);
  t.translation = {tr[0], tr[1]};
  return t;
}

json transform_json(const FrameTransform& t) {
  return {{"rotation_deg", rad2deg(t.rotation)},
          {"translation", {t.translation.x(), t.translation.y()}},
          {"scale", t.scale}};
}

ObjectClass read_class(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + ": expected a class name");
  auto c = class_from_string(v.get<std::string>());
  if (!c || *c == ObjectClass::Unknown) throw ConfigError(path + ": unknown class '" + v.get<std::string>() + "'");
  return *c;
}

// ---------------------------------------------------------------- lanes

struct Lane {
  const LaneConfig* cfg = nullptr;
  std::vector<double> cumulative;  // arc length at each vertex

  explicit Lane(const LaneConfig& c) : cfg(&c) {
    cumulative.push_back(0.0);
    for (std::size_t i = 1; i < c.polyline.size(); ++i) {
      cumulative.push_back(cumulative.back() + (c.polyline[i] - c.polyline[i - 1]).norm());
    }
  }

  double length() const { return cumulative.back(); }

  // position and unit direction at arc length s
  std::pair<Eigen::Vector2d, Eigen::Vector2d> at(double s) const {
    const auto& p = cfg->polyline;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
    std::size_t seg = it == cumulative.begin() ? 0 : static_cast<std::size_t>(it - cumulative.begin()) - 1;
    seg = std::min(seg, p.size() - 2);
    const Eigen::Vector2d dir = (p[seg + 1] - p[seg]).normalized();
    return {p[seg] + (s - cumulative[seg]) * dir, dir};
  }
};

void validate_lane(const LaneConfig& lane) {
  if (lane.polyline.size() < 2) throw InvalidLaneGeometry("lane '" + lane.name + "': needs at least two vertices");
  for (std::size_t i = 1; i < lane.polyline.size(); ++i) {
    if (!((lane.polyline[i] - lane.polyline[i - 1]).norm() > 1e-9)) {
      throw InvalidLaneGeometry("lane '" + lane.name + "': repeated vertex " + std::to_string(i));
    }
  }
  if (!(lane.arrival_rate >= 0.0)) throw InvalidLaneGeometry("lane '" + lane.name + "': arrival_rate must be >= 0");
}

// ---------------------------------------------------------------- vehicles

constexpr double kStep = 1.0 / kGroundTruthRate;
constexpr double kClutterSuppressionIou = 0.5;

struct ClassShape {
  ObjectClass cls;
  double share;
  double length, width, height;
};

constexpr std::array<ClassShape, 4> kShapes{{
    {ObjectClass::Car, 0.80, 4.6, 1.85, 1.5},
    {ObjectClass::Truck, 0.12, 12.0, 2.5, 3.8},
    {ObjectClass::Bus, 0.04, 12.0, 2.55, 3.2},
    {ObjectClass::Motorcycle, 0.04, 2.2, 0.8, 1.4},
}};

const ClassShape& shape_of(ObjectClass c) {
  for (const auto& s : kShapes) {
    if (s.cls == c) return s;
  }
  return kShapes[0];
}

struct Candidate {
  std::size_t lane = 0;
  double spawn = 0.0;
  ObjectClass cls = ObjectClass::Car;
  double scale = 1.0;
  double v0 = 0.0;
  std::vector<SpeedSegment> segments;
  SpeedProfileConfig bounds;
};

// 100 Hz trapezoidal integration of the speed profile along the lane
GroundTruthTrajectory integrate(const Candidate& c, const Lane& lane, long start_index) {
  GroundTruthTrajectory gt;
  gt.object_class = c.cls;
  const auto& shape = shape_of(c.cls);
  gt.length = shape.length * c.scale;
  gt.width = shape.width * c.scale;
  gt.height = shape.height * c.scale;

  std::size_t seg = 0;
  double seg_left = c.segments.empty() ? 0.0 : c.segments[0].duration;
  double s = 0.0;
  double v = c.v0;
  for (long k = start_index;; ++k) {
    const auto [pos, dir] = lane.at(s);
    gt.samples.push_back({static_cast<double>(k) / kGroundTruthRate, pos.x(), pos.y(), v * dir.x(), v * dir.y(),
                          wrap_angle(std::atan2(dir.y(), dir.x()))});
    if (s >= lane.length()) break;
    double a = 0.0;
    while (seg < c.segments.size() && seg_left <= 0.5 * kStep) {
      ++seg;
      if (seg < c.segments.size()) seg_left += c.segments[seg].duration;
    }
    if (seg < c.segments.size()) {
      a = c.segments[seg].acceleration;
      seg_left -= kStep;
    }
    const double v_next = std::clamp(v + a * kStep, c.bounds.speed_min, c.bounds.speed_max);
    s += 0.5 * (v + v_next) * kStep;
    v = v_next;
    if (!(v > 0.0) || k - start_index > 3600 * 100) {
      throw InvalidLaneGeometry("vehicle does not reach the lane end within an hour");
    }
  }
  return gt;
}

bool separated(const GroundTruthTrajectory& a, const GroundTruthTrajectory& b, double min_sep) {
  const long a0 = std::lround(a.samples.front().t * kGroundTruthRate);
  const long b0 = std::lround(b.samples.front().t * kGroundTruthRate);
  const long lo = std::max(a0, b0);
  const long hi = std::min(a0 + static_cast<long>(a.samples.size()), b0 + static_cast<long>(b.samples.size()));
  for (long k = lo; k < hi; ++k) {
    const auto& p = a.samples[static_cast<std::size_t>(k - a0)];
    const auto& q = b.samples[static_cast<std::size_t>(k - b0)];
    if (std::hypot(p.x - q.x, p.y - q.y) < min_sep) return false;
  }
  return true;
}

std::vector<SpeedSegment> draw_segments(CounterRng& rng, const SpeedProfileConfig& sp, double horizon) {
  std::vector<SpeedSegment> segs;
  double total = 0.0;
  while (total < horizon) {
    // whole 10 ms steps so acceleration changes land on sample times
    const double d = std::round(rng.uniform(sp.segment_min, sp.segment_max) * kGroundTruthRate) / kGroundTruthRate;
    segs.push_back({d, rng.uniform(-sp.accel_max, sp.accel_max)});
    total += d;
  }
  return segs;
}

ObjectClass draw_class(CounterRng& rng) {
  double u = rng.uniform();
  for (const auto& s : kShapes) {
    if (u < s.share) return s.cls;
    u -= s.share;
  }
  return ObjectClass::Car;
}

// ---------------------------------------------------------------- camera model

Eigen::Matrix3d setup_plane_to_image(const CameraSimConfig& c) {
  const double phi = std::atan2(c.mount_height, c.look_distance);
  const double cp = std::cos(phi);
  const double sp = std::sin(phi);
  const double h = c.mount_height;
  const double f = c.focal;
  const double cx = 0.5 * c.image_width;
  const double cy = 0.5 * c.image_height;
  Eigen::Matrix3d g;
  g << cx * cp, -f, cx * h * sp,  //
      cy * cp - f * sp, 0.0, cy * h * sp + f * h * cp,  //
      cp, 0.0, h * sp;
  return g;
}

Eigen::Matrix3d similarity_matrix(const FrameTransform& t) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m.topLeftCorner<2, 2>() = t.linear();
  m.topRightCorner<2, 1>() = t.translation;
  return m;
}

double beta_draw(CounterRng& rng, const CameraSimConfig& c) {
  const double mean = std::clamp(c.confidence_mean, 1e-6, 1.0 - 1e-6);
  return rng.beta(mean * c.confidence_concentration, (1.0 - mean) * c.confidence_concentration);
}

ObjectClass other_class(CounterRng& rng, ObjectClass truth) {
  std::vector<ObjectClass> others;
  for (const auto& s : kShapes) {
    if (s.cls != truth) others.push_back(s.cls);
  }
  const auto i = std::min(others.size() - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(others.size())));
  return others[i];
}

bool in_image(const ImagePoint& p, const CameraSimConfig& c) {
  return p.u >= 0.0 && p.u <= c.image_width && p.v >= 0.0 && p.v <= c.image_height;
}

double end_time(std::span<const GroundTruthTrajectory> gt) {
  double t = 0.0;
  for (const auto& v : gt) {
    if (!v.samples.empty()) t = std::max(t, v.samples.back().t);
  }
  return t;
}

}  // namespace

// ---------------------------------------------------------------- scenario

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("scenario." + what); };
  if (!(duration >= 0.0)) fail("duration: must be >= 0");
  if (!(min_separation >= 0.0)) fail("min_separation: must be >= 0");
  auto check_speed = [&](const SpeedProfileConfig& s, const std::string& path) {
    if (!(s.speed_min > 0.0 && s.speed_max >= s.speed_min)) fail(path + ": need 0 < speed_min <= speed_max");
    if (!(s.initial_min > 0.0 && s.initial_max >= s.initial_min)) fail(path + ": need 0 < initial_min <= initial_max");
    if (!(s.segment_min > 0.0 && s.segment_max >= s.segment_min)) fail(path + ": need 0 < segment_min <= segment_max");
    if (!(s.accel_max >= 0.0)) fail(path + ".accel_max: must be >= 0");
  };
  check_speed(speed, "speed");
  for (const auto& l : lanes) {
    if (l.speed) check_speed(*l.speed, "lanes." + l.name + ".speed");
  }
  for (const auto& v : vehicles) {
    if (!(v.initial_speed > 0.0)) fail("vehicles.initial_speed: must be > 0");
    if (!(v.spawn_time >= 0.0)) fail("vehicles.spawn_time: must be >= 0");
    for (const auto& s : v.segments) {
      if (!(s.duration >= 0.0)) fail("vehicles.segments.duration: must be >= 0");
    }
  }
  const auto& c = camera;
  if (!(c.rate > 0.0)) fail("camera.rate: must be > 0");
  if (!(c.noise_u >= 0.0 && c.noise_v >= 0.0)) fail("camera.noise: sigma must be >= 0");
  if (!(c.false_negative >= 0.0 && c.false_negative <= 1.0)) fail("camera.false_negative: must be in [0, 1]");
  if (!(c.false_positive_rate >= 0.0)) fail("camera.false_positive_rate: must be >= 0");
  if (!(c.confidence_mean > 0.0 && c.confidence_mean < 1.0)) fail("camera.confidence_mean: must be in (0, 1)");
  if (!(c.confidence_concentration > 0.0)) fail("camera.confidence_concentration: must be > 0");
  if (!(c.misclassification >= 0.0 && c.misclassification <= 1.0)) fail("camera.misclassification: must be in [0, 1]");
  if (!(c.width_noise >= 0.0)) fail("camera.width_noise: must be >= 0");
  if (!(c.disappear >= 0.0 && c.appear >= c.disappear)) fail("camera: need 0 <= disappear <= appear");
  if (!(c.mount_height > 0.0 && c.focal > 0.0 && c.look_distance > 0.0)) fail("camera: mount geometry must be > 0");
  if (!(c.image_width > 0.0 && c.image_height > 0.0)) fail("camera: image size must be > 0");
  if (!(c.dropout_per_vehicle >= 0.0)) fail("camera.dropout_per_vehicle: must be >= 0");
  const auto& r = radar;
  if (!(r.rate > 0.0)) fail("radar.rate: must be > 0");
  if (!(r.noise_x >= 0.0 && r.noise_y >= 0.0 && r.noise_v >= 0.0 && r.dimension_noise >= 0.0)) {
    fail("radar.noise: sigma must be >= 0");
  }
  if (!(r.max_range >= 0.0)) fail("radar.max_range: must be >= 0");
  if (!std::isfinite(r.clock_offset)) fail("radar.clock_offset: must be finite");
  for (const auto& l : lanes) validate_lane(l);
}

std::vector<LaneConfig> default_lanes() {
  LaneConfig far{"far", {{260.0, 5.25}, {10.0, 5.25}}, 7.0, std::nullopt};
  LaneConfig near{"near", {{260.0, 1.75}, {10.0, 1.75}}, 7.0, std::nullopt};
  // entrance lane 3.5 m to the right, blended onto the near lane between
  // x = 150 and x = 60 along a cosine ramp (max slope about 3.5 degrees)
  LaneConfig merge{"merge", {}, 6.0, SpeedProfileConfig{18.0, 25.0, 1.5, 4.0, 1.5, 8.0, 40.0}};
  for (double x = 260.0; x >= 10.0 - 1e-9; x -= 1.0) {
    const double b = x >= 150.0 ? 1.0 : x <= 60.0 ? 0.0 : 0.5 * (1.0 - std::cos(kPi * (x - 60.0) / 90.0));
    merge.polyline.emplace_back(x, 1.75 - 3.5 * b);
  }
  return {far, near, merge};
}

ScenarioConfig default_scenario() {
  ScenarioConfig cfg;
  cfg.lanes = default_lanes();
  return cfg;
}

ScenarioConfig scenario_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  ScenarioConfig cfg = default_scenario();
  Reader r(doc, "scenario");
  r("seed", cfg.seed);
  r("duration", cfg.duration);
  r("min_separation", cfg.min_separation);
  if (const json* s = r.child("speed")) read_speed(*s, "scenario.speed", cfg.speed);

  if (const json* lanes = r.child("lanes")) {
    if (!lanes->is_array()) throw ConfigError("scenario.lanes: expected an array");
    cfg.lanes.clear();
    for (std::size_t i = 0; i < lanes->size(); ++i) {
      const std::string path = fmt::format("scenario.lanes[{}]", i);
      Reader lr((*lanes)[i], path);
      LaneConfig lane;
      lane.name = fmt::format("lane{}", i);
      lr("name", lane.name);
      lr("arrival_rate", lane.arrival_rate);
      std::vector<std::vector<double>> pts;
      lr("polyline", pts);
      for (const auto& p : pts) {
        if (p.size() != 2) throw ConfigError(path + ".polyline: vertices are [x, y]");
        lane.polyline.emplace_back(p[0], p[1]);
      }
      if (const json* s = lr.child("speed")) {
        SpeedProfileConfig sp = cfg.speed;
        read_speed(*s, path + ".speed", sp);
        lane.speed = sp;
      }
      cfg.lanes.push_back(std::move(lane));
    }
  }

  if (const json* vehicles = r.child("vehicles")) {
    if (!vehicles->is_array()) throw ConfigError("scenario.vehicles: expected an array");
    for (std::size_t i = 0; i < vehicles->size(); ++i) {
      const std::string path = fmt::format("scenario.vehicles[{}]", i);
      Reader vr((*vehicles)[i], path);
      VehicleSpec v;
      vr("lane", v.lane);
      vr("spawn_time", v.spawn_time);
      vr("initial_speed", v.initial_speed);
      if (const json* c = vr.child("class")) v.object_class = read_class(*c, path + ".class");
      if (const json* segs = vr.child("segments")) {
        if (!segs->is_array()) throw ConfigError(path + ".segments: expected an array");
        for (std::size_t k = 0; k < segs->size(); ++k) {
          Reader sr((*segs)[k], fmt::format("{}.segments[{}]", path, k));
          SpeedSegment s;
          sr("duration", s.duration);
          sr("acceleration", s.acceleration);
          v.segments.push_back(s);
        }
      }
      cfg.vehicles.push_back(std::move(v));
    }
  }

  if (const json* cam = r.child("camera")) {
    Reader cr(*cam, "scenario.camera");
    auto& c = cfg.camera;
    cr("rate", c.rate);
    cr("noise_u", c.noise_u);
    cr("noise_v", c.noise_v);
    cr("false_negative", c.false_negative);
    cr("false_positive_rate", c.false_positive_rate);
    cr("confidence_mean", c.confidence_mean);
    cr("confidence_concentration", c.confidence_concentration);
    cr("misclassification", c.misclassification);
    cr("width_noise", c.width_noise);
    cr("appear", c.appear);
    cr("disappear", c.disappear);
    cr("mount_height", c.mount_height);
    cr("focal", c.focal);
    cr("look_distance", c.look_distance);
    cr("image_width", c.image_width);
    cr("image_height", c.image_height);
    cr("dropout_per_vehicle", c.dropout_per_vehicle);
    std::vector<std::vector<double>> windows;
    cr("dropouts", windows);
    for (const auto& w : windows) {
      if (w.size() != 2 || !(w[1] > w[0])) throw ConfigError("scenario.camera.dropouts: windows are [start, end]");
      c.dropouts.emplace_back(w[0], w[1]);
    }
  }

  if (const json* rad = r.child("radar")) {
    Reader rr(*rad, "scenario.radar");
    auto& c = cfg.radar;
    rr("rate", c.rate);
    rr("noise_x", c.noise_x);
    rr("noise_y", c.noise_y);
    rr("noise_v", c.noise_v);
    rr("dimension_noise", c.dimension_noise);
    rr("max_range", c.max_range);
    rr("clock_offset", c.clock_offset);
    rr("bias_x", c.bias_x);
    rr("bias_x_slope", c.bias_x_slope);
    rr("bias_reference_distance", c.bias_reference_distance);
  }

  if (const json* t = r.child("road_from_setup")) {
    cfg.road_from_setup = read_transform(*t, "scenario.road_from_setup", cfg.road_from_setup);
  }
  if (const json* t = r.child("map_from_setup")) {
    cfg.map_from_setup = read_transform(*t, "scenario.map_from_setup", cfg.map_from_setup);
  }
  cfg.validate();
  return cfg;
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
  nlohmann::ordered_json doc;
  doc["seed"] = cfg.seed;
  doc["duration"] = cfg.duration;
  doc["min_separation"] = cfg.min_separation;
  doc["speed"] = speed_json(cfg.speed);
  doc["lanes"] = json::array();
  for (const auto& l : cfg.lanes) {
    nlohmann::ordered_json lane;
    lane["name"] = l.name;
    lane["arrival_rate"] = l.arrival_rate;
    lane["polyline"] = json::array();
    for (const auto& p : l.polyline) lane["polyline"].push_back({p.x(), p.y()});
    if (l.speed) lane["speed"] = speed_json(*l.speed);
    doc["lanes"].push_back(lane);
  }
  doc["vehicles"] = json::array();
  for (const auto& v : cfg.vehicles) {
    nlohmann::ordered_json veh;
    veh["lane"] = v.lane;
    veh["spawn_time"] = v.spawn_time;
    veh["class"] = to_string(v.object_class);
    veh["initial_speed"] = v.initial_speed;
    veh["segments"] = json::array();
    for (const auto& s : v.segments) veh["segments"].push_back({{"duration", s.duration}, {"acceleration", s.acceleration}});
    doc["vehicles"].push_back(veh);
  }
  const auto& c = cfg.camera;
  nlohmann::ordered_json cam;
  cam["rate"] = c.rate;
  cam["noise_u"] = c.noise_u;
  cam["noise_v"] = c.noise_v;
  cam["false_negative"] = c.false_negative;
  cam["false_positive_rate"] = c.false_positive_rate;
  cam["confidence_mean"] = c.confidence_mean;
  cam["confidence_concentration"] = c.confidence_concentration;
  cam["misclassification"] = c.misclassification;
  cam["width_noise"] = c.width_noise;
  cam["appear"] = c.appear;
  cam["disappear"] = c.disappear;
  cam["mount_height"] = c.mount_height;
  cam["focal"] = c.focal;
  cam["look_distance"] = c.look_distance;
  cam["image_width"] = c.image_width;
  cam["image_height"] = c.image_height;
  cam["dropouts"] = json::array();
  for (const auto& [a, b] : c.dropouts) cam["dropouts"].push_back({a, b});
  cam["dropout_per_vehicle"] = c.dropout_per_vehicle;
  doc["camera"] = cam;
  const auto& rc = cfg.radar;
  nlohmann::ordered_json rad;
  rad["rate"] = rc.rate;
  rad["noise_x"] = rc.noise_x;
  rad["noise_y"] = rc.noise_y;
  rad["noise_v"] = rc.noise_v;
  rad["dimension_noise"] = rc.dimension_noise;
  rad["max_range"] = rc.max_range;
  rad["clock_offset"] = rc.clock_offset;
  rad["bias_x"] = rc.bias_x;
  rad["bias_x_slope"] = rc.bias_x_slope;
  rad["bias_reference_distance"] = rc.bias_reference_distance;
  doc["radar"] = rad;
  doc["road_from_setup"] = transform_json(cfg.road_from_setup);
  doc["map_from_setup"] = transform_json(cfg.map_from_setup);
  doc["rng"] = CounterRng::kAlgorithm;
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------- ground truth

std::vector<GroundTruthTrajectory> generate_ground_truth(const ScenarioConfig& cfg) {
  cfg.validate();
  std::vector<Lane> lanes;
  lanes.reserve(cfg.lanes.size());
  for (const auto& l : cfg.lanes) lanes.emplace_back(l);

  auto lane_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < cfg.lanes.size(); ++i) {
      if (cfg.lanes[i].name == name) return i;
    }
    throw InvalidLaneGeometry("vehicle refers to unknown lane '" + name + "'");
  };

  std::vector<Candidate> scripted;
  for (const auto& v : cfg.vehicles) {
    Candidate c;
    c.lane = lane_index(v.lane);
    c.spawn = v.spawn_time;
    c.cls = v.object_class;
    c.v0 = v.initial_speed;
    c.segments = v.segments;
    c.bounds = SpeedProfileConfig{};
    c.bounds.speed_min = 0.1;
    c.bounds.speed_max = 1e3;
    scripted.push_back(std::move(c));
  }

  std::vector<Candidate> arrivals;
  CounterRng rng(cfg.seed, "ground_truth");
  for (std::size_t li = 0; li < cfg.lanes.size(); ++li) {
    const auto& lane = cfg.lanes[li];
    if (lane.arrival_rate <= 0.0) continue;
    const SpeedProfileConfig sp = lane.speed.value_or(cfg.speed);
    for (double t = rng.exponential(lane.arrival_rate / 60.0); t < cfg.duration;
         t += rng.exponential(lane.arrival_rate / 60.0)) {
      Candidate c;
      c.lane = li;
      c.spawn = t;
      c.cls = draw_class(rng);
      c.scale = rng.uniform(0.9, 1.1);
      c.v0 = rng.uniform(sp.initial_min, sp.initial_max);
      c.bounds = sp;
      c.segments = draw_segments(rng, sp, lanes[li].length() / sp.speed_min + 1.0);
      arrivals.push_back(std::move(c));
    }
  }
  std::stable_sort(arrivals.begin(), arrivals.end(),
                   [](const Candidate& a, const Candidate& b) { return a.spawn < b.spawn; });

  std::vector<GroundTruthTrajectory> out;
  for (const auto& c : scripted) {
    out.push_back(integrate(c, lanes[c.lane], std::lround(c.spawn * kGroundTruthRate)));
  }
  // a random arrival waits at the lane entry until it keeps min_separation
  // to every vehicle already on the road; hopeless candidates are dropped
  for (const auto& c : arrivals) {
    long start = std::lround(c.spawn * kGroundTruthRate);
    for (int attempt = 0; attempt < 60; ++attempt, start += 50) {
      GroundTruthTrajectory gt = integrate(c, lanes[c.lane], start);
      const bool ok = std::all_of(out.begin(), out.end(), [&](const GroundTruthTrajectory& o) {
        return separated(gt, o, cfg.min_separation);
      });
      if (ok) {
        out.push_back(std::move(gt));
        break;
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const GroundTruthTrajectory& a, const GroundTruthTrajectory& b) {
    return a.samples.front().t < b.samples.front().t;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].vehicle_id = static_cast<int>(i) + 1;
  return out;
}

std::optional<TrajectorySample> sample_at(const GroundTruthTrajectory& gt, double t) {
  const auto& s = gt.samples;
  if (s.empty() || t < s.front().t || t > s.back().t) return std::nullopt;
  auto it = std::lower_bound(s.begin(), s.end(), t, [](const TrajectorySample& a, double v) { return a.t < v; });
  if (it->t == t) return *it;
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double w = (t - a.t) / (b.t - a.t);
  auto lerp = [w](double p, double q) { return p + w * (q - p); };
  return TrajectorySample{t, lerp(a.x, b.x), lerp(a.y, b.y), lerp(a.vx, b.vx), lerp(a.vy, b.vy),
                          wrap_angle(a.theta + w * wrap_angle(b.theta - a.theta))};
}

// ---------------------------------------------------------------- camera geometry

Homography scenario_homography(const ScenarioConfig& cfg) {
  const Eigen::Matrix3d road_to_image =
      setup_plane_to_image(cfg.camera) * similarity_matrix(cfg.road_from_setup.inverse());
  return Homography(road_to_image.inverse(), Frame::Image, Frame::Road);
}

CorrespondenceSet scenario_homography_correspondences(const ScenarioConfig& cfg) {
  const Homography h = scenario_homography(cfg);
  CorrespondenceSet set;
  set.source_frame = Frame::Image;
  set.target_frame = Frame::Road;
  // scattered over the visible road; a regular grid would contain collinear triples
  constexpr std::array<std::array<double, 2>, 12> kPoints{{{38, -4}, {45, 7}, {52, 1}, {60, 10}, {68, -6}, {77, 4},
                                                         {86, -1}, {95, 9}, {104, -5}, {113, 2}, {122, 8}, {131, -3}}};
  for (const auto& p : kPoints) {
    const Eigen::Vector2d road = cfg.road_from_setup.apply(Eigen::Vector2d(p[0], p[1]));
    const ImagePoint img = project_to_image(h, PlanePoint{road.x(), road.y(), Frame::Road});
    set.pairs.emplace_back(Eigen::Vector2d(img.u, img.v), road);
  }
  return set;
}

std::vector<CorrespondenceSet> scenario_frame_correspondences(const ScenarioConfig& cfg) {
  const std::array<Eigen::Vector2d, 6> setup_points{
      {{0.0, 0.0}, {100.0, 0.0}, {0.0, 50.0}, {200.0, 10.0}, {50.0, -20.0}, {150.0, 30.0}}};
  CorrespondenceSet road_setup{Frame::Road, Frame::Setup, {}};
  CorrespondenceSet setup_map{Frame::Setup, Frame::Map, {}};
  for (const auto& p : setup_points) {
    road_setup.pairs.emplace_back(cfg.road_from_setup.apply(p), p);
    setup_map.pairs.emplace_back(p, cfg.map_from_setup.apply(p));
  }
  return {road_setup, setup_map};
}

// ---------------------------------------------------------------- sensors

std::vector<CameraDetection> simulate_camera(std::span<const GroundTruthTrajectory> gt, const Homography& image_to_road,
                                             const ScenarioConfig& cfg) {
  const auto& c = cfg.camera;
  FootprintModel model;
  model.optical_axis = wrap_angle(cfg.road_from_setup.rotation);
  const double t_end = end_time(gt);
  const long ticks = static_cast<long>(std::floor(t_end * c.rate + 1e-9));

  auto make_box = [&](const Eigen::Vector2d& setup_pos, double length_like_width, double height_m, double heading_road,
                      bool compensate) -> std::optional<BoundingBox> {
    const double d = setup_pos.norm();
    const Eigen::Vector2d road = cfg.road_from_setup.apply(setup_pos);
    const ImagePoint foot = project_to_image(image_to_road, PlanePoint{road.x(), road.y(), Frame::Road});
    if (!in_image(foot, c)) return std::nullopt;
    const double w = c.focal * length_like_width / d;
    const double h = c.focal * height_m / d;
    BoundingBox box{{foot.u - 0.5 * w, foot.v - h}, {foot.u + 0.5 * w, foot.v}};
    if (compensate) {
      // place the box so that the extraction's footprint rule lands on the true point
      const double shift = footprint_shift(box, heading_road, model);
      box.p1.u -= shift;
      box.p2.u -= shift;
    }
    return box;
  };

  std::vector<CameraDetection> out;
  for (const auto& veh : gt) {
    if (veh.samples.empty()) continue;
    CounterRng rng(cfg.seed, fmt::format("camera/{}", veh.vehicle_id));

    // per-vehicle forced dropout window inside the visible span
    std::optional<std::pair<double, double>> forced;
    if (c.dropout_per_vehicle > 0.0) {
      double first = -1.0;
      double last = -1.0;
      for (const auto& s : veh.samples) {
        const double d = std::hypot(s.x, s.y);
        if (d >= c.disappear && d <= c.appear) {
          if (first < 0.0) first = s.t;
          last = s.t;
        }
      }
      const double lo = first + 0.5;
      const double hi = last - 0.5 - c.dropout_per_vehicle;
      if (first >= 0.0 && hi > lo) {
        const double start = rng.uniform(lo, hi);
        forced = std::make_pair(start, start + c.dropout_per_vehicle);
      }
    }

    const long k0 = static_cast<long>(std::ceil(veh.samples.front().t * c.rate - 1e-9));
    for (long k = k0; k <= ticks; ++k) {
      const double t = static_cast<double>(k) / c.rate;
      const auto s = sample_at(veh, t);
      if (!s) break;
      const Eigen::Vector2d pos(s->x, s->y);
      const double d = pos.norm();
      if (d < c.disappear || d > c.appear) continue;
      // draw everything up front so noise stays aligned across dropout settings
      const double nu = rng.normal(0.0, c.noise_u);
      const double nv = rng.normal(0.0, c.noise_v);
      const bool missed = rng.bernoulli(c.false_negative);
      const double conf = beta_draw(rng, c);
      const bool wrong_class = rng.bernoulli(c.misclassification);
      const ObjectClass alt = other_class(rng, veh.object_class);
      const double wn = rng.normal(0.0, c.width_noise);

      if (missed) continue;
      if (forced && t > forced->first && t < forced->second) continue;
      if (std::any_of(c.dropouts.begin(), c.dropouts.end(),
                      [t](const auto& w) { return t > w.first && t < w.second; })) {
        continue;
      }
      const double heading_road = wrap_angle(s->theta + cfg.road_from_setup.rotation);
      auto box = make_box(pos, veh.width, veh.height, heading_road, true);
      if (!box) continue;
      box->p1.u += nu;
      box->p2.u += nu;
      box->p1.v += nv;
      box->p2.v += nv;
      CameraDetection det;
      det.timestamp = t;
      det.box = *box;
      det.object_class = wrong_class ? alt : veh.object_class;
      det.confidence = conf;
      det.width = std::max(0.1, veh.width * (1.0 + wn));
      out.push_back(det);
    }
  }

  // clutter: Poisson arrivals snapped to camera frames
  if (c.false_positive_rate > 0.0) {
    const std::size_t n_vehicle_dets = out.size();
    CounterRng rng(cfg.seed, "camera/clutter");
    for (double t = rng.exponential(c.false_positive_rate); t <= t_end; t += rng.exponential(c.false_positive_rate)) {
      const double tick = std::ceil(t * c.rate - 1e-9) / c.rate;
      const Eigen::Vector2d pos(rng.uniform(c.disappear, c.appear), rng.uniform(-5.0, 9.0));
      const ObjectClass cls = kShapes[std::min<std::size_t>(3, static_cast<std::size_t>(rng.uniform() * 4.0))].cls;
      const double conf = beta_draw(rng, c);
      if (tick > t_end) break;
      const auto& shape = shape_of(cls);
      auto box = make_box(pos, shape.width, shape.height, 0.0, false);
      if (!box || pos.norm() < c.disappear || pos.norm() > c.appear) continue;
      // the detector's non-maximum suppression removes boxes that duplicate
      // a true detection of the same frame
      if (std::any_of(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n_vehicle_dets), [&](const CameraDetection& d) {
            return d.timestamp == tick && iou(d.box, *box) >= kClutterSuppressionIou;
          })) {
        continue;
      }
      out.push_back({tick, *box, cls, conf, shape.width});
    }
  }

  std::stable_sort(out.begin(), out.end(),
                   [](const CameraDetection& a, const CameraDetection& b) { return a.timestamp < b.timestamp; });
  return out;
}

std::vector<RadarDetection> simulate_radar(std::span<const GroundTruthTrajectory> gt, const ScenarioConfig& cfg) {
  const auto& r = cfg.radar;
  std::vector<RadarDetection> out;
  if (r.max_range <= 0.0) return out;
  const long ticks = static_cast<long>(std::floor(end_time(gt) * r.rate + 1e-9));
  for (const auto& veh : gt) {
    if (veh.samples.empty()) continue;
    CounterRng rng(cfg.seed, fmt::format("radar/{}", veh.vehicle_id));
    const long k0 = static_cast<long>(std::ceil(veh.samples.front().t * r.rate - 1e-9));
    for (long k = k0; k <= ticks; ++k) {
      const double t = static_cast<double>(k) / r.rate;
      const auto s = sample_at(veh, t);
      if (!s) break;
      const double d = std::hypot(s->x, s->y);
      if (d > r.max_range) continue;
      RadarDetection det;
      det.timestamp = t + r.clock_offset;
      const double bias = r.bias_x + r.bias_x_slope * (d - r.bias_reference_distance);
      const double nx = r.noise_x > 0.0 ? rng.normal(0.0, r.noise_x) : 0.0;
      const double ny = r.noise_y > 0.0 ? rng.normal(0.0, r.noise_y) : 0.0;
      const double nvx = r.noise_v > 0.0 ? rng.normal(0.0, r.noise_v) : 0.0;
      const double nvy = r.noise_v > 0.0 ? rng.normal(0.0, r.noise_v) : 0.0;
      const double nl = r.dimension_noise > 0.0 ? rng.normal(0.0, r.dimension_noise) : 0.0;
      const double nw = r.dimension_noise > 0.0 ? rng.normal(0.0, r.dimension_noise) : 0.0;
      const double nh = r.dimension_noise > 0.0 ? rng.normal(0.0, r.dimension_noise) : 0.0;
      det.position = PlanePoint{s->x + bias + nx, s->y + ny, Frame::Setup};
      det.velocity = Eigen::Vector2d(s->vx + nvx, s->vy + nvy);
      det.length = std::max(0.1, veh.length + nl);
      det.width = std::max(0.1, veh.width + nw);
      det.height = std::max(0.1, veh.height + nh);
      out.push_back(det);
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RadarDetection& a, const RadarDetection& b) { return a.timestamp < b.timestamp; });
  return out;
}

// ---------------------------------------------------------------- ground truth CSV

namespace {
constexpr const char* kGtHeader = "vehicle_id,class,length,width,height,t,x,y,vx,vy,theta";
}

void write_ground_truth(std::ostream& out, std::span<const GroundTruthTrajectory> gt) {
  out << kGtHeader << '\n';
  for (const auto& v : gt) {
    const std::string prefix =
        fmt::format("{},{},{:.6f},{:.6f},{:.6f}", v.vehicle_id, to_string(v.object_class), v.length, v.width, v.height);
    for (const auto& s : v.samples) {
      out << prefix << fmt::format(",{:.2f},{:.9f},{:.9f},{:.9f},{:.9f},{:.9f}\n", s.t, s.x, s.y, s.vx, s.vy, s.theta);
    }
  }
}

std::vector<GroundTruthTrajectory> read_ground_truth(std::istream& in) {
  std::vector<GroundTruthTrajectory> out;
  std::map<int, std::size_t> index;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != kGtHeader) throw ConfigError("ground truth CSV: unexpected column header");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 11) throw ConfigError(fmt::format("ground truth CSV line {}: expected 11 fields", lineno));
    try {
      const int id = std::stoi(f[0]);
      auto it = index.find(id);
      if (it == index.end()) {
        GroundTruthTrajectory g;
        g.vehicle_id = id;
        g.object_class = class_from_string(f[1]).value_or(ObjectClass::Unknown);
        g.length = std::stod(f[2]);
        g.width = std::stod(f[3]);
        g.height = std::stod(f[4]);
        out.push_back(std::move(g));
        it = index.emplace(id, out.size() - 1).first;
      }
      out[it->second].samples.push_back({std::stod(f[5]), std::stod(f[6]), std::stod(f[7]), std::stod(f[8]),
                                         std::stod(f[9]), std::stod(f[10])});
    } catch (const std::logic_error&) {
      throw ConfigError(fmt::format("ground truth CSV line {}: malformed number", lineno));
    }
  }
  return out;
}

SimulationOutput simulate(const ScenarioConfig& cfg) {
  SimulationOutput out;
  out.ground_truth = generate_ground_truth(cfg);
  const Homography h = scenario_homography(cfg);
  out.camera = simulate_camera(out.ground_truth, h, cfg);
  out.radar = simulate_radar(out.ground_truth, cfg);
  out.homography_pairs = scenario_homography_correspondences(cfg);
  out.frame_pairs = scenario_frame_correspondences(cfg);
  out.optical_axis = wrap_angle(cfg.road_from_setup.rotation);
  return out;
}

}  // namespace trajex

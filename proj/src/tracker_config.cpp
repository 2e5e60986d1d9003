#include "trajex/tracker_config.hpp"

#include "trajex/errors.hpp"

#include <nlohmann/json.hpp>

namespace trajex {

namespace {

using nlohmann::json;

template <class T>
void read(const json& doc, const char* key, T& out) {
  if (auto it = doc.find(key); it != doc.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("tracker config field '") + key + "': " + e.what());
    }
  }
}

template <int N>
void read_vec(const json& doc, const char* key, Eigen::Matrix<double, N, 1>& out) {
  if (auto it = doc.find(key); it != doc.end()) {
    std::vector<double> v;
    read(doc, key, v);
    if (v.size() != static_cast<std::size_t>(N)) {
      throw ConfigError(std::string("tracker config field '") + key + "': expected " +
                        std::to_string(N) + " variances");
    }
    for (int i = 0; i < N; ++i) out(i) = v[static_cast<std::size_t>(i)];
  }
}

}  // namespace

void TrackerConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("tracker config: " + what); };
  if (!(keep_alive > 0.0)) fail("keep_alive must be > 0");
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) fail("iou_threshold must be in (0,1)");
  if (!(road_gate > 0.0)) fail("road_gate must be > 0");
  if (!(process_noise_intensity > 0.0)) fail("process_noise_intensity must be > 0");
  if (!(r_cam.array() > 0.0).all()) fail("r_cam variances must be > 0");
  if (!(r_radar.array() > 0.0).all()) fail("r_radar variances must be > 0");
  if (!(init_pos_var > 0.0)) fail("init_pos_var must be > 0");
  if (!(init_vel_var_camera > 0.0) || !(init_vel_var_radar > 0.0)) fail("init_vel_var must be > 0");
  if (min_track_duration < 0.0) fail("min_track_duration must be >= 0");
  if (min_track_detections < 0) fail("min_track_detections must be >= 0");
  if (!(heading_speed_floor >= 0.0)) fail("heading_speed_floor must be >= 0");
  if (dimension_trim_min_count < 3) fail("dimension_trim_min_count must be >= 3");
}

TrackerConfig tracker_config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("tracker config: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("tracker config must be a JSON object");

  TrackerConfig cfg;
  read(doc, "keep_alive", cfg.keep_alive);
  read(doc, "iou_threshold", cfg.iou_threshold);
  read(doc, "road_gate", cfg.road_gate);
  read(doc, "process_noise_intensity", cfg.process_noise_intensity);
  read_vec<2>(doc, "r_cam", cfg.r_cam);
  read_vec<4>(doc, "r_radar", cfg.r_radar);
  read(doc, "init_pos_var", cfg.init_pos_var);
  if (auto it = doc.find("init_vel_var"); it != doc.end()) {
    if (!it->is_object()) throw ConfigError("tracker config field 'init_vel_var' must be an object");
    read(*it, "camera", cfg.init_vel_var_camera);
    read(*it, "radar", cfg.init_vel_var_radar);
  }
  read(doc, "min_track_duration", cfg.min_track_duration);
  read(doc, "min_track_detections", cfg.min_track_detections);
  read(doc, "heading_speed_floor", cfg.heading_speed_floor);
  read(doc, "dimension_trim_min_count", cfg.dimension_trim_min_count);
  if (auto it = doc.find("footprint"); it != doc.end()) {
    double threshold_deg = rad2deg(cfg.footprint.threshold);
    double axis_deg = rad2deg(cfg.footprint.optical_axis);
    read(*it, "coefficient", cfg.footprint.coefficient);
    read(*it, "threshold_deg", threshold_deg);
    read(*it, "optical_axis_deg", axis_deg);
    cfg.footprint.threshold = deg2rad(threshold_deg);
    cfg.footprint.optical_axis = deg2rad(axis_deg);
  }
  if (auto it = doc.find("roi"); it != doc.end() && !it->is_null()) {
    std::vector<std::vector<double>> pts;
    read(doc, "roi", pts);
    std::vector<Eigen::Vector2d> poly;
    for (const auto& p : pts) {
      if (p.size() != 2) throw ConfigError("tracker config field 'roi': vertices are [x, y]");
      poly.emplace_back(p[0], p[1]);
    }
    cfg.roi = std::move(poly);
  }
  cfg.validate();
  return cfg;
}

std::string tracker_config_to_json(const TrackerConfig& cfg) {
  json doc;
  doc["keep_alive"] = cfg.keep_alive;
  doc["iou_threshold"] = cfg.iou_threshold;
  doc["road_gate"] = cfg.road_gate;
  doc["process_noise_intensity"] = cfg.process_noise_intensity;
  doc["r_cam"] = {cfg.r_cam(0), cfg.r_cam(1)};
  doc["r_radar"] = {cfg.r_radar(0), cfg.r_radar(1), cfg.r_radar(2), cfg.r_radar(3)};
  doc["init_pos_var"] = cfg.init_pos_var;
  doc["init_vel_var"] = {{"camera", cfg.init_vel_var_camera}, {"radar", cfg.init_vel_var_radar}};
  doc["min_track_duration"] = cfg.min_track_duration;
  doc["min_track_detections"] = cfg.min_track_detections;
  doc["heading_speed_floor"] = cfg.heading_speed_floor;
  doc["dimension_trim_min_count"] = cfg.dimension_trim_min_count;
  doc["footprint"] = {{"coefficient", cfg.footprint.coefficient},
                      {"threshold_deg", rad2deg(cfg.footprint.threshold)},
                      {"optical_axis_deg", rad2deg(cfg.footprint.optical_axis)}};
  if (cfg.roi) {
    auto pts = json::array();
    for (const auto& p : *cfg.roi) pts.push_back({p.x(), p.y()});
    doc["roi"] = std::move(pts);
  } else {
    doc["roi"] = nullptr;
  }
  return doc.dump(2);
}

}  // namespace trajex

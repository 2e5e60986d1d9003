#include "trajex/tracker.hpp"

#include "trajex/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace trajex {

namespace {

struct Candidate {
  double iou;
  double distance;
  std::size_t det;
  std::size_t track;
};

Assignment greedy(std::vector<Candidate> cands, std::size_t n_dets, std::size_t n_tracks,
                  bool iou_first) {
  std::sort(cands.begin(), cands.end(), [iou_first](const Candidate& a, const Candidate& b) {
    if (iou_first && a.iou != b.iou) return a.iou > b.iou;
    return std::tie(a.distance, a.det, a.track) < std::tie(b.distance, b.det, b.track);
  });
  std::vector<bool> det_used(n_dets, false), track_used(n_tracks, false);
  Assignment out;
  for (const auto& c : cands) {
    if (det_used[c.det] || track_used[c.track]) continue;
    det_used[c.det] = track_used[c.track] = true;
    out.pairs.emplace_back(c.det, c.track);
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  for (std::size_t i = 0; i < n_dets; ++i) {
    if (!det_used[i]) out.unassigned_detections.push_back(i);
  }
  for (std::size_t j = 0; j < n_tracks; ++j) {
    if (!track_used[j]) out.unassigned_tracks.push_back(j);
  }
  return out;
}

Eigen::Vector2d position(const KalmanState& s) { return s.mean.head<2>(); }

int class_index(ObjectClass c) {
  switch (c) {
    case ObjectClass::Car: return 0;
    case ObjectClass::Bus: return 1;
    case ObjectClass::Truck: return 2;
    case ObjectClass::Motorcycle: return 3;
    case ObjectClass::Unknown: break;
  }
  return -1;
}

}  // namespace

int Track::camera_detections() const {
  return static_cast<int>(std::count_if(history.begin(), history.end(),
                                         [](const HistoryEntry& e) { return e.camera.has_value(); }));
}

int Track::radar_detections() const {
  return static_cast<int>(std::count_if(history.begin(), history.end(),
                                         [](const HistoryEntry& e) { return e.radar.has_value(); }));
}

double Track::max_detection_gap() const {
  double gap = 0.0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    gap = std::max(gap, history[i].timestamp - history[i - 1].timestamp);
  }
  return gap;
}

Assignment match_radar(std::span<const RadarDetection> dets, std::span<const PredictedTrack> tracks,
                       const TrackerConfig& cfg) {
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    for (std::size_t j = 0; j < tracks.size(); ++j) {
      const double d = (dets[i].position.vec() - position(tracks[j].state)).norm();
      if (d <= cfg.road_gate) cands.push_back({0.0, d, i, j});
    }
  }
  return greedy(std::move(cands), dets.size(), tracks.size(), false);
}

std::optional<Eigen::Vector2d> camera_road_point(const CameraDetection& det, const Homography& h,
                                                 const TrackerConfig& cfg, const KalmanState* hint) {
  std::optional<double> heading;
  if (hint != nullptr) {
    const Eigen::Vector2d v = hint->mean.tail<2>();
    if (v.norm() > cfg.heading_speed_floor) heading = std::atan2(v.y(), v.x());
  }
  try {
    return apply_homography(h, footprint_point(det.box, heading, cfg.footprint)).vec();
  } catch (const PointAtInfinity&) {
    return std::nullopt;
  }
}

Assignment match_camera(std::span<const CameraDetection> dets, std::span<const PredictedTrack> tracks,
                        const Homography& h, const TrackerConfig& cfg) {
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    for (std::size_t j = 0; j < tracks.size(); ++j) {
      const auto road = camera_road_point(dets[i], h, cfg, &tracks[j].state);
      if (!road) continue;
      const double d = (*road - position(tracks[j].state)).norm();
      const double overlap = tracks[j].last_box ? iou(dets[i].box, *tracks[j].last_box) : 0.0;
      if (overlap >= cfg.iou_threshold || d <= cfg.road_gate) cands.push_back({overlap, d, i, j});
    }
  }
  return greedy(std::move(cands), dets.size(), tracks.size(), true);
}

Tracker::Tracker(TrackerConfig cfg, Homography image_to_road, FrameTransform road_from_setup)
    : cfg_(std::move(cfg)),
      image_to_road_(std::move(image_to_road)),
      road_from_setup_(road_from_setup),
      setup_from_road_(road_from_setup.inverse()) {
  cfg_.validate();
  if (road_from_setup_.source != Frame::Setup || road_from_setup_.target != Frame::Road) {
    throw UnknownFrame("tracker needs a Setup->Road transform");
  }
}

std::vector<PredictedTrack> Tracker::predicted(double t) const {
  std::vector<PredictedTrack> out;
  out.reserve(live_.size());
  for (const auto& tr : live_) {
    // a box older than keep-alive no longer describes the object; such a
    // track is matched by road distance alone
    auto box = t - tr.last_box_time <= cfg_.keep_alive ? tr.last_box : std::nullopt;
    out.push_back({tr.id, predict(tr.state, t - tr.last_update_time, cfg_), box});
  }
  return out;
}

double Tracker::setup_distance(const Eigen::Vector2d& road) const {
  return setup_from_road_.apply(road).norm();
}

HistoryEntry& Tracker::entry_at(Track& track, double t, const KalmanState& posterior) {
  if (track.history.empty() || track.history.back().timestamp < t) {
    track.history.push_back({});
    track.history.back().timestamp = t;
  }
  track.history.back().filtered = posterior;
  track.state = posterior;
  track.last_update_time = t;
  return track.history.back();
}

void Tracker::apply_radar(Track& track, const RadarDetection& det, double t) {
  const KalmanState prior = predict(track.state, t - track.last_update_time, cfg_);
  auto& entry = entry_at(track, t, update_radar(prior, det, cfg_));
  entry.radar = det;
  const double dist = setup_distance(det.position.vec());
  track.dimension_samples[0].push_back({det.length, dist});
  track.dimension_samples[1].push_back({det.width, dist});
  track.dimension_samples[2].push_back({det.height, dist});
}

void Tracker::apply_camera(Track& track, const CameraDetection& det, const Eigen::Vector2d& road, double t,
                           std::optional<double> matched_iou) {
  const KalmanState prior = predict(track.state, t - track.last_update_time, cfg_);
  auto& entry = entry_at(track, t, update_camera(prior, {road.x(), road.y(), Frame::Road}, cfg_));
  entry.camera = det;
  entry.camera_road = road;
  track.last_box = det.box;
  track.last_box_time = t;
  if (const int k = class_index(det.object_class); k >= 0) track.class_votes[static_cast<std::size_t>(k)] += det.confidence;
  if (det.width) track.dimension_samples[1].push_back({*det.width, setup_distance(road)});
  if (matched_iou) {
    track.matched_iou_sum += *matched_iou;
    ++track.matched_iou_count;
  }
}

Track& Tracker::spawn(double t) {
  Track tr;
  tr.id = next_id_++;
  tr.creation_time = t;
  tr.last_update_time = t;
  live_.push_back(std::move(tr));
  return live_.back();
}

std::vector<TrackEvent> Tracker::step(std::span<const Measurement> batch) {
  std::vector<TrackEvent> events;
  if (batch.empty()) return events;
  const double t = batch.front().timestamp();
  for (const auto& m : batch) {
    if (m.timestamp() != t) throw std::invalid_argument("batch measurements must share one timestamp");
  }
  if (now_ && t < *now_) {
    throw TimestampRegression("batch at t=" + std::to_string(t) + " precedes tracker time " +
                              std::to_string(*now_));
  }

  // Tracks that outlived the keep-alive window are finished before matching.
  for (auto it = live_.begin(); it != live_.end();) {
    if (t - it->last_update_time > cfg_.keep_alive) {
      events.push_back({TrackEventKind::Finished, it->id, t});
      finished_.push_back(std::move(*it));
      it = live_.erase(it);
    } else {
      ++it;
    }
  }

  std::vector<RadarDetection> radar;
  std::vector<CameraDetection> camera;
  for (const auto& m : batch) {
    if (const auto* r = m.radar()) {
      radar.push_back(transform_radar(*r, road_from_setup_));
    } else {
      camera.push_back(*m.camera());
    }
  }

  std::vector<TrackId> touched;
  auto mark = [&](TrackId id, TrackEventKind kind) {
    if (std::find(touched.begin(), touched.end(), id) != touched.end()) return;
    touched.push_back(id);
    events.push_back({kind, id, t});
  };

  if (!radar.empty()) {
    const auto pred = predicted(t);
    const auto assign = match_radar(radar, pred, cfg_);
    for (const auto& [di, tj] : assign.pairs) {
      apply_radar(live_[tj], radar[di], t);
      mark(live_[tj].id, TrackEventKind::Updated);
    }
    for (const auto di : assign.unassigned_detections) {
      const auto& det = radar[di];
      Track& tr = spawn(t);
      KalmanState init;
      init.mean << det.position.x, det.position.y, det.velocity.x(), det.velocity.y();
      init.covariance = Eigen::Vector4d(cfg_.init_pos_var, cfg_.init_pos_var, cfg_.init_vel_var_radar,
                                        cfg_.init_vel_var_radar)
                            .asDiagonal();
      tr.state = init;
      auto& entry = entry_at(tr, t, init);
      entry.radar = det;
      const double dist = setup_distance(det.position.vec());
      tr.dimension_samples[0].push_back({det.length, dist});
      tr.dimension_samples[1].push_back({det.width, dist});
      tr.dimension_samples[2].push_back({det.height, dist});
      mark(tr.id, TrackEventKind::Created);
    }
  }

  if (!camera.empty()) {
    const auto pred = predicted(t);
    const auto assign = match_camera(camera, pred, image_to_road_, cfg_);
    for (const auto& [di, tj] : assign.pairs) {
      const auto road = camera_road_point(camera[di], image_to_road_, cfg_, &pred[tj].state);
      std::optional<double> overlap;
      if (pred[tj].last_box) overlap = iou(camera[di].box, *pred[tj].last_box);
      apply_camera(live_[tj], camera[di], *road, t, overlap);
      mark(live_[tj].id, TrackEventKind::Updated);
    }
    for (const auto di : assign.unassigned_detections) {
      const auto road = camera_road_point(camera[di], image_to_road_, cfg_);
      if (!road) continue;  // footprint above the horizon: cannot be placed on the road
      Track& tr = spawn(t);
      KalmanState init;
      init.mean << road->x(), road->y(), 0.0, 0.0;
      init.covariance = Eigen::Vector4d(cfg_.init_pos_var, cfg_.init_pos_var, cfg_.init_vel_var_camera,
                                        cfg_.init_vel_var_camera)
                            .asDiagonal();
      tr.state = init;
      auto& entry = entry_at(tr, t, init);
      entry.camera = camera[di];
      entry.camera_road = *road;
      tr.last_box = camera[di].box;
      tr.last_box_time = t;
      if (const int k = class_index(camera[di].object_class); k >= 0) {
        tr.class_votes[static_cast<std::size_t>(k)] += camera[di].confidence;
      }
      if (camera[di].width) tr.dimension_samples[1].push_back({*camera[di].width, setup_distance(*road)});
      mark(tr.id, TrackEventKind::Created);
    }
  }

  for (const auto& tr : live_) {
    if (std::find(touched.begin(), touched.end(), tr.id) == touched.end()) {
      events.push_back({TrackEventKind::Coasted, tr.id, t});
    }
  }
  now_ = t;
  return events;
}

FinalizeResult Tracker::finalize() {
  for (auto& tr : live_) finished_.push_back(std::move(tr));
  live_.clear();
  std::sort(finished_.begin(), finished_.end(), [](const Track& a, const Track& b) { return a.id < b.id; });

  FinalizeResult out;
  for (auto& tr : finished_) {
    const int n = tr.detection_count();
    std::string reason;
    if (tr.duration() < cfg_.min_track_duration) {
      reason = "duration below minimum";
    } else if (n < cfg_.min_track_detections) {
      reason = "too few detections";
    }
    if (reason.empty()) {
      out.finished.push_back(std::move(tr));
    } else {
      out.discarded.push_back({tr.id, tr.duration(), n, reason});
    }
  }
  finished_.clear();
  return out;
}

FinalizeResult run_tracker(Tracker& tracker, std::span<const Measurement> stream,
                           std::vector<TrackEvent>* events) {
  std::size_t i = 0;
  while (i < stream.size()) {
    std::size_t j = i + 1;
    while (j < stream.size() && stream[j].timestamp() == stream[i].timestamp()) ++j;
    auto ev = tracker.step(stream.subspan(i, j - i));
    if (events != nullptr) events->insert(events->end(), ev.begin(), ev.end());
    i = j;
  }
  if (events != nullptr && tracker.current_time()) {
    for (const auto& tr : tracker.live_tracks()) {
      events->push_back({TrackEventKind::Finished, tr.id, *tracker.current_time()});
    }
  }
  return tracker.finalize();
}

}  // namespace trajex

#include "trajex/postprocess.hpp"

#include "trajex/errors.hpp"

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace trajex {

std::vector<KalmanState> rts_smooth_states(std::span<const double> times, std::span<const KalmanState> filtered,
                                           double q) {
  if (times.size() != filtered.size()) throw std::invalid_argument("times and states differ in length");
  const std::size_t n = filtered.size();
  if (n < 2) throw TooShort("smoothing needs at least two filtered states");
  std::vector<KalmanState> smoothed(filtered.begin(), filtered.end());
  for (std::size_t k = n - 1; k-- > 0;) {
    const double dt = times[k + 1] - times[k];
    if (!(dt > 0.0)) throw std::invalid_argument("filter times must be strictly increasing");
    const Eigen::Matrix4d f = transition_matrix(dt);
    const Eigen::Matrix4d& p = filtered[k].covariance;
    const Eigen::Matrix4d p_pred = f * p * f.transpose() + process_noise(dt, q);
    const Eigen::Vector4d x_pred = f * filtered[k].mean;
    // gain = P F^T P_pred^-1
    const Eigen::Matrix4d gain = p_pred.ldlt().solve(f * p).transpose();
    smoothed[k].mean = filtered[k].mean + gain * (smoothed[k + 1].mean - x_pred);
    const Eigen::Matrix4d ps = p + gain * (smoothed[k + 1].covariance - p_pred) * gain.transpose();
    smoothed[k].covariance = 0.5 * (ps + ps.transpose());
  }
  return smoothed;
}

std::optional<double> heading(double vx, double vy, double speed_floor) {
  if (std::hypot(vx, vy) <= speed_floor) return std::nullopt;
  return wrap_angle(std::atan2(vy, vx));
}

void assign_headings(std::vector<TrajectorySample>& samples, double speed_floor) {
  std::optional<double> held;
  std::size_t first_valid = samples.size();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (auto h = heading(samples[i].vx, samples[i].vy, speed_floor)) {
      held = h;
      if (first_valid == samples.size()) first_valid = i;
    }
    samples[i].theta = held.value_or(0.0);
  }
  if (first_valid < samples.size()) {
    for (std::size_t i = 0; i < first_valid; ++i) samples[i].theta = samples[first_valid].theta;
  }
}

ObjectClass aggregate_class(const Track& track) {
  // vote slots: car, bus, truck, motorcycle; listed here in tie-break order
  constexpr std::array<std::pair<std::size_t, ObjectClass>, 4> order{{
      {0, ObjectClass::Car}, {2, ObjectClass::Truck}, {1, ObjectClass::Bus}, {3, ObjectClass::Motorcycle}}};
  if (track.camera_detections() == 0) return ObjectClass::Unknown;
  ObjectClass best = ObjectClass::Unknown;
  double best_votes = 0.0;
  for (const auto& [slot, cls] : order) {
    if (track.class_votes[slot] > best_votes) {
      best_votes = track.class_votes[slot];
      best = cls;
    }
  }
  return best;
}

std::optional<double> aggregate_dimension(std::span<const DimensionSample> samples, int trim_min_count) {
  if (samples.empty()) return std::nullopt;
  std::vector<DimensionSample> kept(samples.begin(), samples.end());
  if (static_cast<int>(kept.size()) >= trim_min_count) {
    auto by_value = [](const DimensionSample& a, const DimensionSample& b) { return a.value < b.value; };
    kept.erase(std::max_element(kept.begin(), kept.end(), by_value));
    kept.erase(std::min_element(kept.begin(), kept.end(), by_value));
  }
  double num = 0.0;
  double den = 0.0;
  for (const auto& s : kept) {
    const double w = 1.0 / (s.distance + 1.0);
    num += w * s.value;
    den += w;
  }
  return num / den;
}

Dimensions aggregate_dimensions(const Track& track, int trim_min_count) {
  return {aggregate_dimension(track.dimension_samples[0], trim_min_count),
          aggregate_dimension(track.dimension_samples[1], trim_min_count),
          aggregate_dimension(track.dimension_samples[2], trim_min_count)};
}

SmoothedTrajectory rts_smooth(const Track& track, const TrackerConfig& cfg) {
  if (track.history.size() < 2) {
    throw TooShort("track " + std::to_string(track.id) + " has fewer than two filter steps");
  }
  std::vector<double> times;
  std::vector<KalmanState> filtered;
  times.reserve(track.history.size());
  filtered.reserve(track.history.size());
  for (const auto& e : track.history) {
    times.push_back(e.timestamp);
    filtered.push_back(e.filtered);
  }
  const auto smoothed = rts_smooth_states(times, filtered, cfg.process_noise_intensity);

  SmoothedTrajectory out;
  out.id = track.id;
  out.object_class = aggregate_class(track);
  out.dimensions = aggregate_dimensions(track, cfg.dimension_trim_min_count);
  out.frame = Frame::Road;
  out.samples.reserve(smoothed.size());
  for (std::size_t i = 0; i < smoothed.size(); ++i) {
    const auto& m = smoothed[i].mean;
    out.samples.push_back({times[i], m(0), m(1), m(2), m(3), 0.0});
  }
  assign_headings(out.samples, cfg.heading_speed_floor);
  return out;
}

void TransformRegistry::add(const FrameTransform& t) { edges_.push_back(t); }

FrameTransform TransformRegistry::resolve(Frame from, Frame to) const {
  if (from == to) return FrameTransform::identity(from, to);
  // breadth-first search over transforms and their inverses
  std::map<Frame, FrameTransform> reached;
  reached.emplace(from, FrameTransform::identity(from, from));
  std::deque<Frame> queue{from};
  while (!queue.empty()) {
    const Frame cur = queue.front();
    queue.pop_front();
    for (const auto& e : edges_) {
      for (const auto& step : {e, e.inverse()}) {
        if (step.source != cur || reached.count(step.target) != 0) continue;
        reached.emplace(step.target, step.after(reached.at(cur)));
        if (step.target == to) return reached.at(to);
        queue.push_back(step.target);
      }
    }
  }
  throw UnknownFrame("no transform chain from " + std::string(to_string(from)) + " to " +
                     std::string(to_string(to)));
}

SmoothedTrajectory to_frame(const SmoothedTrajectory& traj, Frame target, const TransformRegistry& registry) {
  const FrameTransform t = registry.resolve(traj.frame, target);
  SmoothedTrajectory out = traj;
  out.frame = target;
  for (auto& s : out.samples) {
    const Eigen::Vector2d p = t.apply(Eigen::Vector2d(s.x, s.y));
    const Eigen::Vector2d v = t.apply_vector(Eigen::Vector2d(s.vx, s.vy));
    s.x = p.x();
    s.y = p.y();
    s.vx = v.x();
    s.vy = v.y();
    s.theta = wrap_angle(s.theta + t.rotation);
  }
  return out;
}

namespace {

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : std::string(); }

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

constexpr const char* kTrajectoryHeader = "track_id,class,length,width,height,t,x,y,vx,vy,theta";

}  // namespace

void export_trajectories(std::ostream& out, std::span<const SmoothedTrajectory> trajs, Frame target,
                         const TransformRegistry& registry, const std::string& config_digest) {
  out << "# trajex trajectories\n";
  out << "# frame: " << to_string(target) << '\n';
  out << "# units: t[s] x,y,length,width,height[m] vx,vy[m/s] theta[rad]\n";
  out << "# config_digest: " << config_digest << '\n';
  out << kTrajectoryHeader << '\n';
  for (const auto& traj : trajs) {
    const SmoothedTrajectory t = to_frame(traj, target, registry);
    const std::string prefix = fmt::format("{},{},{},{},{}", t.id, to_string(t.object_class),
                                           fmt_opt(t.dimensions.length), fmt_opt(t.dimensions.width),
                                           fmt_opt(t.dimensions.height));
    for (const auto& s : t.samples) {
      out << prefix
          << fmt::format(",{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", s.t, s.x, s.y, s.vx, s.vy, s.theta);
    }
  }
}

TrajectoryDocument import_trajectories(std::istream& in) {
  TrajectoryDocument doc;
  std::string line;
  bool have_header = false;
  std::size_t lineno = 0;
  std::map<TrackId, std::size_t> index;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.rfind("# frame: ", 0) == 0) doc.frame = frame_from_string(line.substr(9));
      if (line.rfind("# config_digest: ", 0) == 0) doc.config_digest = line.substr(17);
      continue;
    }
    if (!have_header) {
      if (line != kTrajectoryHeader) throw ConfigError("trajectory CSV: unexpected column header");
      have_header = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 11) throw ConfigError("trajectory CSV line " + std::to_string(lineno) + ": expected 11 fields");
    try {
      const TrackId id = std::stoll(f[0]);
      auto it = index.find(id);
      if (it == index.end()) {
        SmoothedTrajectory t;
        t.id = id;
        t.object_class = class_from_string(f[1]).value_or(ObjectClass::Unknown);
        t.dimensions = {parse_opt(f[2]), parse_opt(f[3]), parse_opt(f[4])};
        t.frame = doc.frame;
        doc.trajectories.push_back(std::move(t));
        it = index.emplace(id, doc.trajectories.size() - 1).first;
      }
      doc.trajectories[it->second].samples.push_back(
          {std::stod(f[5]), std::stod(f[6]), std::stod(f[7]), std::stod(f[8]), std::stod(f[9]), std::stod(f[10])});
    } catch (const std::logic_error&) {
      throw ConfigError("trajectory CSV line " + std::to_string(lineno) + ": malformed number");
    }
  }
  return doc;
}

}  // namespace trajex

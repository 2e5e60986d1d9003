#include "trajex/evaluation.hpp"

#include "trajex/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace trajex {

namespace {

/// Fixed-point text without a sign on values that round to zero.
std::string fixed(double v, int precision) {
  std::string s = fmt::format("{:.{}f}", v, precision);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double component(const TrajectorySample& s, Quantity q) {
  switch (q) {
    case Quantity::X: return s.x;
    case Quantity::Y: return s.y;
    case Quantity::Vx: return s.vx;
    case Quantity::Vy: return s.vy;
    case Quantity::Theta: return s.theta;
  }
  return kNaN;
}

std::size_t idx(Quantity q) { return static_cast<std::size_t>(q); }

double interp_finite(std::span<const double> xs, std::span<const double> ys, double x) {
  // linear in x over finite ys, held constant outside
  double x0 = kNaN, y0 = kNaN;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(ys[i])) continue;
    if (xs[i] >= x) {
      if (std::isnan(x0)) return ys[i];
      return y0 + (x - x0) / (xs[i] - x0) * (ys[i] - y0);
    }
    x0 = xs[i];
    y0 = ys[i];
  }
  return std::isnan(y0) ? 0.0 : y0;
}

}  // namespace

std::string_view to_string(SensorMode mode) {
  switch (mode) {
    case SensorMode::Camera: return "camera";
    case SensorMode::Radar: return "radar";
    case SensorMode::Fused: return "fused";
  }
  return "?";
}

SensorMode mode_from_string(std::string_view name) {
  if (name == "camera") return SensorMode::Camera;
  if (name == "radar") return SensorMode::Radar;
  if (name == "fused") return SensorMode::Fused;
  throw ConfigError("unknown sensor mode '" + std::string(name) + "' (camera|radar|fused)");
}

std::string_view to_string(Quantity q) {
  static constexpr std::array<std::string_view, 5> names{"x", "y", "vx", "vy", "theta"};
  return names[idx(q)];
}

std::string_view unit_of(Quantity q) {
  static constexpr std::array<std::string_view, 5> units{"m", "m", "m/s", "m/s", "deg"};
  return units[idx(q)];
}

double reference_distance(const TrajectorySample& s, DistanceMetric metric) {
  return metric == DistanceMetric::Radial ? std::hypot(s.x, s.y) : std::abs(s.x);
}

TrajectorySample interpolate_measurement(std::span<const TrajectorySample> s, double t) {
  if (s.empty() || !(t >= s.front().t && t <= s.back().t)) {
    throw OutOfRange(fmt::format("time {} outside the trajectory span", t));
  }
  auto it = std::lower_bound(s.begin(), s.end(), t, [](const TrajectorySample& a, double v) { return a.t < v; });
  if (it->t == t) return *it;
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double w = (t - a.t) / (b.t - a.t);
  auto lerp = [w](double p, double q) { return p + w * (q - p); };
  return {t, lerp(a.x, b.x), lerp(a.y, b.y), lerp(a.vx, b.vx), lerp(a.vy, b.vy),
          wrap_angle(a.theta + w * wrap_angle(b.theta - a.theta))};
}

Crossings distance_crossings(std::span<const TrajectorySample> ref, double d, DistanceMetric metric) {
  Crossings c;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double di = reference_distance(ref[i], metric);
    if (di == d) {
      if (c.times.empty() || c.times.back() != ref[i].t) c.times.push_back(ref[i].t);
      continue;
    }
    if (i + 1 == ref.size()) break;
    const double dj = reference_distance(ref[i + 1], metric);
    if ((di - d) * (dj - d) < 0.0) {
      c.times.push_back(ref[i].t + (d - di) / (dj - di) * (ref[i + 1].t - ref[i].t));
    }
  }
  if (c.times.empty()) throw NoCrossing(fmt::format("reference never passes distance {} m", d));
  return c;
}

double distance_to_time(std::span<const TrajectorySample> ref, double d, DistanceMetric metric) {
  return distance_crossings(ref, d, metric).first();
}

std::vector<double> make_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw ConfigError("grid: need step > 0 and max >= min");
  std::vector<double> g;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= n; ++i) g.push_back(lo + static_cast<double>(i) * step);
  return g;
}

ErrorCurve error_curve(std::span<const TrajectorySample> ref, std::span<const TrajectorySample> meas,
                       std::span<const double> grid, DistanceMetric metric, bool allow_gaps) {
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw GridMismatch("grid must be strictly increasing");
  }
  ErrorCurve c;
  c.grid.assign(grid.begin(), grid.end());
  for (auto q : kQuantities) {
    c.reference[idx(q)].assign(grid.size(), kNaN);
    c.measured[idx(q)].assign(grid.size(), kNaN);
    c.error[idx(q)].assign(grid.size(), kNaN);
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double t = 0.0;
    try {
      const Crossings cr = distance_crossings(ref, grid[i], metric);
      c.multiple_crossings = c.multiple_crossings || cr.multiple();
      t = cr.first();
    } catch (const NoCrossing&) {
      if (allow_gaps) continue;
      throw;
    }
    TrajectorySample r;
    TrajectorySample m;
    try {
      r = interpolate_measurement(ref, t);
      m = interpolate_measurement(meas, t);
    } catch (const OutOfRange&) {
      if (allow_gaps) continue;
      throw;
    }
    for (auto q : kQuantities) {
      double rv = component(r, q);
      double mv = component(m, q);
      double e = rv - mv;
      if (q == Quantity::Theta) {
        rv = rad2deg(rv);
        mv = rad2deg(mv);
        e = rad2deg(wrap_angle(component(r, q) - component(m, q)));
      }
      c.reference[idx(q)][i] = rv;
      c.measured[idx(q)][i] = mv;
      c.error[idx(q)][i] = e;
    }
  }
  return c;
}

BiasTable aggregate_bias_std(std::span<const ErrorCurve> curves, double interval_min, double interval_max) {
  if (curves.empty()) throw GridMismatch("aggregation needs at least one run");
  BiasTable t;
  t.grid = curves.front().grid;
  t.interval_min = interval_min;
  t.interval_max = interval_max;
  for (const auto& c : curves) {
    if (c.grid != t.grid) throw GridMismatch("runs do not share the distance grid");
  }
  const std::size_t n = t.grid.size();
  for (auto q : kQuantities) {
    auto& mu = t.mean[idx(q)];
    auto& sd = t.stddev[idx(q)];
    auto& cnt = t.count[idx(q)];
    mu.assign(n, kNaN);
    sd.assign(n, kNaN);
    cnt.assign(n, 0);
    double bias_sum = 0.0;
    double std_sum = 0.0;
    int points = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      int k = 0;
      for (const auto& c : curves) {
        const double e = c.error[idx(q)][i];
        if (std::isfinite(e)) {
          sum += e;
          ++k;
        }
      }
      cnt[i] = k;
      if (k == 0) continue;
      mu[i] = sum / k;
      double ss = 0.0;
      for (const auto& c : curves) {
        const double e = c.error[idx(q)][i];
        if (std::isfinite(e)) ss += (e - mu[i]) * (e - mu[i]);
      }
      sd[i] = std::sqrt(ss / k);
      if (t.grid[i] >= interval_min - 1e-9 && t.grid[i] <= interval_max + 1e-9) {
        bias_sum += mu[i];
        std_sum += sd[i];
        ++points;
      }
    }
    t.interval_mean_bias[idx(q)] = points > 0 ? bias_sum / points : kNaN;
    t.interval_mean_std[idx(q)] = points > 0 ? std_sum / points : kNaN;
  }
  return t;
}

SmoothedTrajectory debias(const SmoothedTrajectory& traj, const BiasTable& table, DistanceMetric metric) {
  SmoothedTrajectory out = traj;
  for (auto& s : out.samples) {
    const double d = reference_distance(s, metric);
    auto mu = [&](Quantity q) { return interp_finite(table.grid, table.mean[idx(q)], d); };
    const double bx = mu(Quantity::X);
    const double by = mu(Quantity::Y);
    const double bvx = mu(Quantity::Vx);
    const double bvy = mu(Quantity::Vy);
    const double bth = mu(Quantity::Theta);
    s.x += bx;
    s.y += by;
    s.vx += bvx;
    s.vy += bvy;
    s.theta = wrap_angle(s.theta + deg2rad(bth));
  }
  return out;
}

double ComparisonTable::bias_of(Quantity q, SensorMode m) const {
  auto it = std::find(modes.begin(), modes.end(), m);
  if (it == modes.end()) throw MissingMode("mode " + std::string(to_string(m)) + " not in table");
  return bias[idx(q)][static_cast<std::size_t>(it - modes.begin())];
}

double ComparisonTable::std_of(Quantity q, SensorMode m) const {
  auto it = std::find(modes.begin(), modes.end(), m);
  if (it == modes.end()) throw MissingMode("mode " + std::string(to_string(m)) + " not in table");
  return stddev[idx(q)][static_cast<std::size_t>(it - modes.begin())];
}

ComparisonTable comparison_table(const std::map<SensorMode, BiasTable>& tables, std::span<const SensorMode> required) {
  if (tables.empty()) throw MissingMode("no sensor mode evaluated");
  for (auto m : required) {
    if (tables.count(m) == 0) throw MissingMode("sensor mode " + std::string(to_string(m)) + " missing");
  }
  ComparisonTable out;
  for (const auto& [mode, table] : tables) {
    out.modes.push_back(mode);
    for (auto q : kQuantities) {
      out.bias[idx(q)].push_back(table.interval_mean_bias[idx(q)]);
      out.stddev[idx(q)].push_back(table.interval_mean_std[idx(q)]);
    }
  }
  return out;
}

std::string comparison_csv(const ComparisonTable& table) {
  std::string out = "quantity,unit";
  for (auto m : table.modes) out += fmt::format(",{0}_bias,{0}_std", to_string(m));
  out += '\n';
  for (auto q : kQuantities) {
    out += fmt::format("{},{}", to_string(q), unit_of(q));
    for (std::size_t i = 0; i < table.modes.size(); ++i) {
      out += "," + fixed(table.bias[idx(q)][i], 6) + "," + fixed(table.stddev[idx(q)][i], 6);
    }
    out += '\n';
  }
  return out;
}

std::string comparison_text(const ComparisonTable& table) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head{""};
  for (auto m : table.modes) {
    std::string name(to_string(m));
    name[0] = static_cast<char>(name[0] - 'a' + 'A');
    head.push_back(name);
  }
  rows.push_back(head);
  for (auto q : kQuantities) {
    std::vector<std::string> row{fmt::format("{} [{}]", to_string(q), unit_of(q))};
    for (std::size_t i = 0; i < table.modes.size(); ++i) {
      row.push_back(fixed(table.bias[idx(q)][i], 2) + " (" + fixed(table.stddev[idx(q)][i], 2) + ")");
    }
    rows.push_back(row);
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  std::string out = "Mean bias (mean standard deviation)\n";
  for (const auto& r : rows) {
    std::string line = fmt::format("{:<{}}", r[0], width[0]);
    for (std::size_t i = 1; i < r.size(); ++i) line += fmt::format("  {:>{}}", r[i], width[i]);
    out += line + '\n';
  }
  return out;
}

SummaryStats summary_stats(std::span<const Track> tracks, double duration) {
  SummaryStats s;
  s.track_count = tracks.size();
  if (tracks.empty()) return s;
  s.tracks_per_minute = duration > 0.0 ? static_cast<double>(tracks.size()) * 60.0 / duration : 0.0;
  double detections = 0.0;
  double conf_sum = 0.0;
  int conf_n = 0;
  double iou_sum = 0.0;
  int iou_n = 0;
  for (const auto& t : tracks) {
    detections += t.detection_count();
    for (const auto& e : t.history) {
      if (e.camera) {
        conf_sum += e.camera->confidence;
        ++conf_n;
      }
    }
    iou_sum += t.matched_iou_sum;
    iou_n += t.matched_iou_count;
    const double gap = t.max_detection_gap();
    s.gaps.emplace_back(t.id, gap);
    s.max_detection_gap = std::max(s.max_detection_gap, gap);
  }
  s.mean_detections_per_track = detections / static_cast<double>(tracks.size());
  s.mean_confidence = conf_n > 0 ? conf_sum / conf_n : 0.0;
  s.mean_matched_iou = iou_n > 0 ? iou_sum / iou_n : 0.0;
  return s;
}

std::string summary_text(const SummaryStats& s) {
  std::string out;
  out += fmt::format("tracks: {}\n", s.track_count);
  out += fmt::format("tracks_per_minute: {:.3f}\n", s.tracks_per_minute);
  out += fmt::format("mean_detections_per_track: {:.3f}\n", s.mean_detections_per_track);
  out += fmt::format("mean_confidence: {:.4f}\n", s.mean_confidence);
  out += fmt::format("mean_matched_iou: {:.4f}\n", s.mean_matched_iou);
  out += fmt::format("max_detection_gap_s: {:.3f}\n", s.max_detection_gap);
  return out;
}

int associate_reference(std::span<const TrajectorySample> ref, std::span<const SmoothedTrajectory> candidates,
                        double radius) {
  int best = -1;
  std::size_t best_hits = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& samples = candidates[i].samples;
    if (samples.empty() || ref.empty()) continue;
    std::size_t hits = 0;
    for (const auto& s : samples) {
      if (s.t < ref.front().t || s.t > ref.back().t) continue;
      const auto r = interpolate_measurement(ref, s.t);
      if (std::hypot(r.x - s.x, r.y - s.y) <= radius) ++hits;
    }
    if (hits > best_hits) {
      best_hits = hits;
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::string error_curve_csv(const ErrorCurve& curve) {
  std::string out = "d";
  for (auto q : kQuantities) out += fmt::format(",{0}_ref,{0}_meas,{0}_error", to_string(q));
  out += '\n';
  auto cell = [](double v) { return std::isfinite(v) ? fixed(v, 6) : std::string(); };
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    out += fmt::format("{:.3f}", curve.grid[i]);
    for (auto q : kQuantities) {
      out += "," + cell(curve.reference[idx(q)][i]) + "," + cell(curve.measured[idx(q)][i]) + "," +
             cell(curve.error[idx(q)][i]);
    }
    out += '\n';
  }
  return out;
}

std::string bias_table_csv(const BiasTable& table) {
  std::string out = "d";
  for (auto q : kQuantities) out += fmt::format(",{0}_mean,{0}_std,{0}_runs", to_string(q));
  out += '\n';
  auto cell = [](double v) { return std::isfinite(v) ? fixed(v, 6) : std::string(); };
  for (std::size_t i = 0; i < table.grid.size(); ++i) {
    out += fmt::format("{:.3f}", table.grid[i]);
    for (auto q : kQuantities) {
      out += "," + cell(table.mean[idx(q)][i]) + "," + cell(table.stddev[idx(q)][i]) + "," +
             std::to_string(table.count[idx(q)][i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace trajex

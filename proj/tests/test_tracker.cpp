#include "support.hpp"
#include "trajex/errors.hpp"
#include "trajex/random.hpp"
#include "trajex/tracker.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace trajex;

namespace {

// With the identity homography a box's footprint (lower-edge center) is its
// Road position.
CameraDetection cam_at(double t, double x, double y, double half_width = 1.0, double height = 2.0) {
  CameraDetection d;
  d.timestamp = t;
  d.box = {{x - half_width, y - height}, {x + half_width, y}};
  d.confidence = 0.9;
  return d;
}

RadarDetection radar_at(double t, double x, double y, double vx = 0.0, double vy = 0.0) {
  RadarDetection d;
  d.timestamp = t;
  d.position = {x, y, Frame::Setup};
  d.velocity = {vx, vy};
  d.length = 4.5;
  d.width = 1.8;
  d.height = 1.5;
  return d;
}

PredictedTrack predicted_at(TrackId id, double x, double y, std::optional<BoundingBox> box = std::nullopt) {
  PredictedTrack p;
  p.id = id;
  p.state.mean << x, y, 0.0, 0.0;
  p.last_box = box;
  return p;
}

std::vector<TrackEvent> step_one(Tracker& tr, const Measurement& m) { return tr.step(std::span(&m, 1)); }

int count_kind(const std::vector<TrackEvent>& ev, TrackEventKind k) {
  return static_cast<int>(std::count_if(ev.begin(), ev.end(), [k](const TrackEvent& e) { return e.kind == k; }));
}

double total_distance(const Assignment& a, std::span<const RadarDetection> d, std::span<const PredictedTrack> t) {
  double sum = 0.0;
  for (const auto& [i, j] : a.pairs) sum += (d[i].position.vec() - t[j].state.mean.head<2>()).norm();
  return sum;
}

// Smallest total distance over gate-feasible one-to-one assignments of the
// given cardinality, by exhaustive enumeration of track permutations.
double brute_force_cost(std::span<const RadarDetection> d, std::span<const PredictedTrack> t, double gate,
                        std::size_t cardinality) {
  std::vector<std::size_t> perm(t.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    // detection i pairs with track perm[i] if within gate; subsets come from
    // dropping pairs, which only lowers the count
    std::vector<double> feasible;
    for (std::size_t i = 0; i < d.size() && i < perm.size(); ++i) {
      const double dist = (d[i].position.vec() - t[perm[i]].state.mean.head<2>()).norm();
      if (dist <= gate) feasible.push_back(dist);
    }
    if (feasible.size() < cardinality) continue;
    std::sort(feasible.begin(), feasible.end());
    best = std::min(best, std::accumulate(feasible.begin(), feasible.begin() + static_cast<long>(cardinality), 0.0));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

ScenarioConfig camera_pass(double dropout_from, double dropout_to) {
  ScenarioConfig cfg = test::single_vehicle_scenario(3, "near");
  cfg.camera.false_negative = 0.0;
  cfg.camera.false_positive_rate = 0.0;
  cfg.camera.dropout_per_vehicle = 0.0;
  const auto first = simulate(cfg).camera.front().timestamp;
  cfg.camera.dropouts = {{first + dropout_from, first + dropout_to}};
  return cfg;
}

}  // namespace

TEST(MatchRadar, NoTracks) {
  const std::vector<RadarDetection> d{radar_at(0, 1, 1), radar_at(0, 5, 5)};
  const auto a = match_radar(d, {}, TrackerConfig{});
  EXPECT_TRUE(a.pairs.empty());
  EXPECT_EQ(a.unassigned_detections, (std::vector<std::size_t>{0, 1}));
}

TEST(MatchRadar, NearestWithinGate) {
  TrackerConfig cfg;
  cfg.road_gate = 2.5;
  const std::vector<RadarDetection> d{radar_at(0, 5, 0)};
  const std::vector<PredictedTrack> t{predicted_at(1, 5.5, 0), predicted_at(2, 9, 0)};
  const auto a = match_radar(d, t, cfg);
  ASSERT_EQ(a.pairs.size(), 1u);
  EXPECT_EQ(a.pairs[0], (std::pair<std::size_t, std::size_t>{0, 0}));
  EXPECT_EQ(a.unassigned_tracks, (std::vector<std::size_t>{1}));
}

TEST(MatchRadar, GreedyAgainstBruteForce) {
  TrackerConfig cfg;
  int optimal = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    CounterRng rng(seed, "test/match");
    std::vector<RadarDetection> d;
    std::vector<PredictedTrack> t;
    const bool separated = seed % 2 == 0;
    for (int k = 0; k < 5; ++k) {
      if (separated) {
        // one track per 10 m cell, each detection inside its own track's gate
        const double x = 10.0 * k, y = rng.uniform(-2, 2);
        t.push_back(predicted_at(k, x, y));
        d.push_back(radar_at(0, x + rng.uniform(-1, 1), y + rng.uniform(-1, 1)));
      } else {
        t.push_back(predicted_at(k, rng.uniform(0, 12), rng.uniform(0, 12)));
        d.push_back(radar_at(0, rng.uniform(0, 12), rng.uniform(0, 12)));
      }
    }
    const auto a = match_radar(d, t, cfg);
    std::vector<int> det_hits(5, 0), track_hits(5, 0);
    for (const auto& [i, j] : a.pairs) {
      ++det_hits[i];
      ++track_hits[j];
      EXPECT_LE((d[i].position.vec() - t[j].state.mean.head<2>()).norm(), cfg.road_gate);
    }
    for (int k = 0; k < 5; ++k) {
      EXPECT_LE(det_hits[static_cast<std::size_t>(k)], 1);
      EXPECT_LE(track_hits[static_cast<std::size_t>(k)], 1);
    }
    EXPECT_EQ(a.pairs.size() + a.unassigned_detections.size(), 5u);
    // maximal: no leftover detection/track pair is inside the gate
    for (auto i : a.unassigned_detections) {
      for (auto j : a.unassigned_tracks) {
        EXPECT_GT((d[i].position.vec() - t[j].state.mean.head<2>()).norm(), cfg.road_gate);
      }
    }
    const double greedy = total_distance(a, d, t);
    const double best = brute_force_cost(d, t, cfg.road_gate, a.pairs.size());
    EXPECT_GE(greedy, best - 1e-12);
    if (separated) {
      EXPECT_EQ(a.pairs.size(), 5u);
      EXPECT_NEAR(greedy, best, 1e-12);
    }
    optimal += std::abs(greedy - best) < 1e-12 ? 1 : 0;
  }
  EXPECT_GE(optimal, 100);
}

TEST(MatchCamera, FullOverlapAssigned) {
  const auto det = cam_at(0, 50, 10);
  const std::vector<CameraDetection> d{det};
  // prediction far away: only the IoU criterion can admit the pair
  const std::vector<PredictedTrack> t{predicted_at(1, 20, 10), predicted_at(2, 80, 10, det.box)};
  const auto a = match_camera(d, t, Homography::identity(), TrackerConfig{});
  ASSERT_EQ(a.pairs.size(), 1u);
  EXPECT_EQ(a.pairs[0].second, 1u);
}

TEST(MatchCamera, NeitherCriterionUnassigned) {
  const std::vector<CameraDetection> d{cam_at(0, 50, 10)};
  const std::vector<PredictedTrack> t{predicted_at(1, 100, 10, cam_at(0, 100, 10).box),
                                      predicted_at(2, 0, 10, cam_at(0, 0, 10).box)};
  const auto a = match_camera(d, t, Homography::identity(), TrackerConfig{});
  EXPECT_TRUE(a.pairs.empty());
  EXPECT_EQ(a.unassigned_detections.size(), 1u);
}

TEST(MatchCamera, DistanceRescuesZeroIou) {
  const std::vector<CameraDetection> d{cam_at(0, 50, 10)};
  const std::vector<PredictedTrack> t{predicted_at(1, 50.8, 10, cam_at(0, 70, 10).box)};
  const auto a = match_camera(d, t, Homography::identity(), TrackerConfig{});
  ASSERT_EQ(a.pairs.size(), 1u);
}

TEST(MatchCamera, RadarOnlyTrackByDistance) {
  const std::vector<CameraDetection> d{cam_at(0, 50, 10)};
  const std::vector<PredictedTrack> near{predicted_at(1, 51, 10)};
  EXPECT_EQ(match_camera(d, near, Homography::identity(), TrackerConfig{}).pairs.size(), 1u);
  const std::vector<PredictedTrack> far{predicted_at(1, 60, 10)};
  EXPECT_TRUE(match_camera(d, far, Homography::identity(), TrackerConfig{}).pairs.empty());
}

TEST(MatchCamera, HigherIouWins) {
  const std::vector<CameraDetection> d{cam_at(0, 50, 10)};
  const std::vector<PredictedTrack> t{predicted_at(1, 50.1, 10, cam_at(0, 50.9, 10).box),
                                      predicted_at(2, 51.0, 10, cam_at(0, 50.2, 10).box)};
  const auto a = match_camera(d, t, Homography::identity(), TrackerConfig{});
  ASSERT_EQ(a.pairs.size(), 1u);
  EXPECT_EQ(a.pairs[0].second, 1u);
}

TEST(Step, RadarInitCopiesVelocity) {
  Tracker tr(TrackerConfig{}, Homography::identity());
  const auto ev = step_one(tr, {radar_at(0.0, 100, 2, -25, 0.3), 1});
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, TrackEventKind::Created);
  ASSERT_EQ(tr.live_tracks().size(), 1u);
  const auto& s = tr.live_tracks()[0].state;
  EXPECT_DOUBLE_EQ(s.mean(2), -25.0);
  EXPECT_DOUBLE_EQ(s.mean(3), 0.3);
}

TEST(Step, CameraInitHasZeroVelocity) {
  Tracker tr(TrackerConfig{}, Homography::identity());
  step_one(tr, {cam_at(0.0, 100, 2), 0});
  ASSERT_EQ(tr.live_tracks().size(), 1u);
  const auto& s = tr.live_tracks()[0].state;
  EXPECT_EQ(s.mean.tail<2>(), Eigen::Vector2d::Zero());
  EXPECT_DOUBLE_EQ(s.covariance(2, 2), 100.0);
  EXPECT_DOUBLE_EQ(s.mean(0), 100.0);
  EXPECT_DOUBLE_EQ(s.mean(1), 2.0);
}

TEST(Step, KeepAliveThenFinished) {
  Tracker tr(TrackerConfig{}, Homography::identity());
  step_one(tr, {radar_at(1.0, 100, 2), 1});
  auto ev = step_one(tr, {radar_at(1.3, 300, 2), 1});
  EXPECT_EQ(count_kind(ev, TrackEventKind::Coasted), 1);
  EXPECT_EQ(count_kind(ev, TrackEventKind::Created), 1);
  ev = step_one(tr, {radar_at(1.6, 300, 2), 1});
  ASSERT_GE(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, TrackEventKind::Finished);
  EXPECT_EQ(ev[0].track_id, 1);
  EXPECT_EQ(tr.live_tracks().size(), 1u);
}

TEST(Step, TimestampRegression) {
  Tracker tr(TrackerConfig{}, Homography::identity());
  step_one(tr, {radar_at(1.0, 100, 2), 1});
  EXPECT_THROW(step_one(tr, {radar_at(0.5, 100, 2), 1}), TimestampRegression);
}

TEST(Step, SameTimestampRadarBeforeCamera) {
  // radar creates the track with a velocity, the camera detection of the
  // same instant then updates it instead of creating a second track
  Tracker tr(TrackerConfig{}, Homography::identity());
  const std::vector<Measurement> batch{{cam_at(0.0, 100.5, 2), 0}, {radar_at(0.0, 100, 2, -25, 0), 1}};
  const auto ev = tr.step(batch);
  EXPECT_EQ(count_kind(ev, TrackEventKind::Created), 1);
  ASSERT_EQ(tr.live_tracks().size(), 1u);
  const auto& t = tr.live_tracks()[0];
  ASSERT_EQ(t.history.size(), 1u);
  EXPECT_TRUE(t.history[0].radar.has_value());
  EXPECT_TRUE(t.history[0].camera.has_value());
}

TEST(Step, StaleBoxIgnoredForIou) {
  TrackerConfig cfg;
  Tracker tr(cfg, Homography::identity());
  const auto first = cam_at(0.0, 100, 2);
  step_one(tr, {first, 0});
  // fresh box: IoU admits the pair although the prediction is 6 m away
  for (int k = 1; k <= 3; ++k) step_one(tr, {radar_at(0.1 * k, 100 + 20 * 0.1 * k, 2, 20, 0), 1});
  auto again = first;
  again.timestamp = 0.35;
  step_one(tr, {again, 0});
  EXPECT_EQ(tr.live_tracks().size(), 1u);
  // radar keeps the track alive while its box ages beyond keep-alive
  for (int k = 4; k <= 10; ++k) step_one(tr, {radar_at(0.1 * k + 0.05, 100 + 20 * (0.1 * k + 0.05), 2, 20, 0), 1});
  again.timestamp = 1.1;
  const auto ev = step_one(tr, {again, 0});
  EXPECT_EQ(count_kind(ev, TrackEventKind::Created), 1);
  EXPECT_EQ(tr.live_tracks().size(), 2u);
}

TEST(Step, DropoutShorterThanKeepAliveKeepsOneTrack) {
  const auto sim = simulate(camera_pass(2.0, 2.3));
  const auto run = test::run_mode(sim, TrackerConfig{}, SensorMode::Camera);
  EXPECT_EQ(run.raw.tracks.finished.size(), 1u);
  EXPECT_TRUE(run.raw.tracks.discarded.empty());
}

TEST(Step, KalmanPathBridgesStaleBox) {
  const auto sim = simulate(camera_pass(2.0, 2.4));
  const auto run = test::run_mode(sim, TrackerConfig{}, SensorMode::Camera);
  ASSERT_EQ(run.raw.tracks.finished.size(), 1u);
  const auto& hist = run.raw.tracks.finished[0].history;
  // find the gap and confirm the boxes on either side do not overlap
  std::size_t gap = 0;
  for (std::size_t i = 1; i < hist.size(); ++i) {
    if (hist[i].timestamp - hist[i - 1].timestamp > 0.3) gap = i;
  }
  ASSERT_GT(gap, 0u);
  EXPECT_EQ(iou(hist[gap - 1].camera->box, hist[gap].camera->box), 0.0);
}

TEST(Finalize, Empty) {
  Tracker tr(TrackerConfig{}, Homography::identity());
  const auto r = tr.finalize();
  EXPECT_TRUE(r.finished.empty());
  EXPECT_TRUE(r.discarded.empty());
}

TEST(Finalize, ShortTrackDiscarded) {
  Tracker tr(TrackerConfig{}, Homography::identity());
  for (double t : {0.0, 0.1, 0.2}) step_one(tr, {radar_at(t, 100 - 25 * t, 2, -25, 0), 1});
  const auto r = tr.finalize();
  EXPECT_TRUE(r.finished.empty());
  ASSERT_EQ(r.discarded.size(), 1u);
  EXPECT_EQ(r.discarded[0].detections, 3);
  EXPECT_NEAR(r.discarded[0].duration, 0.2, 1e-12);
  EXPECT_FALSE(r.discarded[0].reason.empty());
}

TEST(Finalize, TwelveVehicleScenario) {
  ScenarioConfig cfg = default_scenario();
  cfg.duration = 60.0;
  for (auto& l : cfg.lanes) l.arrival_rate = 4.0;
  std::vector<GroundTruthTrajectory> gt;
  for (cfg.seed = 1; cfg.seed < 500; ++cfg.seed) {
    gt = generate_ground_truth(cfg);
    if (gt.size() == 12) break;
  }
  ASSERT_EQ(gt.size(), 12u);
  const auto run = test::run_mode(simulate(cfg), TrackerConfig{}, SensorMode::Fused);
  EXPECT_EQ(run.raw.tracks.finished.size(), 12u);
}

TEST(TrackerProperties, DeterministicAndEveryDetectionConsumedOnce) {
  ScenarioConfig cfg = default_scenario();
  cfg.seed = 17;
  cfg.duration = 30.0;
  const auto sim = simulate(cfg);
  const auto stream = merge_streams(sim.camera, sim.radar);
  const Homography h = scenario_homography(cfg);

  std::vector<TrackEvent> ev1, ev2;
  Tracker a(TrackerConfig{}, h, cfg.road_from_setup);
  Tracker b(TrackerConfig{}, h, cfg.road_from_setup);
  const auto r1 = run_tracker(a, stream, &ev1);
  const auto r2 = run_tracker(b, stream, &ev2);
  EXPECT_EQ(ev1, ev2);
  ASSERT_EQ(r1.finished.size(), r2.finished.size());
  for (std::size_t i = 0; i < r1.finished.size(); ++i) EXPECT_EQ(r1.finished[i].id, r2.finished[i].id);

  // Finished once per track; ids never reused
  std::map<TrackId, int> finished, created;
  for (const auto& e : ev1) {
    if (e.kind == TrackEventKind::Finished) ++finished[e.track_id];
    if (e.kind == TrackEventKind::Created) ++created[e.track_id];
  }
  for (const auto& [id, n] : created) {
    EXPECT_EQ(n, 1);
    EXPECT_EQ(finished[id], 1);
  }

  int consumed = 0;
  for (const auto& t : r1.finished) {
    consumed += t.detection_count();
    for (std::size_t i = 1; i < t.history.size(); ++i) EXPECT_LT(t.history[i - 1].timestamp, t.history[i].timestamp);
    EXPECT_EQ(t.last_update_time, t.history.back().timestamp);
  }
  for (const auto& d : r1.discarded) consumed += d.detections;
  EXPECT_EQ(consumed, static_cast<int>(stream.size()));
}

TEST(TrackerProperties, SeparatedTargetsWithShortGapsNeverFragment) {
  TrackerConfig cfg;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    CounterRng rng(seed, "test/separated");
    const int n = 2 + static_cast<int>(rng.uniform() * 5);
    std::vector<RadarDetection> dets;
    for (int k = 0; k < n; ++k) {
      const double y0 = 2.5 * cfg.road_gate * k;  // more than 2 gates apart
      const double x0 = rng.uniform(150, 200), vx = -rng.uniform(20, 35);
      const double gap_start = rng.uniform(1.0, 3.0), gap_len = rng.uniform(0.0, 0.4);  // detection gap stays below keep-alive
      for (int i = 0; i < 75; ++i) {
        const double t = i / 15.0;
        if (t > gap_start && t < gap_start + gap_len) continue;
        dets.push_back(radar_at(t, x0 + vx * t + rng.normal(0, 0.25), y0 + rng.normal(0, 0.4), vx, 0));
      }
    }
    std::stable_sort(dets.begin(), dets.end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    Tracker tr(cfg, Homography::identity());
    const auto r = run_tracker(tr, merge_streams({}, dets));
    ASSERT_EQ(static_cast<int>(r.finished.size()), n) << "seed " << seed;
    for (const auto& t : r.finished) {
      // every detection of a track comes from the same lane
      const double y = t.history.front().radar->position.y;
      for (const auto& h : t.history) EXPECT_LT(std::abs(h.radar->position.y - y), cfg.road_gate);
    }
  }
}

TEST(TrackerProperties, ExactConstantVelocityConverges) {
  // camera measurements on the line x = 120 - 30 t, y = 3, with no noise
  Tracker tr(TrackerConfig{}, Homography::identity());
  for (int i = 0; i < 900; ++i) {
    const double t = i / 30.0;
    step_one(tr, {cam_at(t, 120.0 - 30.0 * t, 3.0), 0});
  }
  ASSERT_EQ(tr.live_tracks().size(), 1u);
  const auto& hist = tr.live_tracks()[0].history;
  for (std::size_t i = 600; i < hist.size(); ++i) {
    EXPECT_NEAR(hist[i].filtered.mean(0), hist[i].camera_road->x(), 1e-6);
    EXPECT_NEAR(hist[i].filtered.mean(1), hist[i].camera_road->y(), 1e-6);
  }
}

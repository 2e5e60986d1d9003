#include "support.hpp"
#include "trajex/errors.hpp"
#include "trajex/ingest.hpp"
#include "trajex/simulator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace trajex;

namespace {

/// One scripted vehicle on a straight lane along +x, no random arrivals.
ScenarioConfig straight_lane(double speed, double x_from = -50.0, double x_to = 400.0) {
  ScenarioConfig cfg = default_scenario();
  cfg.lanes = {LaneConfig{"straight", {{x_from, 0.0}, {x_to, 0.0}}, 0.0, std::nullopt}};
  VehicleSpec v;
  v.lane = "straight";
  v.initial_speed = speed;
  cfg.vehicles = {v};
  return cfg;
}

/// Ground-truth vehicle serving the given radar/camera timestamp.
std::optional<TrajectorySample> truth_at(const std::vector<GroundTruthTrajectory>& gt, double t,
                                         const Eigen::Vector2d& near) {
  std::optional<TrajectorySample> best;
  for (const auto& v : gt) {
    const auto s = sample_at(v, t);
    if (s && (!best || std::hypot(s->x - near.x(), s->y - near.y()) < std::hypot(best->x - near.x(), best->y - near.y()))) {
      best = s;
    }
  }
  return best;
}

std::string camera_text(const SimulationOutput& sim) {
  std::ostringstream out;
  write_camera_log(out, sim.camera);
  return out.str();
}

std::string radar_text(const SimulationOutput& sim) {
  std::ostringstream out;
  write_radar_log(out, sim.radar);
  return out.str();
}

}  // namespace

TEST(GroundTruth, ConstantSpeedClosedForm) {
  const auto gt = generate_ground_truth(straight_lane(20.0));
  ASSERT_EQ(gt.size(), 1u);
  const auto& s = gt[0].samples;
  ASSERT_GT(s.size(), 2000u);
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    EXPECT_NEAR(s[k].x, -50.0 + 20.0 * s[k].t, 1e-9);
    EXPECT_DOUBLE_EQ(s[k].y, 0.0);
    EXPECT_DOUBLE_EQ(s[k].vx, 20.0);
    EXPECT_DOUBLE_EQ(s[k].theta, 0.0);
  }
}

TEST(GroundTruth, HundredHertzSamples) {
  const auto gt = generate_ground_truth(straight_lane(25.0));
  const auto& s = gt[0].samples;
  for (std::size_t k = 1; k < s.size(); ++k) EXPECT_NEAR(s[k].t - s[k - 1].t, 0.01, 1e-12);
}

TEST(GroundTruth, ZeroArrivalRateIsEmpty) {
  ScenarioConfig cfg = default_scenario();
  for (auto& l : cfg.lanes) l.arrival_rate = 0.0;
  cfg.vehicles.clear();
  EXPECT_TRUE(generate_ground_truth(cfg).empty());
  const auto sim = simulate(cfg);
  EXPECT_TRUE(sim.camera.empty());
  EXPECT_TRUE(sim.radar.empty());
}

TEST(GroundTruth, FiniteDifferenceMatchesVelocity) {
  // trapezoidal integration: each step advances by the mean of its endpoint
  // speeds; on polyline corners the chord is slightly shorter than the arc
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ScenarioConfig cfg = default_scenario();
    cfg.seed = seed;
    cfg.duration = 60.0;
    const auto gt = generate_ground_truth(cfg);
    ASSERT_FALSE(gt.empty());
    for (const auto& v : gt) {
      const auto& s = v.samples;
      for (std::size_t k = 0; k + 2 < s.size(); ++k) {
        const double chord = std::hypot(s[k + 1].x - s[k].x, s[k + 1].y - s[k].y);
        const double arc = 0.5 * (std::hypot(s[k].vx, s[k].vy) + std::hypot(s[k + 1].vx, s[k + 1].vy)) * 0.01;
        EXPECT_LE(chord, arc + 1e-9);
        EXPECT_GT(chord, arc - 1e-3);
        // velocity direction agrees with the displacement
        const double cross = (s[k + 1].x - s[k].x) * s[k].vy - (s[k + 1].y - s[k].y) * s[k].vx;
        EXPECT_LT(std::abs(cross) / (chord * std::hypot(s[k].vx, s[k].vy)), 0.05);
      }
    }
  }
}

TEST(GroundTruth, StraightLaneFiniteDifferenceExact) {
  ScenarioConfig cfg = straight_lane(25.0);
  cfg.vehicles[0].segments = {{2.0, 1.5}, {3.0, -1.2}, {1.0, 0.0}, {2.0, 0.7}};
  const auto gt = generate_ground_truth(cfg);
  const auto& s = gt[0].samples;
  for (std::size_t k = 0; k + 2 < s.size(); ++k) {
    EXPECT_NEAR((s[k + 1].x - s[k].x) / 0.01, 0.5 * (s[k].vx + s[k + 1].vx), 1e-6);
  }
}

TEST(GroundTruth, SpeedProfilesAreNotConstant) {
  ScenarioConfig cfg = default_scenario();
  cfg.duration = 60.0;
  const auto gt = generate_ground_truth(cfg);
  int varying = 0;
  for (const auto& v : gt) {
    double lo = 1e9;
    double hi = 0.0;
    for (const auto& s : v.samples) {
      lo = std::min(lo, std::hypot(s.vx, s.vy));
      hi = std::max(hi, std::hypot(s.vx, s.vy));
    }
    if (hi - lo > 1.0) ++varying;
  }
  EXPECT_GT(varying, static_cast<int>(gt.size()) / 2);
}

TEST(GroundTruth, VehiclesKeepMinimumSeparation) {
  ScenarioConfig cfg = default_scenario();
  cfg.duration = 120.0;
  const auto gt = generate_ground_truth(cfg);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t j = i + 1; j < gt.size(); ++j) {
      for (const auto& a : gt[i].samples) {
        const auto b = sample_at(gt[j], a.t);
        if (b) ASSERT_GE(std::hypot(a.x - b->x, a.y - b->y), cfg.min_separation - 1e-9);
      }
    }
  }
}

TEST(GroundTruth, InvalidLaneGeometry) {
  ScenarioConfig cfg = straight_lane(20.0);
  cfg.lanes[0].polyline = {{0.0, 0.0}};
  EXPECT_THROW(generate_ground_truth(cfg), InvalidLaneGeometry);
  cfg = straight_lane(20.0);
  cfg.vehicles[0].lane = "nowhere";
  EXPECT_THROW(generate_ground_truth(cfg), InvalidLaneGeometry);
}

TEST(GroundTruth, CsvRoundTrip) {
  ScenarioConfig cfg = default_scenario();
  cfg.duration = 20.0;
  const auto gt = generate_ground_truth(cfg);
  std::ostringstream out;
  write_ground_truth(out, gt);
  std::istringstream in(out.str());
  const auto back = read_ground_truth(in);
  ASSERT_EQ(back.size(), gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    EXPECT_EQ(back[i].vehicle_id, gt[i].vehicle_id);
    EXPECT_EQ(back[i].object_class, gt[i].object_class);
    ASSERT_EQ(back[i].samples.size(), gt[i].samples.size());
    for (std::size_t k = 0; k < gt[i].samples.size(); ++k) {
      EXPECT_NEAR(back[i].samples[k].x, gt[i].samples[k].x, 5e-7);
      EXPECT_NEAR(back[i].samples[k].vy, gt[i].samples[k].vy, 5e-7);
    }
  }
  std::ostringstream again;
  write_ground_truth(again, back);
  EXPECT_EQ(again.str(), out.str());
}

TEST(SampleAt, InterpolatesAndBounds) {
  GroundTruthTrajectory gt;
  gt.samples = {{0.0, 0, 0, 1, 0, deg2rad(179)}, {1.0, 10, 2, 3, 0, deg2rad(-179)}};
  const auto m = sample_at(gt, 0.4);
  ASSERT_TRUE(m);
  EXPECT_DOUBLE_EQ(m->x, 4.0);
  EXPECT_DOUBLE_EQ(m->y, 0.8);
  EXPECT_NEAR(std::abs(sample_at(gt, 0.5)->theta), kPi, 1e-12);
  EXPECT_FALSE(sample_at(gt, -0.01));
  EXPECT_FALSE(sample_at(gt, 1.01));
}

TEST(Camera, NoiseFreeFootprintRecoversGroundTruth) {
  ScenarioConfig cfg = default_scenario();
  cfg.duration = 30.0;
  test::make_noise_free(cfg);
  const auto sim = simulate(cfg);
  ASSERT_GT(sim.camera.size(), 500u);
  const Homography h = estimate_homography(sim.homography_pairs);
  FootprintModel model;
  model.optical_axis = sim.optical_axis;
  double worst = 0.0;
  for (const auto& det : sim.camera) {
    const auto road = apply_homography(h, footprint_point(det.box, std::nullopt, model));
    const Eigen::Vector2d setup = cfg.road_from_setup.inverse().apply(Eigen::Vector2d(road.x, road.y));
    const auto s = truth_at(sim.ground_truth, det.timestamp, setup);
    ASSERT_TRUE(s);
    const double heading = wrap_angle(s->theta + cfg.road_from_setup.rotation);
    const auto exact = apply_homography(h, footprint_point(det.box, heading, model));
    const Eigen::Vector2d want = cfg.road_from_setup.apply(Eigen::Vector2d(s->x, s->y));
    worst = std::max(worst, std::hypot(exact.x - want.x(), exact.y - want.y()));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Camera, FullDropoutIsEmpty) {
  ScenarioConfig cfg = default_scenario();
  cfg.duration = 30.0;
  cfg.camera.false_negative = 1.0;
  cfg.camera.false_positive_rate = 0.0;
  const auto sim = simulate(cfg);
  EXPECT_TRUE(sim.camera.empty());
  EXPECT_FALSE(sim.radar.empty());
}

TEST(Camera, BeyondAppearDistanceNotLogged) {
  // lane ends at 150 m: the vehicle never comes within the 135 m visibility limit
  ScenarioConfig cfg = straight_lane(20.0, 250.0, 150.0);
  cfg.camera.false_positive_rate = 0.0;
  const auto sim = simulate(cfg);
  EXPECT_TRUE(sim.camera.empty());
  EXPECT_FALSE(sim.radar.empty());
}

TEST(Camera, DetectionsStayInsideVisibilityInterval) {
  ScenarioConfig cfg = default_scenario();
  cfg.duration = 30.0;
  test::make_noise_free(cfg);
  const auto sim = simulate(cfg);
  const Homography h = scenario_homography(cfg);
  for (const auto& det : sim.camera) {
    const auto road = apply_homography(h, footprint_point(det.box, std::nullopt, FootprintModel{}));
    const double d = cfg.road_from_setup.inverse().apply(Eigen::Vector2d(road.x, road.y)).norm();
    EXPECT_GT(d, cfg.camera.disappear - 3.0);
    EXPECT_LT(d, cfg.camera.appear + 3.0);
  }
}

TEST(Camera, BoxSizeScalesWithInverseDistance) {
  ScenarioConfig cfg = straight_lane(20.0, 200.0, 0.0);
  test::make_noise_free(cfg);
  const auto sim = simulate(cfg);
  ASSERT_FALSE(sim.camera.empty());
  const auto width = [](const CameraDetection& d) { return d.box.p2.u - d.box.p1.u; };
  const auto& gt = sim.ground_truth[0];
  for (const auto& det : sim.camera) {
    const auto s = sample_at(gt, det.timestamp);
    const double d = std::hypot(s->x, s->y);
    EXPECT_NEAR(width(det) * d, cfg.camera.focal * gt.width, 1e-6);
  }
  // first and last frames are near 135 m and 35 m
  EXPECT_NEAR(width(sim.camera.back()) / width(sim.camera.front()), 135.0 / 35.0, 0.05);
}

TEST(Camera, ConfidenceAveragesNearDetectorMean) {
  ScenarioConfig cfg = default_scenario();
  cfg.duration = 60.0;
  const auto sim = simulate(cfg);
  double sum = 0.0;
  for (const auto& d : sim.camera) {
    ASSERT_GT(d.confidence, 0.0);
    ASSERT_LE(d.confidence, 1.0);
    sum += d.confidence;
  }
  EXPECT_NEAR(sum / static_cast<double>(sim.camera.size()), 0.91, 0.01);
}

TEST(Radar, NoiseFreeEqualsGroundTruthAtTicks) {
  ScenarioConfig cfg = default_scenario();
  cfg.duration = 30.0;
  test::make_noise_free(cfg);
  const auto sim = simulate(cfg);
  ASSERT_GT(sim.radar.size(), 500u);
  for (const auto& r : sim.radar) {
    const auto s = truth_at(sim.ground_truth, r.timestamp, Eigen::Vector2d(r.position.x, r.position.y));
    ASSERT_TRUE(s);
    EXPECT_EQ(r.position.frame, Frame::Setup);
    EXPECT_NEAR(r.position.x, s->x, 1e-12);
    EXPECT_NEAR(r.position.y, s->y, 1e-12);
    EXPECT_NEAR(r.velocity.x(), s->vx, 1e-12);
    EXPECT_NEAR(r.velocity.y(), s->vy, 1e-12);
    EXPECT_LE(std::hypot(s->x, s->y), cfg.radar.max_range);
  }
}

TEST(Radar, ZeroRangeIsEmpty) {
  ScenarioConfig cfg = default_scenario();
  cfg.duration = 30.0;
  cfg.radar.max_range = 0.0;
  EXPECT_TRUE(simulate(cfg).radar.empty());
}

TEST(Radar, ClockOffsetLagsAlongTrack) {
  ScenarioConfig cfg = straight_lane(20.0);
  test::make_noise_free(cfg);
  cfg.radar.clock_offset = 0.01;
  const auto sim = simulate(cfg);
  ASSERT_FALSE(sim.radar.empty());
  for (const auto& r : sim.radar) {
    const auto s = sample_at(sim.ground_truth[0], r.timestamp);
    if (!s) continue;
    EXPECT_NEAR(s->x - r.position.x, 0.2, 1e-9);
  }
}

TEST(Radar, BiasModel) {
  ScenarioConfig cfg = default_scenario();
  cfg.duration = 30.0;
  test::make_noise_free(cfg);
  cfg.radar.bias_x = 0.4;
  cfg.radar.bias_x_slope = 0.002;
  const auto sim = simulate(cfg);
  for (const auto& r : sim.radar) {
    const auto s = truth_at(sim.ground_truth, r.timestamp, Eigen::Vector2d(r.position.x, r.position.y));
    const double d = std::hypot(s->x, s->y);
    EXPECT_NEAR(r.position.x - s->x, 0.4 + 0.002 * (d - 85.0), 1e-9);
    EXPECT_NEAR(r.position.y, s->y, 1e-12);
  }
}

TEST(SimulatorProperties, SameSeedByteIdentical) {
  ScenarioConfig cfg = default_scenario();
  cfg.duration = 60.0;
  const auto a = simulate(cfg);
  const auto b = simulate(cfg);
  EXPECT_EQ(camera_text(a), camera_text(b));
  EXPECT_EQ(radar_text(a), radar_text(b));
  cfg.seed += 1;
  EXPECT_NE(radar_text(simulate(cfg)), radar_text(a));
}

TEST(SimulatorProperties, CountsScaleWithDuration) {
  ScenarioConfig cfg = default_scenario();
  cfg.duration = 300.0;
  const auto a = simulate(cfg);
  cfg.duration = 600.0;
  cfg.seed = 2;
  const auto b = simulate(cfg);
  const double vehicles = static_cast<double>(b.ground_truth.size()) / static_cast<double>(a.ground_truth.size());
  const double radar = static_cast<double>(b.radar.size()) / static_cast<double>(a.radar.size());
  const double camera = static_cast<double>(b.camera.size()) / static_cast<double>(a.camera.size());
  // Poisson counts of ~100 vehicles: 2x within about three standard deviations
  EXPECT_NEAR(vehicles, 2.0, 0.6);
  EXPECT_NEAR(radar, 2.0, 0.6);
  EXPECT_NEAR(camera, 2.0, 0.6);
}

TEST(SimulatorProperties, ClutterRateMatchesConfig) {
  ScenarioConfig cfg = default_scenario();
  for (auto& l : cfg.lanes) l.arrival_rate = 0.0;
  VehicleSpec v;
  v.lane = cfg.lanes[0].name;
  v.spawn_time = 0.0;
  cfg.vehicles = {v};
  cfg.camera.false_negative = 1.0;  // only clutter remains
  cfg.camera.false_positive_rate = 2.0;
  const auto sim = simulate(cfg);
  const double span = sim.ground_truth[0].samples.back().t;
  const double expected = 2.0 * span;
  EXPECT_NEAR(static_cast<double>(sim.camera.size()), expected, 4.0 * std::sqrt(expected) + 1.0);
}

TEST(ScenarioConfig, JsonRoundTrip) {
  ScenarioConfig cfg = test::single_vehicle_scenario(5, "merge");
  const auto text = scenario_to_json(cfg);
  EXPECT_EQ(scenario_to_json(scenario_from_json(text)), text);
}

TEST(ScenarioConfig, ValidationRejectsBadValues) {
  ScenarioConfig cfg = default_scenario();
  cfg.camera.rate = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = default_scenario();
  cfg.radar.noise_x = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = default_scenario();
  cfg.radar.rate = -15.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_NO_THROW(default_scenario().validate());
  EXPECT_THROW(scenario_from_json("{\"camera\": {\"rate\": -1}}"), ConfigError);
  EXPECT_THROW(scenario_from_json("not json"), ConfigError);
}

TEST(ScenarioConfig, CorrespondencesReproduceCalibration) {
  const ScenarioConfig cfg = default_scenario();
  const Homography est = estimate_homography(scenario_homography_correspondences(cfg));
  const Homography truth = scenario_homography(cfg);
  for (const auto& [u, v] : std::vector<std::pair<double, double>>{{100, 1500}, {1900, 1100}, {3500, 2000}}) {
    const auto a = apply_homography(est, {u, v});
    const auto b = apply_homography(truth, {u, v});
    EXPECT_NEAR(a.x, b.x, 1e-6);
    EXPECT_NEAR(a.y, b.y, 1e-6);
  }
  const auto sets = scenario_frame_correspondences(cfg);
  ASSERT_EQ(sets.size(), 2u);
  const auto road_setup = estimate_frame_transform(sets[0]);
  EXPECT_NEAR(road_setup.inverse().rotation, cfg.road_from_setup.rotation, 1e-12);
  const auto setup_map = estimate_frame_transform(sets[1]);
  EXPECT_NEAR(setup_map.rotation, cfg.map_from_setup.rotation, 1e-12);
}

#pragma once

#include "trajex/geometry.hpp"
#include "trajex/ingest.hpp"
#include "trajex/tracker_config.hpp"

#include <Eigen/Dense>

namespace trajex {

using StateVector = Eigen::Vector4d;      // (x, y, vx, vy), Road frame
using StateCovariance = Eigen::Matrix4d;

struct KalmanState {
  StateVector mean = StateVector::Zero();
  StateCovariance covariance = StateCovariance::Identity();
};

/// Constant-velocity transition over dt.
Eigen::Matrix4d transition_matrix(double dt);
/// Continuous white-noise-acceleration process noise integrated over dt.
Eigen::Matrix4d process_noise(double dt, double intensity);

KalmanState predict(const KalmanState& s, double dt, double process_noise_intensity);
KalmanState predict(const KalmanState& s, double dt, const TrackerConfig& cfg);

/// Joseph-form update with observation matrix `h`. Throws NumericalBreakdown
/// when the innovation covariance is not positive definite.
template <int M>
KalmanState kalman_update(const KalmanState& s, const Eigen::Matrix<double, M, 1>& z,
                          const Eigen::Matrix<double, M, 4>& h,
                          const Eigen::Matrix<double, M, M>& r);

/// Position-only update; z must be in the Road frame.
KalmanState update_camera(const KalmanState& s, const PlanePoint& z, const TrackerConfig& cfg);
/// Full-state update; the detection must already be expressed in the Road frame.
KalmanState update_radar(const KalmanState& s, const RadarDetection& z, const TrackerConfig& cfg);

/// Symmetrizes and, if needed, lifts the smallest eigenvalue above zero.
StateCovariance condition_covariance(const StateCovariance& p);

}  // namespace trajex

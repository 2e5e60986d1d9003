#include "trajex/kalman.hpp"

#include "trajex/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace trajex {

Eigen::Matrix4d transition_matrix(double dt) {
  Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
  f(0, 2) = dt;
  f(1, 3) = dt;
  return f;
}

Eigen::Matrix4d process_noise(double dt, double intensity) {
  const double dt2 = dt * dt;
  const double dt3 = dt2 * dt;
  Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
  for (int axis = 0; axis < 2; ++axis) {
    const int p = axis;
    const int v = axis + 2;
    q(p, p) = dt3 / 3.0;
    q(p, v) = q(v, p) = dt2 / 2.0;
    q(v, v) = dt;
  }
  return intensity * q;
}

StateCovariance condition_covariance(const StateCovariance& p) {
  StateCovariance sym = 0.5 * (p + p.transpose());
  Eigen::SelfAdjointEigenSolver<StateCovariance> eig(sym, Eigen::EigenvaluesOnly);
  const double min_ev = eig.eigenvalues().minCoeff();
  const double floor = 1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff());
  if (min_ev < floor) sym += (floor - min_ev) * StateCovariance::Identity();
  return sym;
}

KalmanState predict(const KalmanState& s, double dt, double intensity) {
  if (dt == 0.0) return s;
  const Eigen::Matrix4d f = transition_matrix(dt);
  KalmanState out;
  out.mean = f * s.mean;
  out.covariance = condition_covariance(f * s.covariance * f.transpose() + process_noise(dt, intensity));
  return out;
}

KalmanState predict(const KalmanState& s, double dt, const TrackerConfig& cfg) {
  return predict(s, dt, cfg.process_noise_intensity);
}

template <int M>
KalmanState kalman_update(const KalmanState& s, const Eigen::Matrix<double, M, 1>& z,
                          const Eigen::Matrix<double, M, 4>& h, const Eigen::Matrix<double, M, M>& r) {
  using MatMM = Eigen::Matrix<double, M, M>;
  const MatMM innovation_cov = h * s.covariance * h.transpose() + r;
  Eigen::LLT<MatMM> llt(innovation_cov);
  if (llt.info() != Eigen::Success || !innovation_cov.allFinite()) {
    throw NumericalBreakdown("innovation covariance is not positive definite");
  }
  // K = P H^T S^-1, solved without forming the inverse.
  const Eigen::Matrix<double, 4, M> gain = llt.solve(h * s.covariance).transpose();
  const Eigen::Matrix4d ikh = Eigen::Matrix4d::Identity() - gain * h;

  KalmanState out;
  out.mean = s.mean + gain * (z - h * s.mean);
  out.covariance = condition_covariance(ikh * s.covariance * ikh.transpose() +
                                        gain * r * gain.transpose());
  return out;
}

template KalmanState kalman_update<2>(const KalmanState&, const Eigen::Matrix<double, 2, 1>&,
                                      const Eigen::Matrix<double, 2, 4>&, const Eigen::Matrix<double, 2, 2>&);
template KalmanState kalman_update<4>(const KalmanState&, const Eigen::Matrix<double, 4, 1>&,
                                      const Eigen::Matrix<double, 4, 4>&, const Eigen::Matrix<double, 4, 4>&);

KalmanState update_camera(const KalmanState& s, const PlanePoint& z, const TrackerConfig& cfg) {
  if (z.frame != Frame::Road) throw UnknownFrame("camera update expects a Road-frame point");
  Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  return kalman_update<2>(s, z.vec(), h, cfg.camera_noise());
}

KalmanState update_radar(const KalmanState& s, const RadarDetection& z, const TrackerConfig& cfg) {
  if (z.position.frame != Frame::Road) throw UnknownFrame("radar update expects a Road-frame detection");
  const Eigen::Vector4d meas(z.position.x, z.position.y, z.velocity.x(), z.velocity.y());
  return kalman_update<4>(s, meas, Eigen::Matrix4d::Identity(), cfg.radar_noise());
}

}  // namespace trajex

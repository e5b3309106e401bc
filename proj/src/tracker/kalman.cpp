#include "mtp/tracker/kalman.hpp"

#include <algorithm>
#include <cmath>

#include "mtp/error.hpp"

namespace mtp::tracker {

namespace {

constexpr double kPosFraction = 1.0 / 20.0;
constexpr double kVelFraction = 1.0 / 160.0;
constexpr double kMinSize = 1e-3;

double scale_of(const KalmanState& s) { return std::max(s.mean(3), kMinSize); }

}  // namespace

Box KalmanState::box() const {
  return Box::from_center(mean(0), mean(1), std::max(mean(2), kMinSize), std::max(mean(3), kMinSize));
}

KalmanState kalman_init(const Box& box) {
  KalmanState s;
  s.mean << box.center_x(), box.center_y(), box.width, box.height, 0, 0, 0, 0;
  const double h = std::max(box.height, kMinSize);
  const double p = 2.0 * kPosFraction * h;
  const double v = 10.0 * kVelFraction * h;
  KalmanVector d;
  d << p, p, p, p, v, v, v, v;
  s.cov = d.array().square().matrix().asDiagonal();
  return s;
}

KalmanState kalman_predict(const KalmanState& s) {
  KalmanMatrix F = KalmanMatrix::Identity();
  F.topRightCorner<4, 4>().setIdentity();
  const double h = scale_of(s);
  KalmanVector q;
  const double p = kPosFraction * h;
  const double v = kVelFraction * h;
  q << p, p, p, p, v, v, v, v;

  KalmanState out;
  out.mean = F * s.mean;
  out.cov = F * s.cov * F.transpose();
  out.cov.diagonal() += q.array().square().matrix();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

KalmanState kalman_update(const KalmanState& s, const Box& observed) {
  Eigen::Vector4d z(observed.center_x(), observed.center_y(), observed.width, observed.height);
  if (!z.allFinite()) throw NumericError("kalman_update: non-finite observation");
  const double r = kPosFraction * scale_of(s);

  const Eigen::Matrix4d S = s.cov.topLeftCorner<4, 4>() + Eigen::Vector4d::Constant(r * r).asDiagonal().toDenseMatrix();
  Eigen::LDLT<Eigen::Matrix4d> ldlt(S);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) {
    throw NumericError("kalman_update: singular innovation covariance");
  }
  // K = P H^T S^-1, with H selecting the first four states.
  const Eigen::Matrix<double, 8, 4> PHt = s.cov.leftCols<4>();
  const Eigen::Matrix<double, 8, 4> K = ldlt.solve(PHt.transpose()).transpose();

  KalmanState out;
  out.mean = s.mean + K * (z - s.mean.head<4>());
  out.cov = s.cov - K * PHt.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

}  // namespace mtp::tracker

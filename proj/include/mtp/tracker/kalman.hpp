#pragma once

#include <Eigen/Dense>

#include "mtp/box.hpp"

namespace mtp::tracker {

using KalmanVector = Eigen::Matrix<double, 8, 1>;
using KalmanMatrix = Eigen::Matrix<double, 8, 8>;

/// Constant-velocity filter on (cx, cy, w, h) and their velocities. Noise
/// scales with the box height: process sigma h/20 (position) and h/160
/// (velocity) per step, measurement sigma h/20.
struct KalmanState {
  KalmanVector mean = KalmanVector::Zero();
  KalmanMatrix cov = KalmanMatrix::Identity();

  /// Box at the current mean; width and height floored at a small positive value.
  Box box() const;
};

KalmanState kalman_init(const Box& box);
KalmanState kalman_predict(const KalmanState& state);
/// Throws NumericError on a non-finite box or a singular innovation covariance.
KalmanState kalman_update(const KalmanState& state, const Box& observed);

}  // namespace mtp::tracker

#pragma once

#include <Eigen/Dense>

#include "rmtrack/geom.hpp"

namespace rmtrack {

/// Noise scales for the constant-velocity box filter, in pixels (sigmas,
/// not variances). init_* set the prior spread at track birth.
struct KalmanConfig {
  double process_pos_sigma = 1.0;
  double process_vel_sigma = 0.5;
  double measure_sigma = 1.0;
  double init_pos_sigma = 10.0;
  double init_vel_sigma = 10.0;
};

/// Gaussian belief over (cx, cy, w, h) and their per-frame velocities.
struct KalmanState {
  Eigen::Matrix<double, 8, 1> mean = Eigen::Matrix<double, 8, 1>::Zero();
  Eigen::Matrix<double, 8, 8> cov = Eigen::Matrix<double, 8, 8>::Zero();
};

/// Zero-velocity belief centered on the box, spread from config priors.
KalmanState kf_init(const BBox& b, const KalmanConfig& cfg);

/// One constant-velocity transition step (dt = 1 frame).
KalmanState kf_predict(const KalmanState& s, const KalmanConfig& cfg);

/// Measurement update with an observed box. Joseph-form covariance update
/// keeps the matrix symmetric PSD. Throws std::invalid_argument on a
/// non-finite measurement.
KalmanState kf_update(const KalmanState& s, const BBox& b, const KalmanConfig& cfg);

/// Box read off the mean; width/height clamped to be non-negative.
BBox predicted_box(const KalmanState& s);

}  // namespace rmtrack

#include "rmtrack/motion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rmtrack {

namespace {

using Mat8 = Eigen::Matrix<double, 8, 8>;
using Mat48 = Eigen::Matrix<double, 4, 8>;
using Mat4 = Eigen::Matrix<double, 4, 4>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Vec4 = Eigen::Matrix<double, 4, 1>;

Mat8 transition() {
  Mat8 f = Mat8::Identity();
  for (int i = 0; i < 4; ++i) f(i, i + 4) = 1.0;
  return f;
}

Mat48 observation() {
  Mat48 h = Mat48::Zero();
  for (int i = 0; i < 4; ++i) h(i, i) = 1.0;
  return h;
}

Vec4 box_to_measurement(const BBox& b) {
  return Vec4(b.cx(), b.cy(), b.w, b.h);
}

}  // namespace

KalmanState kf_init(const BBox& b, const KalmanConfig& cfg) {
  if (!b.valid()) throw std::invalid_argument("kf_init: invalid box");
  KalmanState s;
  s.mean.head<4>() = box_to_measurement(b);
  const double p2 = cfg.init_pos_sigma * cfg.init_pos_sigma;
  const double v2 = cfg.init_vel_sigma * cfg.init_vel_sigma;
  for (int i = 0; i < 4; ++i) {
    s.cov(i, i) = p2;
    s.cov(i + 4, i + 4) = v2;
  }
  return s;
}

KalmanState kf_predict(const KalmanState& s, const KalmanConfig& cfg) {
  const Mat8 f = transition();
  KalmanState out;
  out.mean = f * s.mean;
  Mat8 q = Mat8::Zero();
  const double qp = cfg.process_pos_sigma * cfg.process_pos_sigma;
  const double qv = cfg.process_vel_sigma * cfg.process_vel_sigma;
  for (int i = 0; i < 4; ++i) {
    q(i, i) = qp;
    q(i + 4, i + 4) = qv;
  }
  out.cov = f * s.cov * f.transpose() + q;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

KalmanState kf_update(const KalmanState& s, const BBox& b, const KalmanConfig& cfg) {
  if (!b.valid()) throw std::invalid_argument("kf_update: invalid measurement");
  const Mat48 h = observation();
  const Mat4 r = Mat4::Identity() * (cfg.measure_sigma * cfg.measure_sigma);

  const Vec4 innovation = box_to_measurement(b) - h * s.mean;
  const Mat4 innovation_cov = h * s.cov * h.transpose() + r;
  const Eigen::Matrix<double, 8, 4> pht = s.cov * h.transpose();
  const Eigen::Matrix<double, 8, 4> gain =
      innovation_cov.llt().solve(pht.transpose()).transpose();

  KalmanState out;
  out.mean = s.mean + gain * innovation;
  const Mat8 ikh = Mat8::Identity() - gain * h;
  out.cov = ikh * s.cov * ikh.transpose() + gain * r * gain.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

BBox predicted_box(const KalmanState& s) {
  const double w = std::max(s.mean(2), 0.0);
  const double h = std::max(s.mean(3), 0.0);
  return BBox{s.mean(0) - 0.5 * w, s.mean(1) - 0.5 * h, w, h};
}

}  // namespace rmtrack

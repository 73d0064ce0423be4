#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "rmtrack/motion.hpp"
#include "rmtrack/rng.hpp"

using rmtrack::BBox;
using rmtrack::CounterRng;
using rmtrack::KalmanConfig;
using rmtrack::KalmanState;

namespace {

double min_eigenvalue(const Eigen::Matrix<double, 8, 8>& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>> es(m);
  return es.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("kf_init mean and covariance") {
  const KalmanConfig cfg;
  const KalmanState s = rmtrack::kf_init({10, 10, 4, 4}, cfg);
  CHECK(s.mean(0) == 12.0);
  CHECK(s.mean(1) == 12.0);
  CHECK(s.mean(2) == 4.0);
  CHECK(s.mean(3) == 4.0);
  for (int i = 4; i < 8; ++i) CHECK(s.mean(i) == 0.0);
  for (int i = 0; i < 8; ++i) CHECK(s.cov(i, i) > 0.0);

  // Zero velocity: the first prediction reproduces the box exactly.
  const BBox p = rmtrack::predicted_box(rmtrack::kf_predict(s, cfg));
  CHECK(p.x == 10.0);
  CHECK(p.y == 10.0);
  CHECK(p.w == 4.0);
  CHECK(p.h == 4.0);
}

TEST_CASE("stationary target: prediction converges from a wrong start") {
  const KalmanConfig cfg;
  const BBox target{50, 60, 12, 20};
  KalmanState s = rmtrack::kf_init({0, 0, 4, 4}, cfg);
  for (int i = 0; i < 50; ++i) {
    s = rmtrack::kf_predict(s, cfg);
    s = rmtrack::kf_update(s, target, cfg);
  }
  const BBox p = rmtrack::predicted_box(rmtrack::kf_predict(s, cfg));
  CHECK(std::abs(p.x - target.x) < 1e-6);
  CHECK(std::abs(p.y - target.y) < 1e-6);
  CHECK(std::abs(p.w - target.w) < 1e-6);
  CHECK(std::abs(p.h - target.h) < 1e-6);
}

TEST_CASE("constant velocity is learned") {
  const KalmanConfig cfg;
  KalmanState s = rmtrack::kf_init({0, 10, 6, 6}, cfg);
  double x = 0.0;
  for (int i = 0; i < 10; ++i) {
    x += 2.0;
    s = rmtrack::kf_predict(s, cfg);
    s = rmtrack::kf_update(s, {x, 10, 6, 6}, cfg);
  }
  // After 10 updates each further predict advances center x by ~2.
  const double cx_now = s.mean(0);
  const KalmanState pred = rmtrack::kf_predict(s, cfg);
  CHECK(std::abs(pred.mean(0) - cx_now - 2.0) < 0.1);
}

TEST_CASE("zero innovation leaves the mean unchanged") {
  const KalmanConfig cfg;
  KalmanState s = rmtrack::kf_init({5, 5, 3, 3}, cfg);
  s = rmtrack::kf_predict(s, cfg);
  const BBox pred = rmtrack::predicted_box(s);
  const KalmanState u = rmtrack::kf_update(s, pred, cfg);
  for (int i = 0; i < 8; ++i) CHECK(std::abs(u.mean(i) - s.mean(i)) < 1e-9);
}

TEST_CASE("update rejects non-finite measurements") {
  const KalmanConfig cfg;
  const KalmanState s = rmtrack::kf_init({5, 5, 3, 3}, cfg);
  CHECK_THROWS_AS(static_cast<void>(
                      rmtrack::kf_update(s, {std::nan(""), 0, 1, 1}, cfg)),
                  std::invalid_argument);
}

TEST_CASE("covariance stays symmetric PSD over 10^4 random cycles") {
  const KalmanConfig cfg;
  const CounterRng rng(41);
  KalmanState s = rmtrack::kf_init({100, 100, 10, 10}, cfg);
  for (int i = 0; i < 10000; ++i) {
    s = rmtrack::kf_predict(s, cfg);
    const std::uint64_t st = CounterRng::stream_of(30, i);
    // Skip some updates to mix occlusion-like gaps in.
    if (rng.uniform(st, 0) < 0.2) continue;
    const BBox z{100 + rng.normal(st, 1) * 5.0, 100 + rng.normal(st, 2) * 5.0,
                 10 + rng.uniform(st, 6) * 4.0, 10 + rng.uniform(st, 7) * 4.0};
    s = rmtrack::kf_update(s, z, cfg);
    if (i % 100 == 0) {
      REQUIRE((s.cov - s.cov.transpose()).cwiseAbs().maxCoeff() < 1e-9);
      REQUIRE(min_eigenvalue(s.cov) > -1e-9);
    }
  }
  REQUIRE((s.cov - s.cov.transpose()).cwiseAbs().maxCoeff() < 1e-9);
  REQUIRE(min_eigenvalue(s.cov) > -1e-9);
}

TEST_CASE("predict-only position variance is non-decreasing") {
  const KalmanConfig cfg;
  KalmanState s = rmtrack::kf_init({5, 5, 3, 3}, cfg);
  double prev0 = s.cov(0, 0), prev1 = s.cov(1, 1);
  for (int i = 0; i < 100; ++i) {
    s = rmtrack::kf_predict(s, cfg);
    REQUIRE(s.cov(0, 0) >= prev0);
    REQUIRE(s.cov(1, 1) >= prev1);
    prev0 = s.cov(0, 0);
    prev1 = s.cov(1, 1);
  }
}

TEST_CASE("predicted_box clamps degenerate sizes") {
  KalmanState s;
  s.mean(0) = 10;
  s.mean(1) = 10;
  s.mean(2) = -4;  // filter drifted to a negative width
  s.mean(3) = 2;
  const BBox b = rmtrack::predicted_box(s);
  CHECK(b.w == 0.0);
  CHECK(b.h == 2.0);
  CHECK(b.valid());
}

#pragma once

#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mcmot/error.hpp"
#include "mcmot/geometry.hpp"

namespace mcmot {

using Vector4d = Eigen::Matrix<double, 4, 1>;
using Vector8d = Eigen::Matrix<double, 8, 1>;
using Matrix4d = Eigen::Matrix<double, 4, 4>;
using Matrix8d = Eigen::Matrix<double, 8, 8>;
using Matrix48d = Eigen::Matrix<double, 4, 8>;

/// 95% quantile of chi-square with 4 degrees of freedom; squared Mahalanobis
/// distances above it are treated as infeasible associations.
inline constexpr double kChi2Gate4 = 9.4877;

/// Process/measurement noise standard deviations, expressed as multiples of
/// the box height so the filter is scale-free.
struct NoiseProfile {
  double std_weight_position = 1.0 / 20.0;
  double std_weight_velocity = 1.0 / 160.0;
};

/// Mean over (cx, cy, a, h, vcx, vcy, va, vh) and its covariance.
struct KalmanState {
  Vector8d mean = Vector8d::Zero();
  Matrix8d covariance = Matrix8d::Identity();
};

/// State projected into measurement space.
struct Projection {
  Vector4d mean = Vector4d::Zero();
  Matrix4d covariance = Matrix4d::Identity();
};

inline Vector4d to_vector(const Xyah& m) { return {m[0], m[1], m[2], m[3]}; }

/// Squared Mahalanobis distance of each measurement from a projected state.
/// The innovation covariance is factorized once (Cholesky), never inverted.
inline std::vector<double> squared_mahalanobis(const Projection& p, std::span<const Xyah> zs) {
  const Eigen::LLT<Matrix4d> llt(p.covariance);
  if (llt.info() != Eigen::Success) {
    fail(ErrorCategory::numeric, "innovation covariance is not positive definite");
  }
  std::vector<double> out;
  out.reserve(zs.size());
  for (const auto& z : zs) {
    const Vector4d d = to_vector(z) - p.mean;
    const Vector4d y = llt.matrixL().solve(d);
    out.push_back(y.squaredNorm());
  }
  return out;
}

/// Constant-velocity Kalman filter over xyah boxes with dt = 1 frame.
class KalmanFilter {
 public:
  explicit KalmanFilter(NoiseProfile noise = {}) : noise_(noise) {
    if (!(noise.std_weight_position > 0.0 && noise.std_weight_velocity > 0.0)) {
      fail(ErrorCategory::config, "noise weights must be strictly positive");
    }
    motion_.setIdentity();
    for (int i = 0; i < 4; ++i) motion_(i, 4 + i) = 1.0;
    update_.setZero();
    for (int i = 0; i < 4; ++i) update_(i, i) = 1.0;
  }

  const NoiseProfile& noise() const { return noise_; }
  const Matrix8d& transition() const { return motion_; }
  const Matrix48d& measurement_matrix() const { return update_; }

  KalmanState initiate(const Xyah& measurement) const {
    const double h = measurement[3];
    if (!(h > 0.0)) fail(ErrorCategory::domain, "initiate: measurement height must be positive");
    KalmanState s;
    s.mean.head<4>() = to_vector(measurement);
    s.mean.tail<4>().setZero();

    const double wp = noise_.std_weight_position;
    const double wv = noise_.std_weight_velocity;
    Vector8d std;
    std << 2 * wp * h, 2 * wp * h, 1e-2, 2 * wp * h, 10 * wv * h, 10 * wv * h, 1e-5, 10 * wv * h;
    s.covariance = std.array().square().matrix().asDiagonal();
    return s;
  }

  KalmanState predict(const KalmanState& s) const {
    const double h = s.mean(3);
    const double wp = noise_.std_weight_position;
    const double wv = noise_.std_weight_velocity;
    Vector8d std;
    std << wp * h, wp * h, 1e-2, wp * h, wv * h, wv * h, 1e-5, wv * h;
    const Matrix8d q = std.array().square().matrix().asDiagonal();

    KalmanState out;
    out.mean = motion_ * s.mean;
    out.covariance = motion_ * s.covariance * motion_.transpose() + q;
    symmetrize(out.covariance);
    return out;
  }

  Projection project(const KalmanState& s) const {
    const double h = s.mean(3);
    const double wp = noise_.std_weight_position;
    Vector4d std;
    std << wp * h, wp * h, 1e-1, wp * h;
    Projection p;
    p.mean = update_ * s.mean;
    p.covariance = update_ * s.covariance * update_.transpose();
    p.covariance.diagonal() += std.array().square().matrix();
    return p;
  }

  KalmanState update(const KalmanState& s, const Xyah& z) const {
    if (!(z[3] > 0.0)) fail(ErrorCategory::domain, "update: measurement height must be positive");
    const Projection p = project(s);
    const Eigen::LLT<Matrix4d> llt(p.covariance);
    if (llt.info() != Eigen::Success) {
      fail(ErrorCategory::numeric, "innovation covariance is not positive definite");
    }
    // K = P H^T S^-1, solved as S K^T = H P.
    const Matrix48d hp = update_ * s.covariance;
    const Eigen::Matrix<double, 8, 4> gain = llt.solve(hp).transpose();

    KalmanState out;
    out.mean = s.mean + gain * (to_vector(z) - p.mean);
    // Joseph form keeps the covariance PSD under rounding.
    const Matrix8d ikh = Matrix8d::Identity() - gain * update_;
    const Matrix4d r = p.covariance - hp * update_.transpose();
    out.covariance = ikh * s.covariance * ikh.transpose() + gain * r * gain.transpose();
    symmetrize(out.covariance);
    return out;
  }

  std::vector<double> gating_distance(const KalmanState& s, std::span<const Xyah> zs) const {
    for (const auto& z : zs) {
      if (!(z[3] > 0.0)) fail(ErrorCategory::domain, "gating_distance: measurement height must be positive");
    }
    return squared_mahalanobis(project(s), zs);
  }

 private:
  static void symmetrize(Matrix8d& m) { m = 0.5 * (m + m.transpose()).eval(); }

  NoiseProfile noise_;
  Matrix8d motion_;
  Matrix48d update_;
};

/// Box estimate carried by a state.
inline BoundingBox state_box(const KalmanState& s) {
  return from_xyah({s.mean(0), s.mean(1), s.mean(2), s.mean(3)});
}

}  // namespace mcmot

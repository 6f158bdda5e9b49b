// Copyright 2026 The ttt_lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ttt_lab/errors.hpp"

namespace ttt {

/// Camera-to-world pose at a timestamp (seconds). Rotation is a unit quaternion.
struct Pose {
  double timestamp = 0.0;
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity(double timestamp = 0.0) {
    Pose p;
    p.timestamp = timestamp;
    return p;
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& point) const { return rotation * point + translation; }
};

/// a * b as rigid motions (apply b first). The result carries b's timestamp.
inline Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.timestamp = b.timestamp;
  out.rotation = (a.rotation * b.rotation).normalized();
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

/// Inverse rigid motion; keeps the timestamp.
inline Pose inverse(const Pose& p) {
  Pose out;
  out.timestamp = p.timestamp;
  out.rotation = p.rotation.conjugate();
  out.translation = -(out.rotation * p.translation);
  return out;
}

/// Rotation angle of a quaternion, radians in [0, pi]. Uses
/// 2 atan2(|v|, |w|), which keeps full relative precision near the identity
/// (acos of (trace - 1) / 2 bottoms out around 1e-8 rad).
inline double rotation_angle(const Eigen::Quaterniond& q) {
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
}

struct Trajectory {
  std::vector<Pose> poses;

  std::size_t size() const noexcept { return poses.size(); }
  bool empty() const noexcept { return poses.empty(); }
};

/// Throws InvalidArgument unless the trajectory is nonempty, strictly
/// increasing in time, and every quaternion is unit within 1e-9.
inline void validate(const Trajectory& traj) {
  if (traj.empty()) throw InvalidArgument("trajectory is empty");
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Pose& p = traj.poses[i];
    if (!std::isfinite(p.timestamp) || !p.translation.allFinite() || !p.rotation.coeffs().allFinite())
      throw InvalidArgument("pose " + std::to_string(i) + " has non-finite fields");
    if (std::abs(p.rotation.norm() - 1.0) > 1e-9)
      throw InvalidArgument("pose " + std::to_string(i) + " quaternion is not unit norm");
    if (i > 0 && !(p.timestamp > traj.poses[i - 1].timestamp))
      throw InvalidArgument("timestamps must be strictly increasing (pose " + std::to_string(i) + ")");
  }
}

/// x -> scale * R x + t.
struct Sim3Transform {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return scale * (rotation * x) + translation; }
};

/// Maps a pose through a similarity: the camera center moves with the full
/// transform, the orientation is pre-multiplied by R.
inline Pose transform_pose(const Sim3Transform& t, const Pose& p) {
  Pose out;
  out.timestamp = p.timestamp;
  out.rotation = (Eigen::Quaterniond(t.rotation) * p.rotation).normalized();
  out.translation = t.apply(p.translation);
  return out;
}

inline Trajectory transform_trajectory(const Sim3Transform& t, const Trajectory& traj) {
  Trajectory out;
  out.poses.reserve(traj.size());
  for (const auto& p : traj.poses) out.poses.push_back(transform_pose(t, p));
  return out;
}

/// Points with optional per-point unit normals.
struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::optional<std::vector<Eigen::Vector3d>> normals;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  bool has_normals() const noexcept { return normals.has_value(); }
};

inline void validate(const PointCloud& cloud) {
  if (cloud.empty()) throw InvalidArgument("point cloud is empty");
  for (const auto& p : cloud.points)
    if (!p.allFinite()) throw InvalidArgument("point cloud has non-finite coordinates");
  if (cloud.normals) {
    if (cloud.normals->size() != cloud.points.size())
      throw InvalidArgument("normal count differs from point count");
    for (const auto& n : *cloud.normals)
      if (!(std::abs(n.norm() - 1.0) <= 1e-6)) throw InvalidArgument("normals must be unit length");
  }
}

/// Row-major depth image (meters). Pixels with gt <= 0 or non-finite values
/// are invalid for metrics.
struct DepthMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> depth;

  float at(std::size_t x, std::size_t y) const { return depth[y * width + x]; }
};

inline void validate(const DepthMap& map) {
  if (map.width == 0 || map.height == 0) throw InvalidArgument("depth map dims must be positive");
  if (map.depth.size() != map.width * map.height)
    throw InvalidArgument("depth buffer length does not match width * height");
}

}  // namespace ttt

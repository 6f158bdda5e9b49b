// Copyright 2026 The ttt_lab Authors
// SPDX-License-Identifier: Apache-2.0

// Chunk composition after periodic state resets. Each chunk is reconstructed
// in its own frame (first pose = identity); chunks are chained into one world
// frame by their metric anchor poses alone. No scale is fitted and nothing is
// optimised.
//
// Chunks overlap by one frame: the last frame of chunk k is the first frame of
// chunk k + 1, so its globalised pose is the natural anchor of chunk k + 1.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ttt_lab/errors.hpp"
#include "ttt_lab/geometry.hpp"

namespace ttt {

struct Chunk {
  Trajectory local_trajectory;
  std::optional<PointCloud> local_cloud;
  Pose anchor;
};

struct StitchOptions {
  /// Require each anchor to match the previous chunk's globalised last pose.
  /// When false, anchors are authoritative (e.g. supplied by a separate
  /// metric-pose source).
  bool check_overlap = true;
  double overlap_tolerance = 1e-6;
};

struct StitchResult {
  Trajectory trajectory;
  PointCloud cloud;
};

/// Anchor-relative pose deviation: translation distance plus rotation angle.
inline double pose_distance(const Pose& a, const Pose& b) {
  const Pose rel = compose(inverse(a), b);
  return rel.translation.norm() + rotation_angle(rel.rotation);
}

inline StitchResult stitch(const std::vector<Chunk>& chunks, const StitchOptions& opts = {}) {
  if (chunks.empty()) throw InvalidArgument("stitch needs at least one chunk");
  StitchResult out;
  bool any_cloud = false;
  bool all_normals = true;
  for (const auto& c : chunks) {
    if (c.local_cloud) {
      any_cloud = true;
      all_normals = all_normals && c.local_cloud->has_normals();
    }
  }
  if (any_cloud && all_normals) out.cloud.normals.emplace();

  for (std::size_t k = 0; k < chunks.size(); ++k) {
    const Chunk& chunk = chunks[k];
    validate(chunk.local_trajectory);
    if (std::abs(chunk.anchor.rotation.norm() - 1.0) > 1e-9)
      throw InvalidArgument("chunk " + std::to_string(k) + " anchor quaternion is not unit norm");
    const Pose& first = chunk.local_trajectory.poses.front();
    if (first.translation.norm() > 1e-9 || rotation_angle(first.rotation) > 1e-9)
      throw InvalidArgument("chunk " + std::to_string(k) + " does not start at the local identity");

    if (k > 0 && opts.check_overlap) {
      const Pose& prev_last = out.trajectory.poses.back();
      const double gap = pose_distance(prev_last, chunk.anchor);
      if (!(gap <= opts.overlap_tolerance)) {
        throw InvalidArgument("chunk " + std::to_string(k) + " anchor disagrees with the previous chunk's last pose by " +
                              std::to_string(gap));
      }
    }

    const std::size_t skip = k > 0 ? 1 : 0;  // boundary frame already emitted
    for (std::size_t i = skip; i < chunk.local_trajectory.size(); ++i)
      out.trajectory.poses.push_back(compose(chunk.anchor, chunk.local_trajectory.poses[i]));

    if (chunk.local_cloud) {
      const PointCloud& cloud = *chunk.local_cloud;
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        out.cloud.points.push_back(chunk.anchor.apply(cloud.points[i]));
        if (out.cloud.normals) out.cloud.normals->push_back(chunk.anchor.rotation * (*cloud.normals)[i]);
      }
    }
  }
  validate(out.trajectory);
  return out;
}

/// Splits a global trajectory into chunks of `period` frames, each chunk also
/// holding the next chunk's first frame. Anchors are the global poses of each
/// chunk's first frame; local poses are anchor^-1 * global.
inline std::vector<Chunk> split_into_chunks(const Trajectory& global, std::size_t period) {
  validate(global);
  if (period < 1) throw InvalidArgument("chunk period must be >= 1");
  std::vector<Chunk> chunks;
  const std::size_t n = global.size();
  for (std::size_t start = 0; start == 0 || start + 1 < n; start += period) {
    Chunk chunk;
    chunk.anchor = global.poses[start];
    const Pose to_local = inverse(chunk.anchor);
    const std::size_t end = std::min(n - 1, start + period);
    for (std::size_t i = start; i <= end; ++i)
      chunk.local_trajectory.poses.push_back(compose(to_local, global.poses[i]));
    // Exact identity for the first frame keeps round-off out of the anchor check.
    chunk.local_trajectory.poses.front().rotation = Eigen::Quaterniond::Identity();
    chunk.local_trajectory.poses.front().translation.setZero();
    chunks.push_back(std::move(chunk));
    if (end == n - 1) break;
  }
  return chunks;
}

}  // namespace ttt

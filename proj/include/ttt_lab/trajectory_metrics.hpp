// Copyright 2026 The ttt_lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "ttt_lab/alignment.hpp"
#include "ttt_lab/errors.hpp"
#include "ttt_lab/geometry.hpp"

namespace ttt {

enum class Alignment { Sim3, Se3, None };

/// Association failed or left too few pairs. Carries the matched count.
class AssociationError : public Error {
 public:
  AssociationError(const std::string& what, std::size_t matched)
      : Error(what + " (matched pairs: " + std::to_string(matched) + ")"), matched_(matched) {}
  std::size_t matched() const noexcept { return matched_; }

 private:
  std::size_t matched_;
};

struct MatchedPair {
  std::size_t est;
  std::size_t gt;
};

/// Nearest-timestamp association: every candidate pair with |dt| <= max_dt is
/// considered in order of increasing |dt| and accepted if neither pose is
/// already used. Result is sorted by estimate index.
inline std::vector<MatchedPair> associate(const Trajectory& est, const Trajectory& gt,
                                          double max_dt = 0.02) {
  struct Candidate {
    double dt;
    std::size_t est;
    std::size_t gt;
  };
  std::vector<Candidate> candidates;
  std::size_t lo = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double t = est.poses[i].timestamp;
    while (lo < gt.size() && gt.poses[lo].timestamp < t - max_dt) ++lo;
    for (std::size_t j = lo; j < gt.size() && gt.poses[j].timestamp <= t + max_dt; ++j)
      candidates.push_back({std::abs(gt.poses[j].timestamp - t), i, j});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.dt < b.dt; });
  std::vector<char> est_used(est.size(), 0);
  std::vector<char> gt_used(gt.size(), 0);
  std::vector<MatchedPair> out;
  for (const auto& c : candidates) {
    if (est_used[c.est] || gt_used[c.gt]) continue;
    est_used[c.est] = gt_used[c.gt] = 1;
    out.push_back({c.est, c.gt});
  }
  std::sort(out.begin(), out.end(), [](const MatchedPair& a, const MatchedPair& b) { return a.est < b.est; });
  return out;
}

/// Best alignment of the estimate's camera centers onto ground truth over the
/// given matches. None returns the identity.
inline Sim3Transform align_trajectories(const Trajectory& est, const Trajectory& gt,
                                        const std::vector<MatchedPair>& matches, Alignment align) {
  if (align == Alignment::None) return {};
  if (matches.size() < 3) throw AssociationError("alignment needs at least 3 matched poses", matches.size());
  Eigen::Matrix3Xd src(3, static_cast<Eigen::Index>(matches.size()));
  Eigen::Matrix3Xd dst(3, static_cast<Eigen::Index>(matches.size()));
  for (std::size_t i = 0; i < matches.size(); ++i) {
    src.col(static_cast<Eigen::Index>(i)) = est.poses[matches[i].est].translation;
    dst.col(static_cast<Eigen::Index>(i)) = gt.poses[matches[i].gt].translation;
  }
  return umeyama_sim3(src, dst, align == Alignment::Sim3);
}

/// Absolute trajectory error: RMSE (meters) of camera-center residuals after
/// the requested alignment.
inline double ate(const Trajectory& est, const Trajectory& gt, Alignment align = Alignment::Sim3,
                  double max_dt = 0.02) {
  const auto matches = associate(est, gt, max_dt);
  if (matches.empty()) throw AssociationError("no poses associated within time tolerance", 0);
  const Sim3Transform t = align_trajectories(est, gt, matches, align);
  double sum = 0.0;
  for (const auto& m : matches)
    sum += (t.apply(est.poses[m.est].translation) - gt.poses[m.gt].translation).squaredNorm();
  return std::sqrt(sum / static_cast<double>(matches.size()));
}

struct RpeResult {
  double trans = 0.0;   // meters
  double rot_deg = 0.0; // degrees
  std::size_t pairs = 0;
};

/// Relative pose error over matched poses `delta` apart:
/// E_i = (gt_i^-1 gt_{i+delta})^-1 (est_i^-1 est_{i+delta}).
inline RpeResult rpe(const Trajectory& est, const Trajectory& gt, std::size_t delta = 1,
                     double max_dt = 0.02) {
  if (delta < 1) throw InvalidArgument("rpe delta must be >= 1");
  const auto matches = associate(est, gt, max_dt);
  if (matches.size() < delta + 1)
    throw AssociationError("rpe needs at least delta + 1 matched poses", matches.size());
  RpeResult out;
  double trans_sq = 0.0;
  double rot_sq = 0.0;
  for (std::size_t i = 0; i + delta < matches.size(); ++i) {
    const Pose& g0 = gt.poses[matches[i].gt];
    const Pose& g1 = gt.poses[matches[i + delta].gt];
    const Pose& e0 = est.poses[matches[i].est];
    const Pose& e1 = est.poses[matches[i + delta].est];
    const Pose err = compose(inverse(compose(inverse(g0), g1)), compose(inverse(e0), e1));
    trans_sq += err.translation.squaredNorm();
    const double angle = rotation_angle(err.rotation) * 180.0 / std::numbers::pi;
    rot_sq += angle * angle;
    ++out.pairs;
  }
  out.trans = std::sqrt(trans_sq / static_cast<double>(out.pairs));
  out.rot_deg = std::sqrt(rot_sq / static_cast<double>(out.pairs));
  return out;
}

}  // namespace ttt

// Copyright 2026 The ttt_lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <string>

#include "ttt_lab/errors.hpp"
#include "ttt_lab/geometry.hpp"

namespace ttt {

/// Closed-form least-squares similarity (Umeyama 1991) mapping src columns
/// onto dst columns: minimises sum |s R src_i + t - dst_i|^2 with det R = +1.
/// With with_scale = false the scale is fixed to 1 (rigid fit).
///
/// Throws InvalidArgument for fewer than 3 points or mismatched inputs, and
/// DegenerateError when the source points are collinear (or coincident) or
/// the fitted scale is not positive.
inline Sim3Transform umeyama_sim3(const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst,
                                  bool with_scale = true) {
  const Eigen::Index n = src.cols();
  if (dst.cols() != n) throw InvalidArgument("umeyama: src and dst point counts differ");
  if (n < 3) throw InvalidArgument("umeyama: need at least 3 point pairs, got " + std::to_string(n));
  if (!src.allFinite() || !dst.allFinite()) throw InvalidArgument("umeyama: non-finite points");

  const Eigen::Vector3d mu_src = src.rowwise().mean();
  const Eigen::Vector3d mu_dst = dst.rowwise().mean();
  const Eigen::Matrix3Xd src_c = src.colwise() - mu_src;
  const Eigen::Matrix3Xd dst_c = dst.colwise() - mu_dst;
  const double inv_n = 1.0 / static_cast<double>(n);

  // Collinear sources leave a rotation about their line unconstrained.
  const Eigen::JacobiSVD<Eigen::Matrix3d> spread(src_c * src_c.transpose() * inv_n);
  const Eigen::Vector3d spread_sv = spread.singularValues();
  if (!(spread_sv(0) > 0.0) || spread_sv(1) <= 1e-12 * spread_sv(0))
    throw DegenerateError("umeyama: source points are collinear or coincident");

  const Eigen::Matrix3d cov = dst_c * src_c.transpose() * inv_n;
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d sign = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) sign(2) = -1.0;

  Sim3Transform out;
  out.rotation = svd.matrixU() * sign.asDiagonal() * svd.matrixV().transpose();
  if (with_scale) {
    const double src_var = src_c.squaredNorm() * inv_n;
    out.scale = svd.singularValues().dot(sign) / src_var;
    if (!(out.scale > 0.0)) throw DegenerateError("umeyama: fitted scale is not positive");
  }
  out.translation = mu_dst - out.scale * out.rotation * mu_src;
  return out;
}

}  // namespace ttt

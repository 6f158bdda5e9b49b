// Copyright 2026 The ttt_lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "ttt_lab/errors.hpp"
#include "ttt_lab/geometry.hpp"
#include "ttt_lab/parallel.hpp"

namespace ttt {

/// Order-fixed pairwise summation.
inline double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

/// Exact nearest-neighbour search over a uniform grid whose cell edge is the
/// bounding-box diagonal divided by cbrt(N). Queries visit cells in growing
/// Chebyshev shells and stop once no unvisited cell can hold a closer point.
class NearestNeighborGrid {
 public:
  struct Hit {
    std::size_t index = 0;
    double distance = 0.0;
  };

  explicit NearestNeighborGrid(std::span<const Eigen::Vector3d> points) : points_(points) {
    if (points.empty()) throw InvalidArgument("nearest-neighbour grid needs at least one point");
    lo_ = points.front();
    Eigen::Vector3d hi = points.front();
    for (const auto& p : points) {
      lo_ = lo_.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    const double diag = (hi - lo_).norm();
    cell_ = diag / std::cbrt(static_cast<double>(points.size()));
    if (!(cell_ > 0.0)) cell_ = 1.0;
    for (int i = 0; i < 3; ++i) dims_[i] = static_cast<long>(std::floor((hi(i) - lo_(i)) / cell_)) + 1;

    const std::size_t cells = static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]);
    std::vector<std::size_t> cell_of_point(points.size());
    start_.assign(cells + 1, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      cell_of_point[i] = flat(cell_coords(points[i]));
      ++start_[cell_of_point[i] + 1];
    }
    for (std::size_t c = 0; c < cells; ++c) start_[c + 1] += start_[c];
    order_.resize(points.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < points.size(); ++i) order_[fill[cell_of_point[i]]++] = i;
  }

  Hit nearest(const Eigen::Vector3d& q) const {
    const std::array<long, 3> qc = cell_coords(q);
    double best_sq = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    const long max_r = std::max({dims_[0], dims_[1], dims_[2]});
    for (long r = 0; r <= max_r; ++r) {
      const std::array<long, 3> lo{std::max(0L, qc[0] - r), std::max(0L, qc[1] - r), std::max(0L, qc[2] - r)};
      const std::array<long, 3> hi{std::min(dims_[0] - 1, qc[0] + r), std::min(dims_[1] - 1, qc[1] + r),
                                   std::min(dims_[2] - 1, qc[2] + r)};
      for (long x = lo[0]; x <= hi[0]; ++x) {
        for (long y = lo[1]; y <= hi[1]; ++y) {
          for (long z = lo[2]; z <= hi[2]; ++z) {
            const long ring = std::max({std::abs(x - qc[0]), std::abs(y - qc[1]), std::abs(z - qc[2])});
            if (ring != r) continue;
            const std::size_t c = flat({x, y, z});
            for (std::size_t k = start_[c]; k < start_[c + 1]; ++k) {
              const std::size_t idx = order_[k];
              const double d = (points_[idx] - q).squaredNorm();
              if (d < best_sq || (d == best_sq && idx < best)) {
                best_sq = d;
                best = idx;
              }
            }
          }
        }
      }
      // Lower bound on the distance to anything outside the visited box.
      double bound = std::numeric_limits<double>::infinity();
      for (int i = 0; i < 3; ++i) {
        if (qc[i] - r > 0) bound = std::min(bound, q(i) - (lo_(i) + static_cast<double>(qc[i] - r) * cell_));
        if (qc[i] + r + 1 < dims_[i])
          bound = std::min(bound, lo_(i) + static_cast<double>(qc[i] + r + 1) * cell_ - q(i));
      }
      if (bound == std::numeric_limits<double>::infinity()) break;  // whole grid visited
      if (best_sq < std::numeric_limits<double>::infinity() && bound >= 0.0 && best_sq <= bound * bound) break;
    }
    return {best, std::sqrt(best_sq)};
  }

 private:
  std::array<long, 3> cell_coords(const Eigen::Vector3d& p) const {
    std::array<long, 3> c{};
    for (int i = 0; i < 3; ++i) {
      const double f = std::floor((p(i) - lo_(i)) / cell_);
      c[i] = f < 0.0 ? 0 : std::min(dims_[i] - 1, static_cast<long>(std::min(f, 1e15)));
    }
    return c;
  }

  std::size_t flat(const std::array<long, 3>& c) const {
    return static_cast<std::size_t>((c[0] * dims_[1] + c[1]) * dims_[2] + c[2]);
  }

  std::span<const Eigen::Vector3d> points_;
  Eigen::Vector3d lo_;
  double cell_ = 1.0;
  std::array<long, 3> dims_{1, 1, 1};
  std::vector<std::size_t> start_;
  std::vector<std::size_t> order_;
};

struct ChamferResult {
  double accuracy = 0.0;      // mean distance rec -> gt
  double completeness = 0.0;  // mean distance gt -> rec
  double chamfer = 0.0;       // (accuracy + completeness) / 2
};

/// Mean distance from each point of `from` to its nearest point in `to`.
inline double mean_nearest_distance(const PointCloud& from, const PointCloud& to, std::size_t threads = 1) {
  const NearestNeighborGrid grid(to.points);
  std::vector<double> d(from.size());
  parallel_for(from.size(), threads, [&](std::size_t i) { d[i] = grid.nearest(from.points[i]).distance; });
  return pairwise_sum(d) / static_cast<double>(d.size());
}

inline ChamferResult chamfer(const PointCloud& rec, const PointCloud& gt, std::size_t threads = 1) {
  validate(rec);
  validate(gt);
  ChamferResult out;
  out.accuracy = mean_nearest_distance(rec, gt, threads);
  out.completeness = mean_nearest_distance(gt, rec, threads);
  out.chamfer = (out.accuracy + out.completeness) / 2.0;
  return out;
}

/// Symmetric mean of |n_p . n_nn(p)| over nearest-neighbour matches in both
/// directions. Normals are treated as unoriented.
inline double normal_consistency(const PointCloud& a, const PointCloud& b, std::size_t threads = 1) {
  validate(a);
  validate(b);
  if (!a.has_normals() || !b.has_normals()) throw InvalidArgument("normal consistency needs normals on both clouds");
  auto one_way = [threads](const PointCloud& from, const PointCloud& to) {
    const NearestNeighborGrid grid(to.points);
    std::vector<double> dots(from.size());
    parallel_for(from.size(), threads, [&](std::size_t i) {
      const auto hit = grid.nearest(from.points[i]);
      dots[i] = std::abs((*from.normals)[i].dot((*to.normals)[hit.index]));
    });
    return pairwise_sum(dots) / static_cast<double>(dots.size());
  };
  return 0.5 * (one_way(a, b) + one_way(b, a));
}

}  // namespace ttt

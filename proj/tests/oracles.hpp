// Copyright 2026 The ttt_lab Authors
// SPDX-License-Identifier: Apache-2.0

// Slow reference implementations used only by tests. Nothing here calls into
// the library's kernels.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace ttt::oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat out(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      long double acc = 0.0L;
      for (Eigen::Index k = 0; k < a.cols(); ++k) acc += static_cast<long double>(a(i, k)) * b(k, j);
      out(i, j) = static_cast<double>(acc);
    }
  }
  return out;
}

inline Mat transpose(const Mat& a) {
  Mat out(a.cols(), a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

/// Row softmax in long double.
inline Mat softmax(const Mat& logits, double scale) {
  Mat out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    long double mx = -std::numeric_limits<long double>::infinity();
    for (Eigen::Index c = 0; c < logits.cols(); ++c) mx = std::max(mx, static_cast<long double>(scale) * logits(r, c));
    long double total = 0.0L;
    std::vector<long double> e(static_cast<std::size_t>(logits.cols()));
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      e[static_cast<std::size_t>(c)] = std::exp(static_cast<long double>(scale) * logits(r, c) - mx);
      total += e[static_cast<std::size_t>(c)];
    }
    for (Eigen::Index c = 0; c < logits.cols(); ++c) out(r, c) = static_cast<double>(e[static_cast<std::size_t>(c)] / total);
  }
  return out;
}

inline double sigmoid(double z) {
  const long double zl = z;
  return static_cast<double>(1.0L / (1.0L + std::exp(-zl)));
}

inline double squared_frobenius(const Mat& a) {
  long double acc = 0.0L;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) acc += static_cast<long double>(a(i, j)) * a(i, j);
  return static_cast<double>(acc);
}

/// ½‖SK − V‖² in long double.
inline long double half_recon(const Mat& s, const Mat& k, const Mat& v) {
  const Mat sk = matmul(s, k);
  long double acc = 0.0L;
  for (Eigen::Index i = 0; i < sk.rows(); ++i)
    for (Eigen::Index j = 0; j < sk.cols(); ++j) {
      const long double d = static_cast<long double>(sk(i, j)) - v(i, j);
      acc += d * d;
    }
  return acc / 2.0L;
}

/// Central differences of ½‖SK − V‖².
inline Mat fd_grad(const Mat& s, const Mat& k, const Mat& v, double step) {
  Mat g(s.rows(), s.cols());
  Mat probe = s;
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      probe(i, j) = s(i, j) + step;
      const long double up = half_recon(probe, k, v);
      probe(i, j) = s(i, j) - step;
      const long double down = half_recon(probe, k, v);
      probe(i, j) = s(i, j);
      g(i, j) = static_cast<double>((up - down) / (2.0L * step));
    }
  return g;
}

struct NearestHit {
  std::size_t index;
  double distance;
};

inline NearestHit brute_nearest(const std::vector<Eigen::Vector3d>& cloud, const Eigen::Vector3d& q) {
  NearestHit best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double d = (cloud[i] - q).norm();
    if (d < best.distance) best = {i, d};
  }
  return best;
}

inline double brute_mean_nearest(const std::vector<Eigen::Vector3d>& from, const std::vector<Eigen::Vector3d>& to) {
  long double acc = 0.0L;
  for (const auto& p : from) acc += brute_nearest(to, p).distance;
  return static_cast<double>(acc / static_cast<long double>(from.size()));
}

}  // namespace ttt::oracle

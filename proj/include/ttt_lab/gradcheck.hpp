// Copyright 2026 The ttt_lab Authors
// SPDX-License-Identifier: Apache-2.0

// Finite-difference check of recon_loss_grad against recon_loss / 2.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

#include "ttt_lab/rng.hpp"
#include "ttt_lab/state_rules.hpp"

namespace ttt {

struct GradcheckInstance {
  FastWeightMatrix s;
  Matrix keys;    // c_k x m
  Matrix values;  // c_v x m
};

struct GradcheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_trial = 0;
  GradcheckInstance worst;
  Matrix analytic;
  Matrix numeric;
  std::size_t trials = 0;
};

/// Relative errors use max(|a|, |b|, kGradcheckFloor) as the denominator so
/// that entries that vanish analytically are judged on an absolute scale.
inline constexpr double kGradcheckFloor = 1e-3;

/// Dimensions c_v, c_k, m are drawn uniformly from [1, max_dim]; entries are
/// standard normal.
inline GradcheckInstance random_gradcheck_instance(std::uint64_t seed, Index max_dim = 8) {
  Rng rng(seed);
  auto dim = [&] { return static_cast<Index>(1 + rng.below(static_cast<std::uint64_t>(max_dim))); };
  const Index cv = dim();
  const Index ck = dim();
  const Index m = dim();
  auto fill = [&](Index r, Index c) {
    Matrix out(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) out(i, j) = rng.normal();
    return out;
  };
  GradcheckInstance inst;
  inst.s.s = fill(cv, ck);
  inst.keys = fill(ck, m);
  inst.values = fill(cv, m);
  return inst;
}

/// Central differences of recon_loss / 2 with respect to every entry of S.
inline Matrix finite_difference_grad(const GradcheckInstance& inst, double step) {
  Matrix g(inst.s.s.rows(), inst.s.s.cols());
  FastWeightMatrix probe = inst.s;
  for (Index i = 0; i < g.rows(); ++i) {
    for (Index j = 0; j < g.cols(); ++j) {
      const double orig = probe.s(i, j);
      probe.s(i, j) = orig + step;
      const double up = recon_loss(probe, inst.keys, inst.values);
      probe.s(i, j) = orig - step;
      const double down = recon_loss(probe, inst.keys, inst.values);
      probe.s(i, j) = orig;
      g(i, j) = (up - down) / (4.0 * step);
    }
  }
  return g;
}

inline double max_relative_error(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      const double denom = std::max({std::abs(a(i, j)), std::abs(b(i, j)), kGradcheckFloor});
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / denom);
    }
  }
  return worst;
}

/// Trial i uses seed derive_seed(seed, "gradcheck:<i>").
inline GradcheckReport run_gradcheck(std::size_t trials, std::uint64_t seed, double step = 1e-5) {
  if (trials < 1) throw InvalidArgument("gradcheck needs at least one trial");
  if (!(step > 0.0)) throw InvalidArgument("finite-difference step must be > 0");
  GradcheckReport report;
  report.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    GradcheckInstance inst = random_gradcheck_instance(derive_seed(seed, "gradcheck:" + std::to_string(t)));
    Matrix analytic = recon_loss_grad(inst.s, inst.keys, inst.values);
    Matrix numeric = finite_difference_grad(inst, step);
    const double err = max_relative_error(analytic, numeric);
    if (t == 0 || err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_trial = t;
      report.worst = std::move(inst);
      report.analytic = std::move(analytic);
      report.numeric = std::move(numeric);
    }
  }
  return report;
}

}  // namespace ttt

// Copyright 2026 The ttt_lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ttt_lab/errors.hpp"
#include "ttt_lab/geometry.hpp"

namespace ttt {

enum class DepthMode { PerSequenceScale, Metric };

struct DepthResult {
  double abs_rel = 0.0;
  double delta_125 = 0.0;  // fraction in [0, 1]
  std::size_t valid_pixels = 0;
};

inline bool valid_depth_pair(float pred, float gt) {
  return std::isfinite(gt) && gt > 0.0f && std::isfinite(pred) && pred > 0.0f;
}

namespace detail {

inline void require_same_dims(const DepthMap& pred, const DepthMap& gt) {
  validate(pred);
  validate(gt);
  if (pred.width != gt.width || pred.height != gt.height)
    throw DimensionError("prediction and ground-truth depth maps differ in size");
}

inline double median_of(std::vector<double> values) {
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace detail

/// One scale for a whole sequence: median(gt) / median(pred) over the valid
/// pixels of every frame.
inline double sequence_depth_scale(std::span<const DepthMap> preds, std::span<const DepthMap> gts) {
  if (preds.size() != gts.size()) throw DimensionError("sequence frame counts differ");
  std::vector<double> pred_vals;
  std::vector<double> gt_vals;
  for (std::size_t f = 0; f < preds.size(); ++f) {
    detail::require_same_dims(preds[f], gts[f]);
    for (std::size_t i = 0; i < gts[f].depth.size(); ++i) {
      if (!valid_depth_pair(preds[f].depth[i], gts[f].depth[i])) continue;
      pred_vals.push_back(preds[f].depth[i]);
      gt_vals.push_back(gts[f].depth[i]);
    }
  }
  if (gt_vals.empty()) throw InvalidArgument("no valid depth pixels in sequence");
  return detail::median_of(std::move(gt_vals)) / detail::median_of(std::move(pred_vals));
}

/// Abs Rel = mean |p - g| / g and delta<1.25 = fraction with
/// max(p/g, g/p) < 1.25 over valid pixels. In PerSequenceScale mode the
/// prediction is multiplied by `scale` (by default the single-frame
/// sequence scale); Metric mode ignores `scale`.
inline DepthResult depth_metrics(const DepthMap& pred, const DepthMap& gt, DepthMode mode,
                                 std::optional<double> scale = std::nullopt) {
  detail::require_same_dims(pred, gt);
  double factor = 1.0;
  if (mode == DepthMode::PerSequenceScale) {
    factor = scale ? *scale : sequence_depth_scale(std::span(&pred, 1), std::span(&gt, 1));
    if (!(factor > 0.0) || !std::isfinite(factor)) throw InvalidArgument("depth scale must be finite and > 0");
  }
  DepthResult out;
  long double rel_sum = 0.0L;
  std::size_t within = 0;
  for (std::size_t i = 0; i < gt.depth.size(); ++i) {
    if (!valid_depth_pair(pred.depth[i], gt.depth[i])) continue;
    const double p = factor * static_cast<double>(pred.depth[i]);
    const double g = gt.depth[i];
    rel_sum += std::abs(p - g) / g;
    if (std::max(p / g, g / p) < 1.25) ++within;
    ++out.valid_pixels;
  }
  if (out.valid_pixels == 0) throw InvalidArgument("no valid depth pixels");
  out.abs_rel = static_cast<double>(rel_sum / static_cast<long double>(out.valid_pixels));
  out.delta_125 = static_cast<double>(within) / static_cast<double>(out.valid_pixels);
  return out;
}

}  // namespace ttt

// Copyright 2026 The ttt_lab Authors
// SPDX-License-Identifier: Apache-2.0

// TUM trajectory text: `timestamp tx ty tz qx qy qz qw` per line.

#pragma once

#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ttt_lab/errors.hpp"
#include "ttt_lab/geometry.hpp"
#include "ttt_lab/io/csv.hpp"

namespace ttt::io {

struct TumRecord {
  double timestamp = 0.0;
  double tx = 0.0, ty = 0.0, tz = 0.0;
  double qx = 0.0, qy = 0.0, qz = 0.0, qw = 1.0;
};

namespace detail {

inline bool parse_double(const std::string& token, double& out) {
  std::size_t used = 0;
  try {
    out = std::stod(token, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == token.size() && std::isfinite(out);
}

inline bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace detail

/// Quaternions are renormalised; a norm off by more than 1e-3 is rejected.
inline Trajectory parse_tum(std::istream& in) {
  Trajectory traj;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line)) continue;
    const auto first = line.find_first_not_of(" \t");
    if (line[first] == '#') continue;

    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(tok);
    if (tokens.size() != 8)
      throw ParseError("expected 8 fields (timestamp tx ty tz qx qy qz qw), got " + std::to_string(tokens.size()),
                       line_no);
    double v[8];
    for (int i = 0; i < 8; ++i) {
      if (!detail::parse_double(tokens[static_cast<std::size_t>(i)], v[i]))
        throw ParseError("malformed number '" + tokens[static_cast<std::size_t>(i)] + "'", line_no);
    }
    Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    const double norm = q.norm();
    if (std::abs(norm - 1.0) > 1e-3)
      throw ParseError("quaternion norm " + format_shortest(norm) + " is not close to 1", line_no);
    Pose pose;
    pose.timestamp = v[0];
    pose.translation = Eigen::Vector3d(v[1], v[2], v[3]);
    pose.rotation = q.normalized();
    if (!traj.poses.empty() && !(pose.timestamp > traj.poses.back().timestamp))
      throw ParseError("timestamps must be strictly increasing", line_no);
    traj.poses.push_back(pose);
  }
  if (traj.empty()) throw ParseError("empty trajectory");
  return traj;
}

inline Trajectory parse_tum(const std::string& text) {
  std::istringstream in(text);
  return parse_tum(in);
}

/// Header line plus one 17-significant-digit line per pose.
inline void write_tum(std::ostream& out, const Trajectory& traj) {
  out << "# ttt_lab trajectory: timestamp tx ty tz qx qy qz qw\n";
  for (const auto& p : traj.poses) {
    const auto& q = p.rotation;
    out << format_real(p.timestamp) << ' ' << format_real(p.translation.x()) << ' '
        << format_real(p.translation.y()) << ' ' << format_real(p.translation.z()) << ' ' << format_real(q.x())
        << ' ' << format_real(q.y()) << ' ' << format_real(q.z()) << ' ' << format_real(q.w()) << '\n';
  }
}

inline std::string write_tum(const Trajectory& traj) {
  std::ostringstream out;
  write_tum(out, traj);
  return out.str();
}

}  // namespace ttt::io

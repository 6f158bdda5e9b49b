// Copyright 2026 The ttt_lab Authors
// SPDX-License-Identifier: Apache-2.0

// ASCII PLY point clouds (x, y, z and optional nx, ny, nz on the vertex
// element). Binary encodings are rejected.

#pragma once

#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ttt_lab/errors.hpp"
#include "ttt_lab/geometry.hpp"
#include "ttt_lab/io/csv.hpp"
#include "ttt_lab/io/tum.hpp"

namespace ttt::io {

/// `warnings`, when given, receives one message per skipped property.
inline PointCloud parse_ply_ascii(std::istream& in, std::vector<std::string>* warnings = nullptr) {
  struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<std::string> properties;
  };
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line() || line != "ply") throw ParseError("missing 'ply' magic", line_no == 0 ? 1 : line_no);
  std::vector<Element> elements;
  bool saw_format = false;
  for (;;) {
    if (!next_line()) throw ParseError("header ended before end_header", line_no);
    std::istringstream words(line);
    std::string key;
    words >> key;
    if (key == "end_header") break;
    if (key == "comment" || key == "obj_info" || key.empty()) continue;
    if (key == "format") {
      std::string fmt;
      words >> fmt;
      if (fmt != "ascii") throw UnsupportedError("line " + std::to_string(line_no) + ": unsupported PLY format '" + fmt + "' (ASCII only)");
      saw_format = true;
    } else if (key == "element") {
      Element e;
      long long count = -1;
      if (!(words >> e.name >> count) || count < 0) throw ParseError("malformed element line", line_no);
      e.count = static_cast<std::size_t>(count);
      elements.push_back(std::move(e));
    } else if (key == "property") {
      if (elements.empty()) throw ParseError("property before any element", line_no);
      std::string type, name;
      words >> type;
      if (type == "list") {
        std::string count_type, item_type;
        words >> count_type >> item_type;
      }
      if (!(words >> name)) throw ParseError("malformed property line", line_no);
      elements.back().properties.push_back(type == "list" ? "list:" + name : name);
    } else {
      throw ParseError("unknown header keyword '" + key + "'", line_no);
    }
  }
  if (!saw_format) throw ParseError("missing format line", line_no);

  const Element* vertex = nullptr;
  for (const auto& e : elements)
    if (e.name == "vertex") vertex = &e;
  if (vertex == nullptr) throw ParseError("missing vertex element", line_no);

  int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1;
  for (std::size_t i = 0; i < vertex->properties.size(); ++i) {
    const auto& name = vertex->properties[i];
    const int idx = static_cast<int>(i);
    if (name == "x") ix = idx;
    else if (name == "y") iy = idx;
    else if (name == "z") iz = idx;
    else if (name == "nx") inx = idx;
    else if (name == "ny") iny = idx;
    else if (name == "nz") inz = idx;
    else if (warnings) warnings->push_back("skipping vertex property '" + name + "'");
  }
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError("vertex element lacks x, y, z properties", line_no);
  const bool with_normals = inx >= 0 && iny >= 0 && inz >= 0;
  if (!with_normals && (inx >= 0 || iny >= 0 || inz >= 0) && warnings)
    warnings->push_back("incomplete normal properties ignored");

  PointCloud cloud;
  if (with_normals) cloud.normals.emplace();
  for (const auto& e : elements) {
    for (std::size_t item = 0; item < e.count; ++item) {
      if (!next_line()) throw ParseError("truncated data section in element '" + e.name + "'", line_no + 1);
      if (&e != vertex) continue;
      std::istringstream words(line);
      std::vector<double> vals;
      for (std::string tok; words >> tok;) {
        double v = 0.0;
        if (!detail::parse_double(tok, v)) throw ParseError("malformed vertex value '" + tok + "'", line_no);
        vals.push_back(v);
      }
      if (vals.size() != vertex->properties.size())
        throw ParseError("vertex line has " + std::to_string(vals.size()) + " values, expected " +
                             std::to_string(vertex->properties.size()),
                         line_no);
      const auto at = [&](int i) { return vals[static_cast<std::size_t>(i)]; };
      cloud.points.emplace_back(at(ix), at(iy), at(iz));
      if (with_normals) {
        Eigen::Vector3d n(at(inx), at(iny), at(inz));
        const double norm = n.norm();
        if (std::abs(norm - 1.0) > 1e-3) throw ParseError("normal is not unit length", line_no);
        cloud.normals->push_back(n / norm);
      }
    }
  }
  if (cloud.empty()) throw ParseError("point cloud is empty");
  return cloud;
}

inline PointCloud parse_ply_ascii(const std::string& text, std::vector<std::string>* warnings = nullptr) {
  std::istringstream in(text);
  return parse_ply_ascii(in, warnings);
}

inline void write_ply_ascii(std::ostream& out, const PointCloud& cloud) {
  out << "ply\nformat ascii 1.0\ncomment ttt_lab\n";
  out << "element vertex " << cloud.size() << '\n';
  out << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
  out << "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    out << format_real(p.x()) << ' ' << format_real(p.y()) << ' ' << format_real(p.z());
    if (cloud.normals) {
      const auto& n = (*cloud.normals)[i];
      out << ' ' << format_real(n.x()) << ' ' << format_real(n.y()) << ' ' << format_real(n.z());
    }
    out << '\n';
  }
}

inline std::string write_ply_ascii(const PointCloud& cloud) {
  std::ostringstream out;
  write_ply_ascii(out, cloud);
  return out.str();
}

}  // namespace ttt::io

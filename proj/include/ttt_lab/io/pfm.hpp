// Copyright 2026 The ttt_lab Authors
// SPDX-License-Identifier: Apache-2.0

// Grayscale PFM: "Pf\n<width> <height>\n<scale>\n" followed by float32 rows
// stored bottom-to-top. A negative scale marks little-endian payloads.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "ttt_lab/errors.hpp"
#include "ttt_lab/geometry.hpp"

namespace ttt::io {

namespace detail {

inline std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

// Reads one whitespace-delimited header token starting at `pos`.
inline std::string header_token(std::string_view data, std::size_t& pos) {
  while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
  const std::size_t begin = pos;
  while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
  return std::string(data.substr(begin, pos - begin));
}

}  // namespace detail

/// Parses a complete PFM byte buffer. Values are kept verbatim, including
/// non-finite or non-positive depths.
inline DepthMap parse_pfm(std::string_view data) {
  std::size_t pos = 0;
  const std::string magic = detail::header_token(data, pos);
  if (magic == "PF") throw UnsupportedError("color PFM ('PF') is not supported; expected grayscale 'Pf'");
  if (magic != "Pf") throw ParseError("bad PFM magic '" + magic + "'");
  const std::string w_tok = detail::header_token(data, pos);
  const std::string h_tok = detail::header_token(data, pos);
  const std::string s_tok = detail::header_token(data, pos);
  long long w = 0, h = 0;
  double scale = 0.0;
  try {
    std::size_t used = 0;
    w = std::stoll(w_tok, &used);
    if (used != w_tok.size()) throw ParseError("bad PFM width");
    h = std::stoll(h_tok, &used);
    if (used != h_tok.size()) throw ParseError("bad PFM height");
    scale = std::stod(s_tok, &used);
    if (used != s_tok.size()) throw ParseError("bad PFM scale");
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    throw ParseError("malformed PFM header");
  }
  if (w <= 0 || h <= 0) throw ParseError("PFM dimensions must be positive");
  if (scale == 0.0) throw ParseError("PFM scale must be nonzero");
  // Exactly one whitespace byte separates the scale from the payload.
  if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos])))
    throw ParseError("PFM header is not terminated");
  ++pos;

  DepthMap map;
  map.width = static_cast<std::size_t>(w);
  map.height = static_cast<std::size_t>(h);
  const std::size_t count = map.width * map.height;
  if (data.size() - pos != count * 4) {
    throw ParseError("PFM payload is " + std::to_string(data.size() - pos) + " bytes, header implies " +
                     std::to_string(count * 4));
  }
  const bool file_little = scale < 0.0;
  const bool host_little = std::endian::native == std::endian::little;
  map.depth.resize(count);
  for (std::size_t row = 0; row < map.height; ++row) {
    const std::size_t file_row = map.height - 1 - row;  // bottom-up storage
    for (std::size_t col = 0; col < map.width; ++col) {
      std::uint32_t bits = 0;
      std::memcpy(&bits, data.data() + pos + (file_row * map.width + col) * 4, 4);
      if (file_little != host_little) bits = detail::byteswap32(bits);
      map.depth[row * map.width + col] = std::bit_cast<float>(bits);
    }
  }
  return map;
}

/// Little-endian payload (scale -1), rows bottom-up.
inline std::string write_pfm(const DepthMap& map) {
  validate(map);
  std::string out = "Pf\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n-1\n";
  const std::size_t header = out.size();
  out.resize(header + map.depth.size() * 4);
  const bool host_little = std::endian::native == std::endian::little;
  for (std::size_t row = 0; row < map.height; ++row) {
    const std::size_t file_row = map.height - 1 - row;
    for (std::size_t col = 0; col < map.width; ++col) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(map.depth[row * map.width + col]);
      if (!host_little) bits = detail::byteswap32(bits);
      std::memcpy(out.data() + header + (file_row * map.width + col) * 4, &bits, 4);
    }
  }
  return out;
}

}  // namespace ttt::io

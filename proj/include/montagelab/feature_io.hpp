#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "montagelab/error.hpp"
#include "montagelab/features.hpp"

namespace mlab {

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_double(std::string_view s, std::string_view context) {
  double v = 0.0;
  if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::ParseError, std::string(context) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void put_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32le(std::string_view in, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[off + i])) << (8 * i);
  return v;
}

}  // namespace detail

/// Number of cepstra implied by a vector dimension (dims = 3K + 5).
inline std::size_t cepstra_for_dims(std::size_t dims) {
  if (dims < 8 || (dims - 5) % 3 != 0) {
    throw Error(ErrorCode::DimensionMismatch, "feature dimension " + std::to_string(dims) + " has no layout");
  }
  return (dims - 5) / 3;
}

/// CSV with header "t,Ef,c1,...,ddc7"; t is the frame start time in seconds.
inline std::string features_to_csv(const FeatureSequence& seq) {
  const FeatureLayout layout{cepstra_for_dims(seq.dims)};
  std::string out = "t";
  for (const auto& n : layout.names()) out += "," + n;
  out += "\n";
  for (std::size_t t = 0; t < seq.num_frames(); ++t) {
    out += detail::format_double(static_cast<double>(t) * seq.frame_s);
    for (double v : seq.row(t)) {
      out += ",";
      out += detail::format_double(v);
    }
    out += "\n";
  }
  return out;
}

inline FeatureSequence features_from_csv(std::string_view text, std::string label = {}) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "feature CSV is empty");
  const auto header = detail::split_csv(line);
  if (header.size() < 2 || header[0] != "t") throw Error(ErrorCode::ParseError, "feature CSV header must start with 't'");
  FeatureSequence seq;
  seq.channel_label = std::move(label);
  seq.dims = header.size() - 1;
  const FeatureLayout layout{cepstra_for_dims(seq.dims)};
  const auto names = layout.names();
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (header[j + 1] != names[j]) {
      throw Error(ErrorCode::ParseError, "feature CSV column " + std::to_string(j + 2) + " should be '" + names[j] + "'");
    }
  }
  std::vector<double> times;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = detail::split_csv(line);
    const std::string ctx = "feature CSV line " + std::to_string(line_no);
    if (cells.size() != header.size()) throw Error(ErrorCode::ParseError, ctx + ": wrong column count");
    times.push_back(detail::parse_double(cells[0], ctx));
    for (std::size_t j = 1; j < cells.size(); ++j) seq.values.push_back(detail::parse_double(cells[j], ctx));
  }
  if (times.size() >= 2) seq.frame_s = times[1] - times[0];
  return seq;
}

inline constexpr std::uint32_t kFeatureBinaryVersion = 1;

/// "FEAT" magic, u32 version, u32 frames, u32 dims, then little-endian f32
/// values row by row.
inline std::string features_to_binary(const FeatureSequence& seq) {
  std::string out = "FEAT";
  detail::put_u32le(out, kFeatureBinaryVersion);
  detail::put_u32le(out, static_cast<std::uint32_t>(seq.num_frames()));
  detail::put_u32le(out, static_cast<std::uint32_t>(seq.dims));
  for (double v : seq.values) detail::put_u32le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

inline FeatureSequence features_from_binary(std::string_view bytes, std::string label = {}, double frame_s = 0.1) {
  if (bytes.size() < 16 || bytes.substr(0, 4) != "FEAT") throw Error(ErrorCode::ParseError, "missing FEAT magic");
  const auto version = detail::get_u32le(bytes, 4);
  if (version != kFeatureBinaryVersion) {
    throw Error(ErrorCode::ParseError, "unsupported feature file version " + std::to_string(version));
  }
  const std::size_t frames = detail::get_u32le(bytes, 8);
  const std::size_t dims = detail::get_u32le(bytes, 12);
  if (bytes.size() != 16 + 4 * frames * dims) throw Error(ErrorCode::ParseError, "feature file size disagrees with header");
  FeatureSequence seq;
  seq.channel_label = std::move(label);
  seq.frame_s = frame_s;
  seq.dims = dims;
  seq.values.resize(frames * dims);
  for (std::size_t i = 0; i < seq.values.size(); ++i) {
    seq.values[i] = std::bit_cast<float>(detail::get_u32le(bytes, 16 + 4 * i));
  }
  return seq;
}

}  // namespace mlab

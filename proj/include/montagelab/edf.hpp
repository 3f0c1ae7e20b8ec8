#pragma once

// Classic EDF reader/writer. EDF+ annotation signals are skipped; EDF+
// discontinuous records are not supported.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "montagelab/electrodes.hpp"
#include "montagelab/error.hpp"
#include "montagelab/recording.hpp"

namespace mlab {

namespace edf {

inline constexpr std::size_t kFixedHeaderBytes = 256;
inline constexpr std::size_t kSignalHeaderBytes = 256;
inline constexpr std::string_view kAnnotationLabel = "EDF Annotations";

namespace detail {

inline double parse_number(std::string_view field, std::string_view what) {
  const std::string_view s = trim(field);
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (s.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw Error(ErrorCode::MalformedHeader, "bad numeric field '" + std::string(what) + "': '" + std::string(s) + "'");
  }
  return value;
}

inline long long parse_integer(std::string_view field, std::string_view what) {
  const double v = parse_number(field, what);
  if (v != std::floor(v)) {
    throw Error(ErrorCode::MalformedHeader, "non-integer field '" + std::string(what) + "'");
  }
  return static_cast<long long>(v);
}

/// Shortest decimal text of at most `width` characters that parses back to
/// `value`; falls back to the closest representation that fits.
inline std::string format_number(double value, std::size_t width = 8) {
  if (value == std::floor(value) && std::fabs(value) < 1e7) {
    std::string s = std::to_string(static_cast<long long>(value));
    if (s.size() <= width) return s;
  }
  std::string best;
  for (int precision = static_cast<int>(width); precision >= 1; --precision) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    std::string s(buf);
    if (s.size() <= width) {
      best = s;
      break;
    }
  }
  if (best.empty()) {
    throw Error(ErrorCode::InvalidConfig, "value does not fit an EDF header field");
  }
  return best;
}

inline void put_field(std::string& out, std::string_view text, std::size_t width) {
  std::string field(text.substr(0, width));
  field.resize(width, ' ');
  out += field;
}

inline std::int16_t read_i16le(const char* p) {
  const auto lo = static_cast<std::uint16_t>(static_cast<unsigned char>(p[0]));
  const auto hi = static_cast<std::uint16_t>(static_cast<unsigned char>(p[1]));
  return static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
}

inline void write_i16le(std::string& out, std::int16_t v) {
  const auto u = static_cast<std::uint16_t>(v);
  out.push_back(static_cast<char>(u & 0xFF));
  out.push_back(static_cast<char>((u >> 8) & 0xFF));
}

}  // namespace detail

/// Physical value of a stored digital sample. The endpoints of the digital
/// range map exactly onto the endpoints of the physical range.
inline double digital_to_physical(int digital, Range phys, DigitalRange dig) {
  if (dig.min == dig.max) {
    throw Error(ErrorCode::DegenerateScaling, "digital minimum equals digital maximum");
  }
  if (digital == dig.min) return phys.min;
  if (digital == dig.max) return phys.max;
  const double span = static_cast<double>(dig.max) - static_cast<double>(dig.min);
  return phys.min + (static_cast<double>(digital) - dig.min) * (phys.max - phys.min) / span;
}

inline int physical_to_digital(double value, Range phys, DigitalRange dig) {
  if (dig.min >= dig.max) {
    throw Error(ErrorCode::DegenerateScaling, "digital range is empty");
  }
  if (phys.max == phys.min) return dig.min;
  const double span = static_cast<double>(dig.max) - static_cast<double>(dig.min);
  const double d = std::round(dig.min + (value - phys.min) * span / (phys.max - phys.min));
  if (!(d >= dig.min)) return dig.min;
  if (d > dig.max) return dig.max;
  return static_cast<int>(d);
}

struct SignalHeader {
  std::string label;
  std::string transducer;
  std::string physical_dimension;
  Range physical;
  DigitalRange digital;
  std::string prefiltering;
  long long samples_per_record = 0;
};

struct Header {
  std::string patient;
  std::string recording;
  std::string start_date;
  std::string start_time;
  long long header_bytes = 0;
  long long num_records = 0;
  double record_duration_s = 0.0;
  std::vector<SignalHeader> signals;
};

/// Parses the fixed and per-signal header blocks. Does not look at samples.
inline Header parse_header(std::string_view bytes) {
  using detail::parse_integer;
  using detail::parse_number;
  if (bytes.size() < kFixedHeaderBytes) {
    throw Error(ErrorCode::MalformedHeader, "file shorter than the 256-byte fixed header");
  }
  if (bytes.substr(0, 8) != std::string_view("0       ", 8)) {
    throw Error(ErrorCode::MalformedHeader, "version field is not \"0\"");
  }
  Header h;
  h.patient = std::string(trim(bytes.substr(8, 80)));
  h.recording = std::string(trim(bytes.substr(88, 80)));
  h.start_date = std::string(trim(bytes.substr(168, 8)));
  h.start_time = std::string(trim(bytes.substr(176, 8)));
  h.header_bytes = parse_integer(bytes.substr(184, 8), "header bytes");
  h.num_records = parse_integer(bytes.substr(236, 8), "number of data records");
  h.record_duration_s = parse_number(bytes.substr(244, 8), "data record duration");
  const long long ns = parse_integer(bytes.substr(252, 4), "number of signals");
  if (ns < 0) throw Error(ErrorCode::MalformedHeader, "negative signal count");
  const auto expected_header = static_cast<long long>(kFixedHeaderBytes + kSignalHeaderBytes * ns);
  if (h.header_bytes != expected_header) {
    throw Error(ErrorCode::MalformedHeader, "header byte count disagrees with signal count");
  }
  if (bytes.size() < static_cast<std::size_t>(expected_header)) {
    throw Error(ErrorCode::MalformedHeader, "file ends inside the signal header");
  }
  const auto n = static_cast<std::size_t>(ns);
  h.signals.resize(n);
  std::size_t off = kFixedHeaderBytes;
  auto field = [&](std::size_t i, std::size_t width) {
    return bytes.substr(off + i * width, width);
  };
  for (std::size_t i = 0; i < n; ++i) h.signals[i].label = std::string(trim(field(i, 16)));
  off += 16 * n;
  for (std::size_t i = 0; i < n; ++i) h.signals[i].transducer = std::string(trim(field(i, 80)));
  off += 80 * n;
  for (std::size_t i = 0; i < n; ++i) h.signals[i].physical_dimension = std::string(trim(field(i, 8)));
  off += 8 * n;
  for (std::size_t i = 0; i < n; ++i) h.signals[i].physical.min = parse_number(field(i, 8), "physical minimum");
  off += 8 * n;
  for (std::size_t i = 0; i < n; ++i) h.signals[i].physical.max = parse_number(field(i, 8), "physical maximum");
  off += 8 * n;
  for (std::size_t i = 0; i < n; ++i) {
    h.signals[i].digital.min = static_cast<int>(parse_integer(field(i, 8), "digital minimum"));
  }
  off += 8 * n;
  for (std::size_t i = 0; i < n; ++i) {
    h.signals[i].digital.max = static_cast<int>(parse_integer(field(i, 8), "digital maximum"));
  }
  off += 8 * n;
  for (std::size_t i = 0; i < n; ++i) h.signals[i].prefiltering = std::string(trim(field(i, 80)));
  off += 80 * n;
  for (std::size_t i = 0; i < n; ++i) {
    h.signals[i].samples_per_record = parse_integer(field(i, 8), "samples per record");
    if (h.signals[i].samples_per_record < 0) {
      throw Error(ErrorCode::MalformedHeader, "negative samples per record");
    }
  }
  return h;
}

/// Decodes a classic EDF byte image. Annotation signals are dropped and the
/// reference scheme is inferred from label suffixes.
inline Recording parse_edf(std::string_view bytes, std::string id = {}) {
  Header h = parse_header(bytes);

  long long record_samples = 0;
  for (const auto& s : h.signals) record_samples += s.samples_per_record;
  const long long record_bytes = 2 * record_samples;
  const auto payload = static_cast<long long>(bytes.size()) - h.header_bytes;
  if (h.num_records == -1 && record_bytes > 0 && payload % record_bytes == 0) {
    h.num_records = payload / record_bytes;
  }
  if (h.num_records < 0 || h.num_records * record_bytes != payload) {
    throw Error(ErrorCode::InconsistentRecordCount,
                "header declares " + std::to_string(h.num_records) + " records of " +
                    std::to_string(record_bytes) + " bytes but payload is " + std::to_string(payload) + " bytes");
  }

  std::vector<std::size_t> keep;
  double rate = 0.0;
  for (std::size_t i = 0; i < h.signals.size(); ++i) {
    const auto& s = h.signals[i];
    if (s.label == kAnnotationLabel) continue;
    if (s.digital.min >= s.digital.max) {
      throw Error(ErrorCode::DegenerateScaling, "signal '" + s.label + "' has digital min >= digital max");
    }
    if (!(h.record_duration_s > 0.0)) {
      throw Error(ErrorCode::MalformedHeader, "data record duration must be positive");
    }
    const double fs = static_cast<double>(s.samples_per_record) / h.record_duration_s;
    if (keep.empty()) {
      rate = fs;
    } else if (fs != rate) {
      throw Error(ErrorCode::RateMismatch, "signal '" + s.label + "' is sampled at " + std::to_string(fs) +
                                               " Hz, expected " + std::to_string(rate) + " Hz");
    }
    keep.push_back(i);
  }

  std::vector<std::size_t> offsets(h.signals.size(), 0);
  for (std::size_t i = 1; i < h.signals.size(); ++i) {
    offsets[i] = offsets[i - 1] + static_cast<std::size_t>(h.signals[i - 1].samples_per_record);
  }

  std::vector<ChannelSignal> channels;
  channels.reserve(keep.size());
  for (std::size_t i : keep) {
    const auto& s = h.signals[i];
    ChannelSignal ch;
    ch.label = s.label;
    ch.unit = s.physical_dimension;
    ch.physical_range = s.physical;
    ch.digital_range = s.digital;
    const auto spr = static_cast<std::size_t>(s.samples_per_record);
    ch.samples.resize(spr * static_cast<std::size_t>(h.num_records));
    for (long long r = 0; r < h.num_records; ++r) {
      const char* base = bytes.data() + h.header_bytes + r * record_bytes + 2 * offsets[i];
      for (std::size_t k = 0; k < spr; ++k) {
        const int d = detail::read_i16le(base + 2 * k);
        ch.samples[static_cast<std::size_t>(r) * spr + k] = digital_to_physical(d, s.physical, s.digital);
      }
    }
    for (const auto& other : channels) {
      if (other.label == ch.label) {
        throw Error(ErrorCode::MalformedHeader, "duplicate signal label '" + ch.label + "'");
      }
    }
    channels.push_back(std::move(ch));
  }

  std::vector<std::string> labels;
  for (const auto& c : channels) labels.push_back(c.label);
  const ReferenceScheme scheme = infer_reference_scheme(labels);

  if (id.empty()) id = h.recording.empty() ? h.patient : h.recording;
  Recording rec(std::move(id), keep.empty() ? 1.0 : rate, std::move(channels), scheme);
  rec.patient_id = h.patient;
  rec.start_date = h.start_date;
  rec.start_time = h.start_time;
  if (h.record_duration_s > 0.0) rec.set_record_duration_s(h.record_duration_s);
  return rec;
}

/// Encodes a recording as classic EDF using each channel's physical and
/// digital ranges. Samples outside the physical range are clipped.
inline std::string write_edf(const Recording& rec) {
  using detail::format_number;
  using detail::put_field;
  const double dur = rec.record_duration_s();
  const double spr_real = rec.sample_rate_hz() * dur;
  const auto spr = static_cast<std::size_t>(std::llround(spr_real));
  if (spr == 0 || std::fabs(spr_real - static_cast<double>(spr)) > 1e-9) {
    throw Error(ErrorCode::InvalidConfig, "record duration does not hold a whole number of samples");
  }
  if (rec.num_samples() % spr != 0) {
    throw Error(ErrorCode::InvalidConfig, "recording length is not a whole number of data records");
  }
  const std::size_t num_records = rec.num_samples() / spr;
  const std::size_t ns = rec.num_channels();

  std::string out;
  out.reserve(kFixedHeaderBytes * (ns + 1) + 2 * rec.num_samples() * ns);
  put_field(out, "0", 8);
  put_field(out, rec.patient_id, 80);
  put_field(out, rec.id(), 80);
  put_field(out, rec.start_date, 8);
  put_field(out, rec.start_time, 8);
  put_field(out, std::to_string(kFixedHeaderBytes * (ns + 1)), 8);
  put_field(out, "", 44);
  put_field(out, std::to_string(num_records), 8);
  put_field(out, format_number(dur), 8);
  put_field(out, std::to_string(ns), 4);

  const auto& chans = rec.channels();
  for (const auto& c : chans) put_field(out, c.label, 16);
  for (std::size_t i = 0; i < ns; ++i) put_field(out, "", 80);
  for (const auto& c : chans) put_field(out, c.unit, 8);
  for (const auto& c : chans) put_field(out, format_number(c.physical_range.min), 8);
  for (const auto& c : chans) put_field(out, format_number(c.physical_range.max), 8);
  for (const auto& c : chans) put_field(out, std::to_string(c.digital_range.min), 8);
  for (const auto& c : chans) put_field(out, std::to_string(c.digital_range.max), 8);
  for (std::size_t i = 0; i < ns; ++i) put_field(out, "", 80);
  for (std::size_t i = 0; i < ns; ++i) put_field(out, std::to_string(spr), 8);
  for (std::size_t i = 0; i < ns; ++i) put_field(out, "", 32);

  for (const auto& c : chans) {
    if (c.digital_range.min >= c.digital_range.max) {
      throw Error(ErrorCode::DegenerateScaling, "channel '" + c.label + "' has an empty digital range");
    }
    if (c.digital_range.min < std::numeric_limits<std::int16_t>::min() ||
        c.digital_range.max > std::numeric_limits<std::int16_t>::max()) {
      throw Error(ErrorCode::InvalidConfig, "channel '" + c.label + "' digital range exceeds 16 bits");
    }
  }
  // Physical ranges as they will read back from the 8-character fields.
  std::vector<Range> stored;
  for (const auto& c : chans) {
    stored.push_back({std::stod(format_number(c.physical_range.min)), std::stod(format_number(c.physical_range.max))});
  }
  for (std::size_t r = 0; r < num_records; ++r) {
    for (std::size_t i = 0; i < ns; ++i) {
      const auto& c = chans[i];
      for (std::size_t k = 0; k < spr; ++k) {
        const int d = physical_to_digital(c.samples[r * spr + k], stored[i], c.digital_range);
        detail::write_i16le(out, static_cast<std::int16_t>(d));
      }
    }
  }
  return out;
}

}  // namespace edf

inline std::string read_binary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_binary_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to '" + path + "'");
}

using edf::parse_edf;
using edf::write_edf;

}  // namespace mlab

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "montagelab/error.hpp"

namespace mlab {

enum class ReferenceScheme { LE, AR, CV, UNKNOWN };

inline std::string_view to_string(ReferenceScheme scheme) {
  switch (scheme) {
    case ReferenceScheme::LE: return "LE";
    case ReferenceScheme::AR: return "AR";
    case ReferenceScheme::CV: return "CV";
    case ReferenceScheme::UNKNOWN: return "UNKNOWN";
  }
  return "UNKNOWN";
}

inline std::string to_upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::optional<ReferenceScheme> parse_reference_scheme(std::string_view s) {
  const std::string u = to_upper(trim(s));
  if (u == "LE") return ReferenceScheme::LE;
  if (u == "AR") return ReferenceScheme::AR;
  if (u == "CV" || u == "CZ") return ReferenceScheme::CV;
  if (u == "UNKNOWN") return ReferenceScheme::UNKNOWN;
  return std::nullopt;
}

struct Range {
  double min = 0.0;
  double max = 0.0;
  friend bool operator==(const Range&, const Range&) = default;
};

struct DigitalRange {
  int min = -32768;
  int max = 32767;
  friend bool operator==(const DigitalRange&, const DigitalRange&) = default;
};

struct ChannelSignal {
  std::string label;
  std::string unit = "uV";
  std::vector<double> samples;
  Range physical_range{-1.0, 1.0};
  DigitalRange digital_range{};
};

/// Multichannel recording with a shared sample rate. Channels are stored in
/// file order; all have the same length.
class Recording {
 public:
  Recording() = default;

  Recording(std::string id, double sample_rate_hz, std::vector<ChannelSignal> channels,
            ReferenceScheme scheme = ReferenceScheme::UNKNOWN)
      : id_(std::move(id)),
        sample_rate_hz_(sample_rate_hz),
        channels_(std::move(channels)),
        scheme_(scheme) {
    validate();
  }

  const std::string& id() const { return id_; }
  double sample_rate_hz() const { return sample_rate_hz_; }
  ReferenceScheme reference_scheme() const { return scheme_; }
  const std::vector<ChannelSignal>& channels() const { return channels_; }
  std::size_t num_channels() const { return channels_.size(); }
  std::size_t num_samples() const {
    return channels_.empty() ? 0 : channels_.front().samples.size();
  }
  double duration_s() const {
    return static_cast<double>(num_samples()) / sample_rate_hz_;
  }

  /// Seconds of signal per EDF data record when the recording is written out.
  double record_duration_s() const { return record_duration_s_; }
  void set_record_duration_s(double d) { record_duration_s_ = d; }

  std::string patient_id;
  std::string start_date = "01.01.00";
  std::string start_time = "00.00.00";

  Recording with_scheme(ReferenceScheme scheme) const {
    Recording copy = *this;
    copy.scheme_ = scheme;
    return copy;
  }

  Recording with_channels(std::vector<ChannelSignal> channels) const {
    Recording copy = *this;
    copy.channels_ = std::move(channels);
    copy.validate();
    return copy;
  }

  /// Index of the channel whose label equals `label` exactly.
  std::optional<std::size_t> find_exact(std::string_view label) const {
    for (std::size_t i = 0; i < channels_.size(); ++i) {
      if (channels_[i].label == label) return i;
    }
    return std::nullopt;
  }

 private:
  void validate() const {
    if (!(sample_rate_hz_ > 0.0) || !std::isfinite(sample_rate_hz_)) {
      throw Error(ErrorCode::InvalidConfig, "recording '" + id_ + "' has non-positive sample rate");
    }
    const std::size_t n = num_samples();
    for (std::size_t i = 0; i < channels_.size(); ++i) {
      if (channels_[i].samples.size() != n) {
        throw Error(ErrorCode::DimensionMismatch,
                    "channel '" + channels_[i].label + "' length differs from first channel");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (channels_[j].label == channels_[i].label) {
          throw Error(ErrorCode::InvalidConfig, "duplicate channel label '" + channels_[i].label + "'");
        }
      }
    }
  }

  std::string id_;
  double sample_rate_hz_ = 1.0;
  std::vector<ChannelSignal> channels_;
  ReferenceScheme scheme_ = ReferenceScheme::UNKNOWN;
  double record_duration_s_ = 1.0;
};

}  // namespace mlab

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "montagelab/electrodes.hpp"
#include "montagelab/error.hpp"
#include "montagelab/recording.hpp"

namespace mlab {

/// Which ear electrodes form the linked-ears reference.
enum class EarMode { Both, Left, Right };

struct RereferenceOptions {
  EarMode ears = EarMode::Both;
  /// Electrodes averaged for AR. Empty selects every EEG electrode except
  /// A1/A2.
  std::vector<std::string> average_set;
};

/// Index of the first channel naming `electrode`, matched case-insensitively
/// and ignoring "EEG " prefixes and reference suffixes.
inline std::optional<std::size_t> find_electrode(const Recording& rec, std::string_view electrode) {
  const std::string want = canonical_electrode(electrode);
  const auto& ch = rec.channels();
  for (std::size_t i = 0; i < ch.size(); ++i) {
    if (canonical_electrode(ch[i].label) == want) return i;
  }
  return std::nullopt;
}

inline std::size_t require_electrode(const Recording& rec, std::string_view electrode) {
  if (auto i = find_electrode(rec, electrode)) return *i;
  throw Error(ErrorCode::MissingElectrode,
              "electrode '" + canonical_electrode(electrode) + "' not found in recording '" + rec.id() + "'");
}

namespace detail {

inline std::vector<std::size_t> average_members(const Recording& rec, const RereferenceOptions& opts) {
  std::vector<std::size_t> members;
  if (opts.average_set.empty()) {
    for (std::size_t i = 0; i < rec.num_channels(); ++i) {
      const auto& label = rec.channels()[i].label;
      if (is_eeg_electrode(label) && !is_ear_electrode(label)) members.push_back(i);
    }
  } else {
    for (const auto& e : opts.average_set) {
      const std::size_t i = require_electrode(rec, e);
      if (std::find(members.begin(), members.end(), i) == members.end()) members.push_back(i);
    }
  }
  if (members.empty()) {
    throw Error(ErrorCode::EmptyAverageSet, "no electrodes available for the average reference");
  }
  return members;
}

inline Range symmetric_range(const std::vector<double>& samples) {
  double peak = 0.0;
  for (double x : samples) peak = std::max(peak, std::fabs(x));
  const double bound = std::ceil(peak * 1.1 + 1.0);
  return {-bound, bound};
}

}  // namespace detail

/// Subtracts the chosen reference signal from every EEG channel. Polygraphic
/// channels pass through untouched; labels are preserved.
inline Recording rereference(const Recording& rec, ReferenceScheme scheme, const RereferenceOptions& opts = {}) {
  const std::size_t n = rec.num_samples();
  std::vector<double> ref(n, 0.0);
  const auto& ch = rec.channels();

  switch (scheme) {
    case ReferenceScheme::LE: {
      std::vector<std::size_t> ears;
      const auto a1 = find_electrode(rec, "A1");
      const auto a2 = find_electrode(rec, "A2");
      if (opts.ears != EarMode::Right && a1) ears.push_back(*a1);
      if (opts.ears != EarMode::Left && a2) ears.push_back(*a2);
      if (opts.ears == EarMode::Left && !a1) require_electrode(rec, "A1");
      if (opts.ears == EarMode::Right && !a2) require_electrode(rec, "A2");
      if (ears.empty()) require_electrode(rec, "A1");
      for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t e : ears) s += ch[e].samples[k];
        ref[k] = s / static_cast<double>(ears.size());
      }
      break;
    }
    case ReferenceScheme::CV: {
      ref = ch[require_electrode(rec, "CZ")].samples;
      break;
    }
    case ReferenceScheme::AR: {
      const auto members = detail::average_members(rec, opts);
      for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t e : members) s += ch[e].samples[k];
        ref[k] = s / static_cast<double>(members.size());
      }
      break;
    }
    case ReferenceScheme::UNKNOWN:
      throw Error(ErrorCode::InvalidConfig, "cannot re-reference to an unknown scheme");
  }

  std::vector<ChannelSignal> out = ch;
  for (auto& c : out) {
    if (!is_eeg_electrode(c.label)) continue;
    for (std::size_t k = 0; k < n; ++k) c.samples[k] -= ref[k];
    c.physical_range = detail::symmetric_range(c.samples);
  }
  return rec.with_channels(std::move(out)).with_scheme(scheme);
}

struct DerivedChannel {
  std::string label;
  std::string positive;
  /// Empty or "REF" passes the positive electrode through unchanged.
  std::string negative;

  bool is_referential() const { return negative.empty() || to_upper(negative) == "REF"; }
};

struct MontageSpec {
  std::string name;
  std::vector<DerivedChannel> channels;

  void validate() const {
    for (std::size_t i = 0; i < channels.size(); ++i) {
      if (channels[i].label.empty() || channels[i].positive.empty()) {
        throw Error(ErrorCode::InvalidConfig, "montage '" + name + "' has an incomplete channel definition");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (channels[j].label == channels[i].label) {
          throw Error(ErrorCode::InvalidConfig, "montage '" + name + "' repeats label '" + channels[i].label + "'");
        }
      }
    }
  }
};

/// ACNS temporal central parasagittal bipolar montage, 22 channels.
inline MontageSpec tcp_montage() {
  static const char* const kPairs[][2] = {
      {"FP1", "F7"}, {"F7", "T3"}, {"T3", "T5"}, {"T5", "O1"}, {"FP2", "F8"}, {"F8", "T4"},
      {"T4", "T6"},  {"T6", "O2"}, {"A1", "T3"}, {"T3", "C3"}, {"C3", "CZ"},  {"CZ", "C4"},
      {"C4", "T4"},  {"T4", "A2"}, {"FP1", "F3"}, {"F3", "C3"}, {"C3", "P3"}, {"P3", "O1"},
      {"FP2", "F4"}, {"F4", "C4"}, {"C4", "P4"}, {"P4", "O2"}};
  MontageSpec spec{"tcp", {}};
  for (const auto& p : kPairs) {
    spec.channels.push_back({std::string(p[0]) + "-" + p[1], p[0], p[1]});
  }
  return spec;
}

/// Parses one "LABEL: POS -- NEG" definition per line; '#' starts a comment.
inline MontageSpec parse_montage_spec(std::string_view text, std::string name = "custom") {
  MontageSpec spec{std::move(name), {}};
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    const auto colon = body.find(':');
    const auto dashes = body.find("--");
    if (colon == std::string_view::npos || dashes == std::string_view::npos || dashes < colon) {
      throw Error(ErrorCode::ParseError, "montage line " + std::to_string(line_no) + ": expected 'LABEL: POS -- NEG'");
    }
    DerivedChannel d;
    d.label = std::string(trim(body.substr(0, colon)));
    d.positive = std::string(trim(body.substr(colon + 1, dashes - colon - 1)));
    d.negative = std::string(trim(body.substr(dashes + 2)));
    if (d.label.empty() || d.positive.empty() || d.negative.empty()) {
      throw Error(ErrorCode::ParseError, "montage line " + std::to_string(line_no) + ": empty field");
    }
    spec.channels.push_back(std::move(d));
  }
  spec.validate();
  return spec;
}

inline std::string format_montage_spec(const MontageSpec& spec) {
  std::string out;
  for (const auto& d : spec.channels) {
    out += d.label + ": " + d.positive + " -- " + (d.is_referential() ? std::string("REF") : d.negative) + "\n";
  }
  return out;
}

/// Builds each derived channel as positive minus negative, sample by sample.
inline Recording apply_montage(const Recording& rec, const MontageSpec& spec) {
  spec.validate();
  const std::size_t n = rec.num_samples();
  std::vector<ChannelSignal> out;
  out.reserve(spec.channels.size());
  for (const auto& d : spec.channels) {
    const auto& pos = rec.channels()[require_electrode(rec, d.positive)];
    ChannelSignal c;
    c.label = d.label;
    c.unit = pos.unit;
    c.samples = pos.samples;
    if (!d.is_referential()) {
      const auto& neg = rec.channels()[require_electrode(rec, d.negative)];
      for (std::size_t k = 0; k < n; ++k) c.samples[k] -= neg.samples[k];
    }
    c.physical_range = detail::symmetric_range(c.samples);
    out.push_back(std::move(c));
  }
  return rec.with_channels(std::move(out));
}

}  // namespace mlab

#pragma once

#include <array>
#include <string>
#include <string_view>

#include "montagelab/recording.hpp"

namespace mlab {

/// Reduces a channel label to its bare electrode name: upper case, without an
/// "EEG " prefix and without a "-LE"/"-REF"/"-AR"/"-CV" reference suffix.
/// "EEG Fp1-REF" -> "FP1".
inline std::string canonical_electrode(std::string_view label) {
  std::string s = to_upper(trim(label));
  if (s.rfind("EEG ", 0) == 0) s.erase(0, 4);
  for (std::string_view suffix : {"-REF", "-LE", "-AR", "-CV", "-AVG"}) {
    if (s.size() > suffix.size() &&
        std::string_view(s).substr(s.size() - suffix.size()) == suffix) {
      s.erase(s.size() - suffix.size());
      break;
    }
  }
  return std::string(trim(s));
}

inline bool same_electrode(std::string_view a, std::string_view b) {
  return canonical_electrode(a) == canonical_electrode(b);
}

inline bool is_ear_electrode(std::string_view label) {
  const std::string e = canonical_electrode(label);
  return e == "A1" || e == "A2";
}

/// Polygraphic channels that share an EEG file but never take part in a
/// scalp reference.
inline bool is_eeg_electrode(std::string_view label) {
  static constexpr std::array<std::string_view, 13> kNonEeg = {
      "EKG", "ECG", "EMG", "EOG", "PHOTIC", "RESP", "PULSE",
      "SPO2", "IBI", "BURSTS", "SUPPR", "LOC", "ROC"};
  const std::string e = canonical_electrode(label);
  for (std::string_view prefix : kNonEeg) {
    if (e.rfind(prefix, 0) == 0) return false;
  }
  return !e.empty();
}

/// Reference scheme implied by TUH-style label suffixes. Channels without a
/// recognised suffix abstain; disagreement yields UNKNOWN.
template <typename Labels>
ReferenceScheme infer_reference_scheme(const Labels& labels) {
  bool saw_le = false;
  bool saw_ar = false;
  for (const auto& raw : labels) {
    const std::string s = to_upper(trim(std::string_view(raw)));
    auto ends_with = [&](std::string_view suffix) {
      return s.size() >= suffix.size() && std::string_view(s).substr(s.size() - suffix.size()) == suffix;
    };
    if (ends_with("-LE")) saw_le = true;
    if (ends_with("-REF") || ends_with("-AR")) saw_ar = true;
  }
  if (saw_le && !saw_ar) return ReferenceScheme::LE;
  if (saw_ar && !saw_le) return ReferenceScheme::AR;
  return ReferenceScheme::UNKNOWN;
}

}  // namespace mlab

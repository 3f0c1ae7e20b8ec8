#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string_view>
#include <vector>

#include "montagelab/error.hpp"
#include "montagelab/features.hpp"
#include "montagelab/recording.hpp"

namespace mlab {

enum class NormalizationMode { NONE, CMN, CMVN };
enum class NormalizationScope { PER_RECORDING_PER_CHANNEL, PER_RECORDING_POOLED };

inline std::optional<NormalizationMode> parse_normalization_mode(std::string_view s) {
  const std::string u = to_upper(trim(s));
  if (u == "NONE") return NormalizationMode::NONE;
  if (u == "CMN") return NormalizationMode::CMN;
  if (u == "CMVN") return NormalizationMode::CMVN;
  return std::nullopt;
}

inline std::string_view to_string(NormalizationMode m) {
  switch (m) {
    case NormalizationMode::NONE: return "none";
    case NormalizationMode::CMN: return "cmn";
    case NormalizationMode::CMVN: return "cmvn";
  }
  return "none";
}

/// Dimensions normalised by default: Ef and the cepstra with their first and
/// second deltas. Ed and dEd are left alone.
inline std::vector<std::size_t> default_normalized_dims(const FeatureLayout& layout = {}) {
  std::vector<std::size_t> dims;
  for (std::size_t j = 0; j < layout.base_dims() - 1; ++j) {
    dims.push_back(j);
    dims.push_back(layout.delta(j));
    dims.push_back(layout.delta_delta(j));
  }
  std::sort(dims.begin(), dims.end());
  return dims;
}

struct NormalizationConfig {
  NormalizationMode mode = NormalizationMode::CMN;
  NormalizationScope scope = NormalizationScope::PER_RECORDING_PER_CHANNEL;
  std::vector<std::size_t> apply_to = default_normalized_dims();
  double stddev_floor = 1e-8;
};

namespace detail {

inline void check_dims(const NormalizationConfig& cfg, std::size_t dims) {
  for (std::size_t j : cfg.apply_to) {
    if (j >= dims) {
      throw Error(ErrorCode::DimensionMismatch, "normalisation index " + std::to_string(j) + " outside 0.." +
                                                    std::to_string(dims - 1));
    }
  }
}

/// Applies (x - mean) or (x - mean) / stddev to each configured dimension,
/// with statistics pooled over every frame of every sequence given.
inline void normalize_pooled(std::vector<FeatureSequence*>& seqs, const NormalizationConfig& cfg) {
  if (cfg.mode == NormalizationMode::NONE || seqs.empty()) return;
  const std::size_t dims = seqs.front()->dims;
  check_dims(cfg, dims);
  std::size_t count = 0;
  for (const auto* s : seqs) {
    if (s->dims != dims) throw Error(ErrorCode::DimensionMismatch, "pooled sequences differ in dimension");
    count += s->num_frames();
  }
  if (count == 0) return;
  const double n = static_cast<double>(count);
  for (std::size_t j : cfg.apply_to) {
    double sum = 0.0;
    for (const auto* s : seqs) {
      for (std::size_t t = 0; t < s->num_frames(); ++t) sum += s->at(t, j);
    }
    const double mean = sum / n;
    double scale = 1.0;
    if (cfg.mode == NormalizationMode::CMVN) {
      double ss = 0.0;
      for (const auto* s : seqs) {
        for (std::size_t t = 0; t < s->num_frames(); ++t) {
          const double d = s->at(t, j) - mean;
          ss += d * d;
        }
      }
      scale = 1.0 / std::max(std::sqrt(ss / n), cfg.stddev_floor);
    }
    for (auto* s : seqs) {
      for (std::size_t t = 0; t < s->num_frames(); ++t) {
        double& v = s->values[t * dims + j];
        v = (v - mean) * scale;
      }
    }
  }
}

}  // namespace detail

/// Cepstral mean (and optionally variance) normalisation of one sequence.
inline FeatureSequence normalize(FeatureSequence seq, const NormalizationConfig& cfg) {
  std::vector<FeatureSequence*> one{&seq};
  detail::normalize_pooled(one, cfg);
  return seq;
}

/// Normalises all channels of one recording, either channel by channel or
/// with statistics pooled across the recording's channels.
inline std::vector<FeatureSequence> normalize_recording(std::vector<FeatureSequence> seqs,
                                                        const NormalizationConfig& cfg) {
  if (cfg.scope == NormalizationScope::PER_RECORDING_POOLED) {
    std::vector<FeatureSequence*> all;
    for (auto& s : seqs) all.push_back(&s);
    detail::normalize_pooled(all, cfg);
  } else {
    for (auto& s : seqs) {
      std::vector<FeatureSequence*> one{&s};
      detail::normalize_pooled(one, cfg);
    }
  }
  return seqs;
}

}  // namespace mlab

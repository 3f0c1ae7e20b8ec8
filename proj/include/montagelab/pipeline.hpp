#pragma once

#include <optional>
#include <string>
#include <vector>

#include "montagelab/features.hpp"
#include "montagelab/montage.hpp"
#include "montagelab/normalize.hpp"
#include "montagelab/recording.hpp"

namespace mlab {

/// Signal path from a parsed recording to per-channel features:
/// optional re-reference, optional montage, feature extraction, optional
/// normalisation.
struct PipelineConfig {
  std::optional<ReferenceScheme> reference;
  RereferenceOptions reference_options;
  std::optional<MontageSpec> montage;
  FeatureConfig features;
  NormalizationConfig normalization{NormalizationMode::NONE};
};

inline Recording prepare_signals(const Recording& rec, const PipelineConfig& cfg) {
  Recording out = cfg.reference ? rereference(rec, *cfg.reference, cfg.reference_options) : rec;
  if (cfg.montage) out = apply_montage(out, *cfg.montage);
  return out;
}

inline std::vector<FeatureSequence> run_pipeline(const Recording& rec, const PipelineConfig& cfg) {
  auto seqs = extract(prepare_signals(rec, cfg), cfg.features);
  if (cfg.normalization.mode != NormalizationMode::NONE) seqs = normalize_recording(std::move(seqs), cfg.normalization);
  return seqs;
}

}  // namespace mlab

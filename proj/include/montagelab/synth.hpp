#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "montagelab/error.hpp"
#include "montagelab/labels.hpp"
#include "montagelab/random.hpp"
#include "montagelab/recording.hpp"

namespace mlab {

inline constexpr std::array<std::string_view, 21> kStandardElectrodes = {
    "FP1", "FP2", "F3", "F4", "C3", "C4", "P3", "P4", "O1", "O2", "F7",
    "F8",  "T3",  "T4", "T5", "T6", "FZ", "CZ", "PZ", "A1", "A2"};

/// Distortion applied to AR-tagged synthetic recordings: every electrode is
/// scaled by `gain` and shifted by `offset` times a fixed per-electrode
/// pattern in {-1, 0, +1}. LE-tagged output is never distorted.
struct MontageBias {
  double gain = 1.0;
  double offset = 0.0;
};

struct SynthConfig {
  std::string id = "synth";
  std::string patient_id;
  int num_channels = static_cast<int>(kStandardElectrodes.size());
  double sample_rate_hz = 250.0;
  double duration_s = 60.0;
  /// Length of each alternating BCKG/SEIZ segment, starting with BCKG.
  double segment_s = 10.0;
  double pink_amplitude = 10.0;
  /// Corner of the one-pole high-pass applied to the background noise, as an
  /// EEG amplifier would; 0 disables it.
  double highpass_hz = 0.5;
  double seizure_amplitude = 40.0;
  double seizure_frequency_hz = 3.0;
  double beta_amplitude = 8.0;
  double beta_low_hz = 13.0;
  double beta_high_hz = 30.0;
  ReferenceScheme scheme = ReferenceScheme::LE;
  MontageBias bias;
};

namespace detail {

/// Voss-McCartney pink noise: row k is redrawn every 2^k samples.
class PinkNoise {
 public:
  explicit PinkNoise(Rng& rng) : rng_(rng) {
    for (auto& r : rows_) r = rng_.uniform(-1.0, 1.0);
    for (double r : rows_) sum_ += r;
  }

  double next() {
    ++counter_;
    const int k = std::countr_zero(counter_);
    if (k < static_cast<int>(rows_.size())) {
      const double fresh = rng_.uniform(-1.0, 1.0);
      sum_ += fresh - rows_[static_cast<std::size_t>(k)];
      rows_[static_cast<std::size_t>(k)] = fresh;
    }
    const double white = rng_.uniform(-1.0, 1.0);
    // Unit variance: 17 independent U(-1, 1) terms of variance 1/3 each.
    return (sum_ + white) / std::sqrt(17.0 / 3.0);
  }

 private:
  Rng& rng_;
  std::array<double, 16> rows_{};
  double sum_ = 0.0;
  std::uint32_t counter_ = 0;
};

inline std::string reference_suffix(ReferenceScheme scheme) {
  switch (scheme) {
    case ReferenceScheme::LE: return "-LE";
    case ReferenceScheme::AR: return "-REF";
    case ReferenceScheme::CV: return "-CV";
    case ReferenceScheme::UNKNOWN: return "";
  }
  return "";
}

}  // namespace detail

inline LabelSet synth_labels(const SynthConfig& cfg) {
  LabelSet set;
  set.recording_id = cfg.id;
  bool seiz = false;
  for (double t = 0.0; t < cfg.duration_s - 1e-9; t += cfg.segment_s) {
    const double stop = std::min(cfg.duration_s, t + cfg.segment_s);
    set.events.push_back({t, stop, seiz ? EventClass::SEIZ : EventClass::BCKG});
    seiz = !seiz;
  }
  return set;
}

/// Deterministic synthetic EEG: pink noise everywhere, a beta ripple during
/// background and a generalised 3 Hz discharge during seizure segments.
inline std::pair<Recording, LabelSet> generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
  if (!(cfg.sample_rate_hz > 0.0) || !(cfg.duration_s > 0.0) || !(cfg.segment_s > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "sample rate, duration and segment length must be positive");
  }
  if (cfg.num_channels < 1 || cfg.num_channels > static_cast<int>(kStandardElectrodes.size())) {
    throw Error(ErrorCode::InvalidConfig, "channel count must be in 1.." + std::to_string(kStandardElectrodes.size()));
  }
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.sample_rate_hz));
  if (n == 0) throw Error(ErrorCode::InvalidConfig, "duration shorter than one sample");

  LabelSet labels = synth_labels(cfg);

  // Seizure phase is shared across electrodes; drawn from a dedicated stream.
  Rng shared(seed, 0);
  std::vector<double> seiz_phase(labels.events.size());
  for (auto& p : seiz_phase) p = shared.uniform(0.0, 2.0 * std::numbers::pi);

  const bool biased = cfg.scheme == ReferenceScheme::AR;
  const std::string suffix = detail::reference_suffix(cfg.scheme);
  const double fs = cfg.sample_rate_hz;

  std::vector<ChannelSignal> channels;
  for (int c = 0; c < cfg.num_channels; ++c) {
    Rng rng(seed, static_cast<std::uint64_t>(c) + 1);
    detail::PinkNoise pink(rng);
    // Fixed per-electrode gain and propagation delay, so bipolar derivations
    // do not cancel the discharge and every recording shares one field map.
    const double seiz_gain = 0.7 + 0.3 * std::fmod(0.7548776662 * (c + 1), 1.0);
    const double seiz_lag = 2.0 * std::numbers::pi * std::fmod(0.5698402910 * (c + 1), 1.0);

    struct Segment {
      double beta_hz, beta_phase;
    };
    std::vector<Segment> segs(labels.events.size());
    for (auto& s : segs) {
      s.beta_hz = rng.uniform(cfg.beta_low_hz, cfg.beta_high_hz);
      s.beta_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }

    ChannelSignal ch;
    ch.label = "EEG " + std::string(kStandardElectrodes[static_cast<std::size_t>(c)]) + suffix;
    ch.samples.resize(n);
    const double hp_alpha = cfg.highpass_hz > 0.0 ? 1.0 / (1.0 + 2.0 * std::numbers::pi * cfg.highpass_hz / fs) : 1.0;
    double hp_in = 0.0, hp_out = 0.0;
    std::size_t ev = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      while (ev + 1 < labels.events.size() && t >= labels.events[ev].stop_s) ++ev;
      const double raw = cfg.pink_amplitude * pink.next();
      hp_out = cfg.highpass_hz > 0.0 ? hp_alpha * (hp_out + raw - hp_in) : raw;
      hp_in = raw;
      double x = hp_out;
      const double local = t - labels.events[ev].start_s;
      if (labels.events[ev].cls == EventClass::SEIZ) {
        x += cfg.seizure_amplitude * seiz_gain *
             std::sin(2.0 * std::numbers::pi * cfg.seizure_frequency_hz * local + seiz_phase[ev] + seiz_lag);
      } else {
        x += cfg.beta_amplitude * std::sin(2.0 * std::numbers::pi * segs[ev].beta_hz * local + segs[ev].beta_phase);
      }
      ch.samples[i] = x;
    }
    if (biased) {
      const double pattern = static_cast<double>(c % 3) - 1.0;
      for (double& x : ch.samples) x = cfg.bias.gain * x + cfg.bias.offset * pattern;
    }
    double peak = 0.0;
    for (double x : ch.samples) peak = std::max(peak, std::fabs(x));
    const double bound = std::ceil(peak * 1.1 + 1.0);
    ch.physical_range = {-bound, bound};
    channels.push_back(std::move(ch));
  }

  Recording rec(cfg.id, fs, std::move(channels), cfg.scheme);
  rec.patient_id = cfg.patient_id.empty() ? cfg.id : cfg.patient_id;
  return {std::move(rec), std::move(labels)};
}

}  // namespace mlab

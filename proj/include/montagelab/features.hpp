#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "montagelab/dsp.hpp"
#include "montagelab/error.hpp"
#include "montagelab/recording.hpp"

namespace mlab {

struct FeatureConfig {
  double frame_s = 0.1;
  double window_s = 0.2;
  int num_cepstra = 7;
  int num_filters = 8;
  /// Half-width N of the regression delta.
  int delta_halfwidth = 2;
  /// Half-width M, in frames, of the differential-energy window.
  int diff_energy_halfwidth = 4;
  double energy_floor = 1e-10;
  dsp::WindowType window = dsp::WindowType::Hann;
  dsp::FilterSpacing spacing = dsp::FilterSpacing::Linear;

  void validate() const {
    if (!(frame_s > 0.0) || !(window_s >= frame_s)) {
      throw Error(ErrorCode::InvalidConfig, "need window_s >= frame_s > 0");
    }
    if (num_cepstra < 1 || num_cepstra >= num_filters) {
      throw Error(ErrorCode::InvalidConfig, "need 1 <= num_cepstra < num_filters");
    }
    if (delta_halfwidth < 1 || diff_energy_halfwidth < 0) {
      throw Error(ErrorCode::InvalidConfig, "delta half-width must be >= 1 and energy half-width >= 0");
    }
    if (!(energy_floor > 0.0)) throw Error(ErrorCode::InvalidConfig, "energy floor must be positive");
  }
};

/// Position of each feature inside a vector:
/// [Ef, c1..cK, Ed, d(Ef, c1..cK, Ed), dd(Ef, c1..cK)].
struct FeatureLayout {
  std::size_t num_cepstra = 7;

  std::size_t base_dims() const { return num_cepstra + 2; }
  std::size_t dims() const { return 2 * base_dims() + num_cepstra + 1; }
  std::size_t energy() const { return 0; }
  std::size_t cepstrum(std::size_t j) const { return j; }  // j in 1..K
  std::size_t diff_energy() const { return num_cepstra + 1; }
  std::size_t delta(std::size_t base) const { return base_dims() + base; }
  std::size_t delta_delta(std::size_t base) const { return 2 * base_dims() + base; }  // base < K+1

  std::vector<std::string> names() const {
    std::vector<std::string> base{"Ef"};
    for (std::size_t j = 1; j <= num_cepstra; ++j) base.push_back("c" + std::to_string(j));
    base.push_back("Ed");
    std::vector<std::string> out = base;
    for (const auto& b : base) out.push_back("d" + b);
    for (std::size_t i = 0; i + 1 < base.size(); ++i) out.push_back("dd" + base[i]);
    return out;
  }
};

inline constexpr std::size_t kFeatureDims = 26;
inline constexpr std::size_t kBaseFeatureDims = 9;

/// Row-major matrix of per-frame feature vectors for one channel.
struct FeatureSequence {
  std::string channel_label;
  double frame_s = 0.1;
  std::size_t dims = kFeatureDims;
  std::vector<double> values;

  std::size_t num_frames() const { return dims == 0 ? 0 : values.size() / dims; }
  std::span<const double> row(std::size_t t) const { return {values.data() + t * dims, dims}; }
  std::span<double> row(std::size_t t) { return {values.data() + t * dims, dims}; }
  double at(std::size_t t, std::size_t j) const { return values[t * dims + j]; }
};

inline std::size_t window_length(double fs, const FeatureConfig& cfg) {
  return static_cast<std::size_t>(std::llround(cfg.window_s * fs));
}

inline std::size_t frame_step(double fs, const FeatureConfig& cfg) {
  return static_cast<std::size_t>(std::llround(cfg.frame_s * fs));
}

inline std::size_t frame_count(std::size_t num_samples, double fs, const FeatureConfig& cfg) {
  const std::size_t len = window_length(fs, cfg);
  const std::size_t step = frame_step(fs, cfg);
  if (len == 0 || step == 0) {
    throw Error(ErrorCode::InvalidConfig, "frame or window shorter than one sample at this rate");
  }
  if (num_samples < len) {
    throw Error(ErrorCode::TooShort, std::to_string(num_samples) + " samples is shorter than one " +
                                         std::to_string(len) + "-sample window");
  }
  return (num_samples - len) / step + 1;
}

/// max - min of the track over [t - M, t + M], clipped to the sequence.
inline double differential_energy(std::span<const double> track, std::size_t t, int halfwidth) {
  const std::size_t m = static_cast<std::size_t>(std::max(halfwidth, 0));
  const std::size_t lo = t >= m ? t - m : 0;
  const std::size_t hi = std::min(track.size() - 1, t + m);
  const auto [mn, mx] = std::minmax_element(track.begin() + static_cast<std::ptrdiff_t>(lo),
                                            track.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
  return *mx - *mn;
}

/// Regression delta with half-width n; frames beyond either end repeat the
/// edge value.
inline std::vector<double> deltas(std::span<const double> track, int n) {
  if (n < 1) throw Error(ErrorCode::InvalidConfig, "delta half-width must be >= 1");
  const auto size = static_cast<std::ptrdiff_t>(track.size());
  std::vector<double> out(track.size(), 0.0);
  double denom = 0.0;
  for (int i = 1; i <= n; ++i) denom += static_cast<double>(i * i);
  denom *= 2.0;
  auto at = [&](std::ptrdiff_t i) { return track[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, size - 1))]; };
  for (std::ptrdiff_t t = 0; t < size; ++t) {
    double s = 0.0;
    for (int i = 1; i <= n; ++i) s += static_cast<double>(i) * (at(t + i) - at(t - i));
    out[static_cast<std::size_t>(t)] = s / denom;
  }
  return out;
}

/// Per-frame spectral analysis for a fixed sample rate and configuration.
class FrameAnalyzer {
 public:
  FrameAnalyzer(double fs, const FeatureConfig& cfg)
      : cfg_(cfg),
        len_(mlab::window_length(fs, cfg)),
        window_(dsp::make_window(cfg.window, len_)),
        spectrum_(len_),
        filters_(static_cast<std::size_t>(cfg.num_filters), len_, fs, cfg.spacing) {
    cfg.validate();
    if (len_ == 0) throw Error(ErrorCode::InvalidConfig, "window shorter than one sample");
  }

  std::size_t window_length() const { return len_; }

  /// Windowed one-sided power spectrum of a frame.
  std::vector<double> power(std::span<const double> frame) const {
    std::vector<double> windowed(len_);
    for (std::size_t i = 0; i < len_; ++i) windowed[i] = frame[i] * window_[i];
    std::vector<double> p(spectrum_.bins());
    spectrum_.compute(windowed, p);
    return p;
  }

  /// Writes [Ef, c1..cK] for one frame of exactly window_length() samples.
  void base_features(std::span<const double> frame, std::span<double> out) const {
    if (frame.size() != len_) {
      throw Error(ErrorCode::DimensionMismatch, "frame length " + std::to_string(frame.size()) +
                                                    " differs from window length " + std::to_string(len_));
    }
    const std::vector<double> p = power(frame);
    double total = 0.0;
    for (double v : p) total += v;
    out[0] = std::log(std::max(total, cfg_.energy_floor));
    std::vector<double> fb(filters_.size());
    filters_.apply(p, fb);
    for (double& e : fb) e = std::log(std::max(e, cfg_.energy_floor));
    for (int j = 1; j <= cfg_.num_cepstra; ++j) out[static_cast<std::size_t>(j)] = dsp::dct2(fb, static_cast<std::size_t>(j));
  }

  const std::vector<double>& window() const { return window_; }

 private:
  FeatureConfig cfg_;
  std::size_t len_;
  std::vector<double> window_;
  dsp::PowerSpectrum spectrum_;
  dsp::Filterbank filters_;
};

/// Returns [Ef, c1..cK] of a single frame.
inline std::vector<double> base_features(std::span<const double> frame, double fs, const FeatureConfig& cfg = {}) {
  FrameAnalyzer analyzer(fs, cfg);
  std::vector<double> out(static_cast<std::size_t>(cfg.num_cepstra) + 1);
  analyzer.base_features(frame, out);
  return out;
}

/// Full feature sequence of one channel.
inline FeatureSequence extract_channel(std::span<const double> samples, double fs, const std::string& label,
                                       const FeatureConfig& cfg, const FrameAnalyzer& analyzer) {
  const FeatureLayout layout{static_cast<std::size_t>(cfg.num_cepstra)};
  std::size_t frames = 0;
  try {
    frames = frame_count(samples.size(), fs, cfg);
  } catch (const Error& e) {
    throw Error(e.code(), "channel '" + label + "': " + e.what());
  }
  const std::size_t step = frame_step(fs, cfg);
  const std::size_t len = analyzer.window_length();
  const std::size_t nb = layout.base_dims();
  const std::size_t spectral = nb - 1;  // Ef and cepstra

  // Base tracks, one vector per base feature.
  std::vector<std::vector<double>> base(nb, std::vector<double>(frames));
  std::vector<double> tmp(spectral);
  for (std::size_t t = 0; t < frames; ++t) {
    analyzer.base_features(samples.subspan(t * step, len), tmp);
    for (std::size_t j = 0; j < spectral; ++j) base[j][t] = tmp[j];
  }
  for (std::size_t t = 0; t < frames; ++t) {
    base[layout.diff_energy()][t] = differential_energy(base[0], t, cfg.diff_energy_halfwidth);
  }
  std::vector<std::vector<double>> d(nb), dd(spectral);
  for (std::size_t j = 0; j < nb; ++j) d[j] = deltas(base[j], cfg.delta_halfwidth);
  for (std::size_t j = 0; j < spectral; ++j) dd[j] = deltas(d[j], cfg.delta_halfwidth);

  FeatureSequence seq;
  seq.channel_label = label;
  seq.frame_s = cfg.frame_s;
  seq.dims = layout.dims();
  seq.values.resize(frames * seq.dims);
  for (std::size_t t = 0; t < frames; ++t) {
    auto r = seq.row(t);
    for (std::size_t j = 0; j < nb; ++j) r[j] = base[j][t];
    for (std::size_t j = 0; j < nb; ++j) r[layout.delta(j)] = d[j][t];
    for (std::size_t j = 0; j < spectral; ++j) r[layout.delta_delta(j)] = dd[j][t];
  }
  return seq;
}

/// One feature sequence per channel, in channel order.
inline std::vector<FeatureSequence> extract(const Recording& rec, const FeatureConfig& cfg = {}) {
  cfg.validate();
  const FrameAnalyzer analyzer(rec.sample_rate_hz(), cfg);
  std::vector<FeatureSequence> out;
  out.reserve(rec.num_channels());
  for (const auto& ch : rec.channels()) {
    out.push_back(extract_channel(ch.samples, rec.sample_rate_hz(), ch.label, cfg, analyzer));
  }
  return out;
}

}  // namespace mlab

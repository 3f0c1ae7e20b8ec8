#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "montagelab/error.hpp"

namespace mlab::dsp {

enum class WindowType { Hann, Hamming, Rectangular };
enum class FilterSpacing { Linear, Mel };

/// Symmetric analysis window of length n.
inline std::vector<double> make_window(WindowType type, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n < 2 || type == WindowType::Rectangular) return w;
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / denom);
    w[i] = type == WindowType::Hann ? 0.5 - 0.5 * c : 0.54 - 0.46 * c;
  }
  return w;
}

/// One-sided power spectrum of a real frame via a tabulated DFT. Scaled so
/// that the bins sum to the time-domain energy of the frame (Parseval), with
/// interior bins doubled to fold in the negative frequencies.
class PowerSpectrum {
 public:
  explicit PowerSpectrum(std::size_t n) : n_(n), bins_(n / 2 + 1), cos_(n * bins_), sin_(n * bins_) {
    for (std::size_t k = 0; k < bins_; ++k) {
      for (std::size_t t = 0; t < n_; ++t) {
        // Reduce k*t mod n first so the angle stays small and exact.
        const double phase = 2.0 * std::numbers::pi * static_cast<double>((k * t) % n_) / static_cast<double>(n_);
        cos_[k * n_ + t] = std::cos(phase);
        sin_[k * n_ + t] = std::sin(phase);
      }
    }
  }

  std::size_t size() const { return n_; }
  std::size_t bins() const { return bins_; }

  void compute(std::span<const double> frame, std::span<double> power) const {
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t k = 0; k < bins_; ++k) {
      double re = 0.0;
      double im = 0.0;
      const double* c = &cos_[k * n_];
      const double* s = &sin_[k * n_];
      for (std::size_t t = 0; t < n_; ++t) {
        re += frame[t] * c[t];
        im -= frame[t] * s[t];
      }
      const bool edge = k == 0 || (n_ % 2 == 0 && k == n_ / 2);
      power[k] = (edge ? 1.0 : 2.0) * (re * re + im * im) * scale;
    }
  }

 private:
  std::size_t n_;
  std::size_t bins_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular filters between 0 and fs/2. Filter m rises from edge m to edge
/// m+1 and falls to edge m+2; edges are equally spaced on the chosen scale.
class Filterbank {
 public:
  Filterbank(std::size_t num_filters, std::size_t fft_size, double fs, FilterSpacing spacing)
      : num_filters_(num_filters), bins_(fft_size / 2 + 1), weights_(num_filters * bins_, 0.0) {
    if (num_filters == 0) throw Error(ErrorCode::InvalidConfig, "filterbank needs at least one filter");
    const double top = spacing == FilterSpacing::Mel ? hz_to_mel(fs / 2.0) : fs / 2.0;
    std::vector<double> edges(num_filters + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const double v = top * static_cast<double>(i) / static_cast<double>(num_filters + 1);
      edges[i] = spacing == FilterSpacing::Mel ? mel_to_hz(v) : v;
    }
    for (std::size_t m = 0; m < num_filters; ++m) {
      const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
      for (std::size_t k = 0; k < bins_; ++k) {
        const double f = fs * static_cast<double>(k) / static_cast<double>(fft_size);
        double w = 0.0;
        if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
        else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
        weights_[m * bins_ + k] = w;
      }
    }
  }

  std::size_t size() const { return num_filters_; }

  void apply(std::span<const double> power, std::span<double> energies) const {
    for (std::size_t m = 0; m < num_filters_; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < bins_; ++k) e += weights_[m * bins_ + k] * power[k];
      energies[m] = e;
    }
  }

  double weight(std::size_t filter, std::size_t bin) const { return weights_[filter * bins_ + bin]; }

 private:
  std::size_t num_filters_;
  std::size_t bins_;
  std::vector<double> weights_;
};

/// Orthonormal DCT-II coefficient `j` of `x`.
inline double dct2(std::span<const double> x, std::size_t j) {
  const auto m = static_cast<double>(x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += x[i] * std::cos(std::numbers::pi * static_cast<double>(j) * (static_cast<double>(i) + 0.5) / m);
  }
  return (j == 0 ? std::sqrt(1.0 / m) : std::sqrt(2.0 / m)) * s;
}

}  // namespace mlab::dsp

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "montagelab/error.hpp"

namespace mlab {

/// Per-dimension streaming mean and variance (Welford), mergeable with the
/// pairwise update of Chan, Golub and LeVeque so partial results computed in
/// parallel combine exactly as if streamed in sequence.
class RunningStats {
 public:
  RunningStats() = default;
  explicit RunningStats(std::size_t dims) : mean_(dims, 0.0), m2_(dims, 0.0) {}

  std::size_t dims() const { return mean_.size(); }
  std::uint64_t count() const { return n_; }
  bool empty() const { return n_ == 0; }

  void add(std::span<const double> x) {
    if (x.size() != dims()) {
      throw Error(ErrorCode::DimensionMismatch, "vector of dimension " + std::to_string(x.size()) +
                                                    " added to statistics of dimension " + std::to_string(dims()));
    }
    ++n_;
    const double n = static_cast<double>(n_);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double delta = x[j] - mean_[j];
      mean_[j] += delta / n;
      m2_[j] += delta * (x[j] - mean_[j]);
    }
  }

  void merge(const RunningStats& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
      *this = other;
      return;
    }
    if (other.dims() != dims()) throw Error(ErrorCode::DimensionMismatch, "merging statistics of different dimension");
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(other.n_);
    const double n = na + nb;
    for (std::size_t j = 0; j < dims(); ++j) {
      const double delta = other.mean_[j] - mean_[j];
      mean_[j] += delta * nb / n;
      m2_[j] += other.m2_[j] + delta * delta * na * nb / n;
    }
    n_ += other.n_;
  }

  /// Undefined (NaN) when empty.
  double mean(std::size_t j) const { return n_ == 0 ? std::nan("") : mean_[j]; }

  /// Population variance (divide by count); NaN when empty.
  double variance(std::size_t j) const { return n_ == 0 ? std::nan("") : m2_[j] / static_cast<double>(n_); }

  /// Unbiased variance (divide by count - 1); NaN below two samples.
  double sample_variance(std::size_t j) const {
    return n_ < 2 ? std::nan("") : m2_[j] / static_cast<double>(n_ - 1);
  }

  std::vector<double> means() const {
    std::vector<double> out(dims());
    for (std::size_t j = 0; j < dims(); ++j) out[j] = mean(j);
    return out;
  }

  std::vector<double> variances() const {
    std::vector<double> out(dims());
    for (std::size_t j = 0; j < dims(); ++j) out[j] = variance(j);
    return out;
  }

 private:
  std::uint64_t n_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

}  // namespace mlab

#pragma once

// Detection scoring, DET curves and the train/eval montage grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "montagelab/error.hpp"
#include "montagelab/feature_io.hpp"
#include "montagelab/labels.hpp"

namespace mlab {

inline std::size_t class_index(EventClass c) { return c == EventClass::SEIZ ? 0 : 1; }

struct ScoreReport {
  std::string train_tag;
  std::string eval_tag;
  std::uint64_t correct = 0;
  std::uint64_t total = 0;
  /// confusion[reference][predicted], index 0 = SEIZ, 1 = BCKG.
  std::array<std::array<std::uint64_t, 2>, 2> confusion{};

  /// Pooled epoch accuracy.
  double rate() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }

  /// Mean of the per-class recalls over classes that occur.
  double macro_rate() const {
    double sum = 0.0;
    int classes = 0;
    for (std::size_t r = 0; r < 2; ++r) {
      const auto n = confusion[r][0] + confusion[r][1];
      if (n == 0) continue;
      sum += static_cast<double>(confusion[r][r]) / static_cast<double>(n);
      ++classes;
    }
    return classes == 0 ? 0.0 : sum / classes;
  }
};

struct Prediction {
  EventClass reference = EventClass::BCKG;
  EventClass predicted = EventClass::BCKG;
};

inline ScoreReport score(std::span<const Prediction> predictions) {
  if (predictions.empty()) throw Error(ErrorCode::EmptyInput, "no predictions to score");
  ScoreReport r;
  for (const auto& p : predictions) {
    ++r.confusion[class_index(p.reference)][class_index(p.predicted)];
    if (p.reference == p.predicted) ++r.correct;
    ++r.total;
  }
  return r;
}

/// Inverse of the standard normal CDF: Acklam's rational approximation
/// polished by one Halley step against erfc. Returns +-inf at 0 and 1.
inline double inverse_normal_cdf(double p) {
  if (std::isnan(p) || p < 0.0 || p > 1.0) return std::numeric_limits<double>::quiet_NaN();
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double lo = 0.02425;
  double x = 0.0;
  if (p < lo) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - lo) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

/// Probabilities are clamped to [1e-6, 1 - 1e-6] before the probit so that
/// curve endpoints stay plottable.
inline constexpr double kDeviateClamp = 1e-6;

inline double normal_deviate(double p) {
  return inverse_normal_cdf(std::clamp(p, kDeviateClamp, 1.0 - kDeviateClamp));
}

struct DetPoint {
  double p_fa = 0.0;
  double p_miss = 0.0;
  double threshold = 0.0;
  double deviate_fa() const { return normal_deviate(p_fa); }
  double deviate_miss() const { return normal_deviate(p_miss); }
};

struct DetCurve {
  std::string train_tag;
  std::string eval_tag;
  /// Ordered by increasing threshold, so p_fa falls and p_miss rises.
  std::vector<DetPoint> points;

  /// Points ordered by increasing false-alarm rate.
  std::vector<DetPoint> sorted_by_false_alarm() const {
    std::vector<DetPoint> out = points;
    std::stable_sort(out.begin(), out.end(), [](const DetPoint& a, const DetPoint& b) {
      return a.p_fa < b.p_fa || (a.p_fa == b.p_fa && a.p_miss > b.p_miss);
    });
    return out;
  }
};

struct ScoredEpoch {
  EventClass reference = EventClass::BCKG;
  double margin = 0.0;
};

/// Sweeps every distinct margin as a threshold (SEIZ accepted at or above
/// it), then adds a threshold above all margins, which rejects everything.
inline DetCurve det_curve(std::span<const ScoredEpoch> scored) {
  std::vector<double> seiz, bckg;
  for (const auto& s : scored) (s.reference == EventClass::SEIZ ? seiz : bckg).push_back(s.margin);
  if (seiz.empty() || bckg.empty()) {
    throw Error(ErrorCode::SingleClassInput, "DET curve needs both SEIZ and BCKG epochs");
  }
  std::sort(seiz.begin(), seiz.end());
  std::sort(bckg.begin(), bckg.end());
  std::vector<double> thresholds = seiz;
  thresholds.insert(thresholds.end(), bckg.begin(), bckg.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());

  const double ns = static_cast<double>(seiz.size());
  const double nb = static_cast<double>(bckg.size());
  DetCurve curve;
  for (double t : thresholds) {
    const auto missed = std::lower_bound(seiz.begin(), seiz.end(), t) - seiz.begin();
    const auto accepted = bckg.end() - std::lower_bound(bckg.begin(), bckg.end(), t);
    curve.points.push_back({static_cast<double>(accepted) / nb, static_cast<double>(missed) / ns, t});
  }
  return curve;
}

inline std::string det_to_csv(const DetCurve& curve) {
  using detail::format_double;
  std::string out = "p_fa,p_miss,deviate_fa,deviate_miss,threshold\n";
  for (const auto& p : curve.points) {
    out += format_double(p.p_fa) + "," + format_double(p.p_miss) + "," + format_double(p.deviate_fa()) + "," +
           format_double(p.deviate_miss()) + "," + (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) +
           "\n";
  }
  return out;
}

inline constexpr std::array<const char*, 3> kGridTags = {"LE", "AR", "LE+AR"};

/// Rows are the training condition, columns the evaluation condition.
struct ScoreGrid {
  std::array<std::array<ScoreReport, 3>, 3> cells{};
  bool macro = false;

  double rate(std::size_t train, std::size_t eval) const {
    return macro ? cells[train][eval].macro_rate() : cells[train][eval].rate();
  }
};

inline std::string grid_to_csv(const ScoreGrid& g) {
  std::string out = "Train/Eval,LE,AR,LE+AR\n";
  char buf[32];
  for (std::size_t r = 0; r < 3; ++r) {
    out += kGridTags[r];
    for (std::size_t c = 0; c < 3; ++c) {
      std::snprintf(buf, sizeof buf, ",%.4f", 100.0 * g.rate(r, c));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

inline nlohmann::json grid_to_json(const ScoreGrid& g) {
  nlohmann::json j;
  j["metric"] = g.macro ? "macro" : "pooled";
  j["rows"] = "train";
  j["columns"] = "eval";
  j["tags"] = {"LE", "AR", "LE+AR"};
  auto& cells = j["cells"] = nlohmann::json::array();
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      const auto& s = g.cells[r][c];
      cells.push_back({{"train", kGridTags[r]},
                       {"eval", kGridTags[c]},
                       {"rate", g.rate(r, c)},
                       {"correct", s.correct},
                       {"total", s.total},
                       {"confusion", {{"ref_SEIZ", {{"SEIZ", s.confusion[0][0]}, {"BCKG", s.confusion[0][1]}}},
                                      {"ref_BCKG", {{"SEIZ", s.confusion[1][0]}, {"BCKG", s.confusion[1][1]}}}}}});
    }
  }
  return j;
}

/// Bar-chart data comparing raw and normalised grids cell by cell.
inline std::string normalization_comparison(const ScoreGrid& raw, const ScoreGrid& normalized,
                                            std::string_view label = "cmn") {
  std::string out = "# cell raw_pct " + std::string(label) + "_pct\n";
  char buf[96];
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      std::snprintf(buf, sizeof buf, "%s/%s %.4f %.4f\n", kGridTags[r], kGridTags[c], 100.0 * raw.rate(r, c),
                    100.0 * normalized.rate(r, c));
      out += buf;
    }
  }
  return out;
}

/// Three-sigma half-width of a binomial proportion estimate.
inline double binomial_three_sigma(double p, std::uint64_t n) {
  return n == 0 ? 1.0 : 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

}  // namespace mlab

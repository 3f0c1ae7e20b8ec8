#pragma once

// Descriptive statistics of base features per montage class.

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "montagelab/error.hpp"
#include "montagelab/feature_io.hpp"
#include "montagelab/features.hpp"
#include "montagelab/running_stats.hpp"

namespace mlab {

enum class StatsClass { LE, AR, GLOBAL };

inline std::string_view to_string(StatsClass c) {
  switch (c) {
    case StatsClass::LE: return "LE";
    case StatsClass::AR: return "AR";
    case StatsClass::GLOBAL: return "GLOBAL";
  }
  return "GLOBAL";
}

struct StatsSummary {
  StatsClass class_tag = StatsClass::GLOBAL;
  RunningStats stats{kBaseFeatureDims};

  std::uint64_t count() const { return stats.count(); }
  std::size_t dims() const { return stats.dims(); }

  void merge(const StatsSummary& other) { stats.merge(other.stats); }
};

/// Streams the base dimensions [Ef, c1..cK, Ed] of every frame into `summary`.
inline StatsSummary accumulate(StatsSummary summary, const FeatureSequence& seq) {
  const std::size_t base = summary.dims();
  if (seq.dims < base) {
    throw Error(ErrorCode::DimensionMismatch, "sequence has " + std::to_string(seq.dims) + " dims, need " +
                                                  std::to_string(base));
  }
  for (std::size_t t = 0; t < seq.num_frames(); ++t) summary.stats.add(seq.row(t).first(base));
  return summary;
}

/// Table of per-feature means and population variances for LE, AR and the
/// pooled data.
struct StatsTable {
  std::vector<std::string> features;
  std::vector<double> mean_le, mean_ar, var_le, var_ar;
  std::vector<double> mean_global, var_global;
  std::uint64_t count_le = 0, count_ar = 0, count_global = 0;

  std::size_t rows() const { return features.size(); }
};

inline StatsTable report_table(const StatsSummary& le, const StatsSummary& ar, const StatsSummary& global) {
  const std::size_t n = le.dims();
  if (ar.dims() != n || global.dims() != n) {
    throw Error(ErrorCode::DimensionMismatch, "summaries cover different feature dimensions");
  }
  StatsTable t;
  const auto names = FeatureLayout{n - 2}.names();
  t.features.assign(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(n));
  t.mean_le = le.stats.means();
  t.mean_ar = ar.stats.means();
  t.var_le = le.stats.variances();
  t.var_ar = ar.stats.variances();
  t.mean_global = global.stats.means();
  t.var_global = global.stats.variances();
  t.count_le = le.count();
  t.count_ar = ar.count();
  t.count_global = global.count();
  return t;
}

/// Two CSV blocks separated by a blank line: the LE/AR table, then the
/// pooled mean and variance.
inline std::string stats_to_csv(const StatsTable& t) {
  using detail::format_double;
  std::string out = "feature,mean_LE,mean_AR,var_LE,var_AR\n";
  for (std::size_t i = 0; i < t.rows(); ++i) {
    out += t.features[i] + "," + format_double(t.mean_le[i]) + "," + format_double(t.mean_ar[i]) + "," +
           format_double(t.var_le[i]) + "," + format_double(t.var_ar[i]) + "\n";
  }
  out += "\nfeature,mean_GLOBAL,var_GLOBAL\n";
  for (std::size_t i = 0; i < t.rows(); ++i) {
    out += t.features[i] + "," + format_double(t.mean_global[i]) + "," + format_double(t.var_global[i]) + "\n";
  }
  return out;
}

inline StatsTable stats_from_csv(std::string_view text) {
  using detail::parse_double;
  using detail::split_csv;
  StatsTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  int block = 0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    const std::string ctx = "stats CSV line " + std::to_string(line_no);
    if (cells[0] == "feature") {
      ++block;
      continue;
    }
    if (block == 1) {
      if (cells.size() != 5) throw Error(ErrorCode::ParseError, ctx + ": expected 5 columns");
      t.features.emplace_back(cells[0]);
      t.mean_le.push_back(parse_double(cells[1], ctx));
      t.mean_ar.push_back(parse_double(cells[2], ctx));
      t.var_le.push_back(parse_double(cells[3], ctx));
      t.var_ar.push_back(parse_double(cells[4], ctx));
    } else if (block == 2) {
      if (cells.size() != 3) throw Error(ErrorCode::ParseError, ctx + ": expected 3 columns");
      t.mean_global.push_back(parse_double(cells[1], ctx));
      t.var_global.push_back(parse_double(cells[2], ctx));
    } else {
      throw Error(ErrorCode::ParseError, ctx + ": data before header");
    }
  }
  if (t.mean_global.size() != t.features.size()) {
    throw Error(ErrorCode::ParseError, "stats CSV blocks have different row counts");
  }
  return t;
}

inline std::string stats_to_text(const StatsTable& t) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %12s %12s %12s %12s\n", "Feature", "Mean LE", "Mean AR", "Var LE", "Var AR");
  out += buf;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    std::snprintf(buf, sizeof buf, "%-8s %12.3f %12.3f %12.3f %12.3f\n", t.features[i].c_str(), t.mean_le[i],
                  t.mean_ar[i], t.var_le[i], t.var_ar[i]);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "\n%-8s %12s %12s\n", "Feature", "Mean all", "Var all");
  out += buf;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    std::snprintf(buf, sizeof buf, "%-8s %12.3f %12.3f\n", t.features[i].c_str(), t.mean_global[i], t.var_global[i]);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "\nframes: LE %llu, AR %llu, all %llu\n", static_cast<unsigned long long>(t.count_le),
                static_cast<unsigned long long>(t.count_ar), static_cast<unsigned long long>(t.count_global));
  out += buf;
  return out;
}

}  // namespace mlab

#pragma once

// Principal component analysis of base feature vectors and comparison of the
// resulting eigenvectors across montage classes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "montagelab/error.hpp"
#include "montagelab/feature_io.hpp"

namespace mlab {

/// Dense row-major square matrix.
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<double> a;

  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t size) : n(size), a(size * size, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

struct SymmetricEigen {
  std::vector<double> values;
  /// vectors[i] is the unit eigenvector belonging to values[i].
  std::vector<std::vector<double>> vectors;
  int sweeps = 0;
};

/// Cyclic Jacobi eigensolver for symmetric matrices. Iterates until the
/// off-diagonal Frobenius norm is at most `tol` (absolute) or negligible
/// relative to the matrix norm. Eigenpairs are returned unsorted.
inline SymmetricEigen jacobi_eigen(SquareMatrix m, double tol = 1e-12, int max_sweeps = 100) {
  const std::size_t n = m.n;
  SquareMatrix v(n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * m(i, j) * m(i, j);
    return std::sqrt(s);
  };
  double frob = 0.0;
  for (double x : m.a) frob += x * x;
  frob = std::sqrt(frob);

  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    const double off = off_norm();
    if (off <= tol && off <= 1e-15 * frob) break;
    if (off == 0.0) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        m(p, q) = m(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  SymmetricEigen out;
  out.sweeps = sweep;
  out.values.resize(n);
  out.vectors.assign(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = m(i, i);
    for (std::size_t k = 0; k < n; ++k) out.vectors[i][k] = v(k, i);
  }
  return out;
}

/// Flips `v` so its largest-magnitude entry (first on ties) is positive.
inline void fix_sign(std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (std::fabs(v[k]) > std::fabs(v[best])) best = k;
  }
  if (!v.empty() && v[best] < 0.0) {
    for (double& x : v) x = -x;
  }
}

struct EigenDecomposition {
  std::vector<double> mean;
  SquareMatrix covariance;
  /// Sorted descending.
  std::vector<double> eigenvalues;
  /// eigenvectors[i] pairs with eigenvalues[i]; sign-fixed.
  std::vector<std::vector<double>> eigenvectors;
  /// eigenvalues[i] / sum of eigenvalues.
  std::vector<double> explained;
  std::uint64_t count = 0;

  std::size_t dims() const { return eigenvalues.size(); }
};

/// Eigen-analysis of an already formed covariance matrix.
inline EigenDecomposition decompose_covariance(std::vector<double> mean, const SquareMatrix& cov) {
  const std::size_t n = cov.n;
  SquareMatrix sym(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = i == j ? cov(i, i) : 0.5 * (cov(i, j) + cov(j, i));
      sym(i, j) = sym(j, i) = v;
    }
  }
  SymmetricEigen eig = jacobi_eigen(sym);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return eig.values[x] > eig.values[y]; });

  EigenDecomposition d;
  d.mean = std::move(mean);
  d.covariance = sym;
  double total = 0.0;
  for (std::size_t i : order) {
    d.eigenvalues.push_back(eig.values[i]);
    d.eigenvectors.push_back(eig.vectors[i]);
    fix_sign(d.eigenvectors.back());
    total += eig.values[i];
  }
  if (!(total > 0.0)) {
    throw Error(ErrorCode::InsufficientData, "covariance has zero total variance");
  }
  for (double l : d.eigenvalues) d.explained.push_back(l / total);
  return d;
}

enum class CovarianceNormalization { Sample, Population };

/// PCA of `count` row-major vectors of dimension `dims`. Covariance is taken
/// about the sample mean and divided by N - 1 unless Population is chosen.
inline EigenDecomposition pca(std::span<const double> rows, std::size_t dims,
                              CovarianceNormalization norm = CovarianceNormalization::Sample) {
  if (dims == 0 || rows.size() % dims != 0) {
    throw Error(ErrorCode::DimensionMismatch, "row data is not a whole number of vectors");
  }
  const std::size_t count = rows.size() / dims;
  if (count < 2) throw Error(ErrorCode::InsufficientData, "PCA needs at least two vectors");
  std::vector<double> mean(dims, 0.0);
  for (std::size_t r = 0; r < count; ++r)
    for (std::size_t j = 0; j < dims; ++j) mean[j] += rows[r * dims + j];
  for (double& m : mean) m /= static_cast<double>(count);
  SquareMatrix cov(dims);
  for (std::size_t r = 0; r < count; ++r) {
    const double* x = &rows[r * dims];
    for (std::size_t i = 0; i < dims; ++i) {
      const double di = x[i] - mean[i];
      for (std::size_t j = i; j < dims; ++j) cov(i, j) += di * (x[j] - mean[j]);
    }
  }
  const double denom = static_cast<double>(norm == CovarianceNormalization::Sample ? count - 1 : count);
  for (std::size_t i = 0; i < dims; ++i) {
    for (std::size_t j = i; j < dims; ++j) {
      cov(i, j) /= denom;
      cov(j, i) = cov(i, j);
    }
  }
  auto d = decompose_covariance(std::move(mean), cov);
  d.count = count;
  return d;
}

inline EigenDecomposition pca(const std::vector<std::vector<double>>& vectors,
                              CovarianceNormalization norm = CovarianceNormalization::Sample) {
  if (vectors.empty()) throw Error(ErrorCode::InsufficientData, "PCA needs at least two vectors");
  const std::size_t dims = vectors.front().size();
  std::vector<double> flat;
  flat.reserve(vectors.size() * dims);
  for (const auto& v : vectors) {
    if (v.size() != dims) throw Error(ErrorCode::DimensionMismatch, "vectors differ in dimension");
    flat.insert(flat.end(), v.begin(), v.end());
  }
  return pca(flat, dims, norm);
}

/// Streaming mean and co-moment matrix, mergeable like RunningStats.
class CovarianceAccumulator {
 public:
  explicit CovarianceAccumulator(std::size_t dims) : mean_(dims, 0.0), co_(dims) {}

  std::size_t dims() const { return mean_.size(); }
  std::uint64_t count() const { return n_; }

  void add(std::span<const double> x) {
    if (x.size() != dims()) throw Error(ErrorCode::DimensionMismatch, "vector dimension differs from accumulator");
    ++n_;
    const double n = static_cast<double>(n_);
    std::vector<double> before(dims());
    for (std::size_t j = 0; j < dims(); ++j) {
      before[j] = x[j] - mean_[j];
      mean_[j] += before[j] / n;
    }
    for (std::size_t i = 0; i < dims(); ++i)
      for (std::size_t j = i; j < dims(); ++j) co_(i, j) += before[i] * (x[j] - mean_[j]);
  }

  void merge(const CovarianceAccumulator& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    if (o.dims() != dims()) throw Error(ErrorCode::DimensionMismatch, "merging accumulators of different dimension");
    const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_), n = na + nb;
    std::vector<double> delta(dims());
    for (std::size_t j = 0; j < dims(); ++j) delta[j] = o.mean_[j] - mean_[j];
    for (std::size_t i = 0; i < dims(); ++i)
      for (std::size_t j = i; j < dims(); ++j) co_(i, j) += o.co_(i, j) + delta[i] * delta[j] * na * nb / n;
    for (std::size_t j = 0; j < dims(); ++j) mean_[j] += delta[j] * nb / n;
    n_ += o.n_;
  }

  EigenDecomposition decompose(CovarianceNormalization norm = CovarianceNormalization::Sample) const {
    if (n_ < 2) throw Error(ErrorCode::InsufficientData, "PCA needs at least two vectors");
    const double denom = static_cast<double>(norm == CovarianceNormalization::Sample ? n_ - 1 : n_);
    SquareMatrix cov(dims());
    for (std::size_t i = 0; i < dims(); ++i) {
      for (std::size_t j = i; j < dims(); ++j) cov(i, j) = cov(j, i) = co_(i, j) / denom;
    }
    auto d = decompose_covariance(mean_, cov);
    d.count = n_;
    return d;
  }

 private:
  std::uint64_t n_ = 0;
  std::vector<double> mean_;
  SquareMatrix co_;
};

struct EigenComparison {
  /// |a_i . b_i| for each rank i.
  std::vector<double> cosine;
  /// Components j where the dot-aligned entries of rank i have opposite sign
  /// and both exceed the amplitude threshold.
  std::vector<std::vector<std::size_t>> opposite_polarity;
  /// Sign-fixed eigenvector amplitudes, amplitude_a[i][j] = a_i[j].
  std::vector<std::vector<double>> amplitude_a, amplitude_b;
  std::vector<double> explained_a, explained_b;
};

inline EigenComparison compare_eigenvectors(const EigenDecomposition& a, const EigenDecomposition& b,
                                            double polarity_threshold = 0.05) {
  if (a.dims() != b.dims() || a.eigenvectors.size() != b.eigenvectors.size()) {
    throw Error(ErrorCode::DimensionMismatch, "decompositions differ in dimension");
  }
  EigenComparison c;
  c.explained_a = a.explained;
  c.explained_b = b.explained;
  for (std::size_t i = 0; i < a.eigenvectors.size(); ++i) {
    auto va = a.eigenvectors[i];
    auto vb = b.eigenvectors[i];
    if (va.size() != vb.size()) throw Error(ErrorCode::DimensionMismatch, "eigenvector lengths differ");
    fix_sign(va);
    fix_sign(vb);
    const double dot = std::inner_product(va.begin(), va.end(), vb.begin(), 0.0);
    c.cosine.push_back(std::min(1.0, std::fabs(dot)));
    const double align = dot < 0.0 ? -1.0 : 1.0;
    std::vector<std::size_t> flips;
    for (std::size_t j = 0; j < va.size(); ++j) {
      const double x = va[j], y = align * vb[j];
      if (x * y < 0.0 && std::fabs(x) >= polarity_threshold && std::fabs(y) >= polarity_threshold) flips.push_back(j);
    }
    c.opposite_polarity.push_back(std::move(flips));
    c.amplitude_a.push_back(std::move(va));
    c.amplitude_b.push_back(std::move(vb));
  }
  return c;
}

/// Columns: component index (1-based), then a's eigenvectors, then b's.
inline std::string amplitude_table(const EigenComparison& c, std::string_view name_a = "LE",
                                   std::string_view name_b = "AR") {
  const std::size_t n = c.amplitude_a.size();
  std::string out = "# component";
  for (std::size_t i = 0; i < n; ++i) out += " " + std::string(name_a) + "_v" + std::to_string(i + 1);
  for (std::size_t i = 0; i < n; ++i) out += " " + std::string(name_b) + "_v" + std::to_string(i + 1);
  out += "\n";
  const std::size_t comps = n == 0 ? 0 : c.amplitude_a.front().size();
  for (std::size_t j = 0; j < comps; ++j) {
    out += std::to_string(j + 1);
    for (std::size_t i = 0; i < n; ++i) out += " " + detail::format_double(c.amplitude_a[i][j]);
    for (std::size_t i = 0; i < n; ++i) out += " " + detail::format_double(c.amplitude_b[i][j]);
    out += "\n";
  }
  return out;
}

/// rank,explained_A,explained_B,cosine,opposite_polarity (';'-separated
/// 1-based component indices).
inline std::string comparison_to_csv(const EigenComparison& c, std::string_view name_a = "LE",
                                     std::string_view name_b = "AR") {
  std::string out = "rank,explained_" + std::string(name_a) + ",explained_" + std::string(name_b) +
                    ",cosine,opposite_polarity\n";
  for (std::size_t i = 0; i < c.cosine.size(); ++i) {
    out += std::to_string(i + 1) + "," + detail::format_double(c.explained_a[i]) + "," +
           detail::format_double(c.explained_b[i]) + "," + detail::format_double(c.cosine[i]) + ",";
    for (std::size_t k = 0; k < c.opposite_polarity[i].size(); ++k) {
      if (k) out += ";";
      out += std::to_string(c.opposite_polarity[i][k] + 1);
    }
    out += "\n";
  }
  return out;
}

/// Percent variance explained per component, one row per rank.
inline std::string explained_table(const EigenDecomposition& a, const EigenDecomposition& b,
                                   std::string_view name_a = "LE", std::string_view name_b = "AR") {
  std::string out = "# component pct_" + std::string(name_a) + " pct_" + std::string(name_b) + "\n";
  char buf[96];
  for (std::size_t i = 0; i < a.explained.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu %.10f %.10f\n", i + 1, 100.0 * a.explained[i], 100.0 * b.explained[i]);
    out += buf;
  }
  return out;
}

}  // namespace mlab

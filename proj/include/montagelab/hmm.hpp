#pragma once

// Gaussian-mixture hidden Markov models: model type, log-domain forward
// scoring, Viterbi decoding and sampling.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "montagelab/error.hpp"
#include "montagelab/labels.hpp"
#include "montagelab/random.hpp"

namespace mlab {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

inline double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

struct DiagGaussian {
  std::vector<double> mean;
  std::vector<double> var;
};

struct Gmm {
  std::vector<double> weights;
  std::vector<DiagGaussian> components;

  std::size_t size() const { return components.size(); }
};

/// Observation sequence scored as a unit: a run of consecutive feature frames
/// from one channel, carrying the reference class of the span it covers.
struct Epoch {
  std::string recording_id;
  std::string channel_label;
  std::size_t first_frame = 0;
  std::size_t dims = 0;
  std::vector<double> frames;
  EventClass reference_class = EventClass::BCKG;

  std::size_t num_frames() const { return dims == 0 ? 0 : frames.size() / dims; }
  std::span<const double> frame(std::size_t t) const { return {frames.data() + t * dims, dims}; }
};

/// Left-to-right (or general) HMM with diagonal-covariance GMM emissions.
/// Each transition row plus its exit probability sums to one; scoring ends in
/// whichever state the last frame occupies, so the exit mass is not used.
struct HmmModel {
  EventClass class_tag = EventClass::BCKG;
  std::size_t dims = 0;
  std::vector<double> initial;
  std::vector<std::vector<double>> transitions;
  std::vector<double> exit;
  std::vector<Gmm> states;
  std::string trained_on;

  std::size_t num_states() const { return states.size(); }

  /// Throws InvalidConfig unless every stochastic constraint holds.
  void validate(bool left_to_right = false, double tol = 1e-9) const {
    const std::size_t s = num_states();
    auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, "HMM: " + m); };
    if (s == 0) fail("no states");
    if (initial.size() != s || transitions.size() != s || exit.size() != s) fail("inconsistent state count");
    double pi = 0.0;
    for (double p : initial) {
      if (p < 0.0) fail("negative initial probability");
      pi += p;
    }
    if (std::fabs(pi - 1.0) > tol) fail("initial probabilities do not sum to 1");
    for (std::size_t i = 0; i < s; ++i) {
      if (transitions[i].size() != s) fail("transition row has wrong length");
      double row = exit[i];
      for (std::size_t j = 0; j < s; ++j) {
        const double a = transitions[i][j];
        if (a < 0.0) fail("negative transition probability");
        if (left_to_right && a != 0.0 && (j < i || j > i + 1)) fail("transition breaks left-to-right topology");
        row += a;
      }
      if (std::fabs(row - 1.0) > tol) fail("transition row " + std::to_string(i) + " does not sum to 1");
      const Gmm& g = states[i];
      if (g.weights.size() != g.components.size() || g.components.empty()) fail("mixture size mismatch");
      double w = 0.0;
      for (double x : g.weights) w += x;
      if (std::fabs(w - 1.0) > tol) fail("mixture weights of state " + std::to_string(i) + " do not sum to 1");
      for (const auto& c : g.components) {
        if (c.mean.size() != dims || c.var.size() != dims) fail("component dimension mismatch");
        for (double v : c.var) {
          if (!(v > 0.0)) fail("non-positive variance");
        }
      }
    }
  }
};

/// Log-domain constants of a model, precomputed once for repeated scoring.
class CompiledModel {
 public:
  explicit CompiledModel(const HmmModel& m) : dims_(m.dims), num_states_(m.num_states()) {
    log_initial_.resize(num_states_);
    log_trans_.resize(num_states_ * num_states_);
    for (std::size_t i = 0; i < num_states_; ++i) {
      log_initial_[i] = std::log(m.initial[i]);
      for (std::size_t j = 0; j < num_states_; ++j) log_trans_[i * num_states_ + j] = std::log(m.transitions[i][j]);
    }
    state_offset_.push_back(0);
    for (const auto& g : m.states) {
      for (std::size_t c = 0; c < g.size(); ++c) {
        const auto& comp = g.components[c];
        double gconst = std::log(g.weights[c]);
        std::vector<double> inv(dims_);
        for (std::size_t d = 0; d < dims_; ++d) {
          gconst -= 0.5 * std::log(2.0 * std::numbers::pi * comp.var[d]);
          inv[d] = 1.0 / comp.var[d];
        }
        gconst_.push_back(gconst);
        means_.insert(means_.end(), comp.mean.begin(), comp.mean.end());
        inv_var_.insert(inv_var_.end(), inv.begin(), inv.end());
      }
      state_offset_.push_back(gconst_.size());
    }
  }

  std::size_t dims() const { return dims_; }
  std::size_t num_states() const { return num_states_; }
  double log_initial(std::size_t i) const { return log_initial_[i]; }
  double log_transition(std::size_t i, std::size_t j) const { return log_trans_[i * num_states_ + j]; }
  std::size_t num_components(std::size_t state) const { return state_offset_[state + 1] - state_offset_[state]; }

  /// log(w_m) + log N(x; mu_m, diag var_m) for component m of `state`.
  double component_log_likelihood(std::size_t state, std::size_t m, std::span<const double> x) const {
    const std::size_t k = state_offset_[state] + m;
    const double* mu = &means_[k * dims_];
    const double* iv = &inv_var_[k * dims_];
    double q = 0.0;
    for (std::size_t d = 0; d < dims_; ++d) {
      const double diff = x[d] - mu[d];
      q += diff * diff * iv[d];
    }
    return gconst_[k] - 0.5 * q;
  }

  double emission(std::size_t state, std::span<const double> x) const {
    double acc = kNegInf;
    for (std::size_t m = 0; m < num_components(state); ++m) acc = log_sum_exp(acc, component_log_likelihood(state, m, x));
    return acc;
  }

 private:
  std::size_t dims_;
  std::size_t num_states_;
  std::vector<double> log_initial_;
  std::vector<double> log_trans_;
  std::vector<std::size_t> state_offset_;
  std::vector<double> gconst_;
  std::vector<double> means_;
  std::vector<double> inv_var_;
};

namespace detail {

inline void check_epoch(const CompiledModel& m, const Epoch& e) {
  if (e.dims != m.dims()) {
    throw Error(ErrorCode::DimensionMismatch, "epoch has " + std::to_string(e.dims) + " dims, model expects " +
                                                  std::to_string(m.dims()));
  }
  if (e.num_frames() == 0) throw Error(ErrorCode::InsufficientData, "epoch has no frames");
}

/// emissions[t * S + i] = log b_i(o_t).
inline std::vector<double> emission_table(const CompiledModel& m, const Epoch& e) {
  const std::size_t s = m.num_states();
  std::vector<double> b(e.num_frames() * s);
  for (std::size_t t = 0; t < e.num_frames(); ++t)
    for (std::size_t i = 0; i < s; ++i) b[t * s + i] = m.emission(i, e.frame(t));
  return b;
}

}  // namespace detail

/// log p(O | model) by the forward recursion in the log domain.
inline double log_forward(const CompiledModel& m, const Epoch& e) {
  detail::check_epoch(m, e);
  const std::size_t s = m.num_states();
  const std::size_t T = e.num_frames();
  const auto b = detail::emission_table(m, e);
  std::vector<double> alpha(s), next(s);
  for (std::size_t i = 0; i < s; ++i) alpha[i] = m.log_initial(i) + b[i];
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t j = 0; j < s; ++j) {
      double acc = kNegInf;
      for (std::size_t i = 0; i < s; ++i) acc = log_sum_exp(acc, alpha[i] + m.log_transition(i, j));
      next[j] = acc + b[t * s + j];
    }
    std::swap(alpha, next);
  }
  return log_sum_exp(alpha);
}

inline double log_forward(const HmmModel& model, const Epoch& e) { return log_forward(CompiledModel(model), e); }

struct ViterbiResult {
  std::vector<std::size_t> path;
  double log_score = kNegInf;
};

/// Most probable state path. Among paths whose scores agree to within
/// rounding the lexicographically smallest state sequence is returned; the
/// reported score is that path's joint log probability.
inline ViterbiResult viterbi(const CompiledModel& m, const Epoch& e) {
  detail::check_epoch(m, e);
  const std::size_t s = m.num_states();
  const std::size_t T = e.num_frames();
  const auto b = detail::emission_table(m, e);

  // best[t * S + i]: best log score of frames t+1..T-1 given state i at t.
  std::vector<double> best(T * s, 0.0);
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t i = 0; i < s; ++i) {
      double v = kNegInf;
      for (std::size_t j = 0; j < s; ++j) {
        v = std::max(v, m.log_transition(i, j) + b[(t + 1) * s + j] + best[(t + 1) * s + j]);
      }
      best[t * s + i] = v;
    }
  }
  auto tol = [](double target) { return 1e-12 * (1.0 + std::fabs(target)); };

  ViterbiResult r;
  double target = kNegInf;
  for (std::size_t i = 0; i < s; ++i) target = std::max(target, m.log_initial(i) + b[i] + best[i]);
  if (target == kNegInf) return r;
  std::size_t state = 0;
  for (std::size_t i = 0; i < s; ++i) {
    if (m.log_initial(i) + b[i] + best[i] >= target - tol(target)) {
      state = i;
      break;
    }
  }
  r.path.push_back(state);
  double score = m.log_initial(state) + b[state];
  for (std::size_t t = 1; t < T; ++t) {
    const double remaining = best[(t - 1) * s + state];
    std::size_t chosen = 0;
    for (std::size_t j = 0; j < s; ++j) {
      if (m.log_transition(state, j) + b[t * s + j] + best[t * s + j] >= remaining - tol(remaining)) {
        chosen = j;
        break;
      }
    }
    score += m.log_transition(state, chosen) + b[t * s + chosen];
    state = chosen;
    r.path.push_back(state);
  }
  r.log_score = score;
  return r;
}

inline ViterbiResult viterbi(const HmmModel& model, const Epoch& e) { return viterbi(CompiledModel(model), e); }

/// Draws a T-frame observation sequence and its state path from `model`.
inline std::pair<Epoch, std::vector<std::size_t>> sample_epoch(const HmmModel& model, std::size_t T, Rng& rng) {
  auto draw = [&](std::span<const double> probs) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    for (std::size_t i = probs.size(); i-- > 0;) {
      if (probs[i] > 0.0) return i;
    }
    return std::size_t{0};
  };
  Epoch e;
  e.dims = model.dims;
  e.reference_class = model.class_tag;
  std::vector<std::size_t> path;
  std::size_t state = draw(model.initial);
  for (std::size_t t = 0; t < T; ++t) {
    if (t > 0) {
      // Renormalise over in-model transitions; the exit mass is never taken.
      std::vector<double> row = model.transitions[state];
      double total = 0.0;
      for (double p : row) total += p;
      for (double& p : row) p /= total;
      state = draw(row);
    }
    path.push_back(state);
    const Gmm& g = model.states[state];
    const auto& c = g.components[draw(g.weights)];
    for (std::size_t d = 0; d < model.dims; ++d) e.frames.push_back(c.mean[d] + std::sqrt(c.var[d]) * rng.normal());
  }
  return {std::move(e), std::move(path)};
}

struct Classification {
  EventClass predicted = EventClass::BCKG;
  /// log p(O | SEIZ) - log p(O | BCKG).
  double margin = 0.0;
  double log_likelihood_seiz = 0.0;
  double log_likelihood_bckg = 0.0;
};

/// SEIZ wins only with a strictly positive margin; ties go to BCKG.
inline Classification classify(const CompiledModel& seiz, const CompiledModel& bckg, const Epoch& e) {
  if (seiz.dims() != bckg.dims()) throw Error(ErrorCode::DimensionMismatch, "SEIZ and BCKG models differ in dimension");
  Classification c;
  c.log_likelihood_seiz = log_forward(seiz, e);
  c.log_likelihood_bckg = log_forward(bckg, e);
  c.margin = c.log_likelihood_seiz - c.log_likelihood_bckg;
  c.predicted = c.margin > 0.0 ? EventClass::SEIZ : EventClass::BCKG;
  return c;
}

inline Classification classify(const HmmModel& seiz, const HmmModel& bckg, const Epoch& e) {
  return classify(CompiledModel(seiz), CompiledModel(bckg), e);
}

}  // namespace mlab

#pragma once

// Baum-Welch training of left-to-right GMM-HMMs from a flat start, growing
// the mixtures by component splitting.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "montagelab/error.hpp"
#include "montagelab/hmm.hpp"
#include "montagelab/running_stats.hpp"

namespace mlab {

struct TrainConfig {
  std::size_t num_states = 3;
  /// Target Gaussians per state, reached by repeated splitting from one.
  std::size_t mixtures = 4;
  int max_iterations = 50;
  /// Stop a stage once the relative log-likelihood gain falls below this.
  double tolerance = 1e-5;
  /// Variance floor as a fraction of the global per-dimension variance.
  double variance_floor_scale = 1e-3;
  /// Split offset in standard deviations.
  double split_perturbation = 0.2;
  std::size_t min_epochs = 2;
  unsigned jobs = 1;
  std::uint64_t seed = 0;
};

struct TrainResult {
  HmmModel model;
  /// Total training log-likelihood before each re-estimation.
  std::vector<double> log_likelihood;
  /// Index into log_likelihood where each mixture stage begins.
  std::vector<std::size_t> stage_starts;
};

namespace detail {

/// Sufficient statistics gathered by one E-step.
struct EmAccumulator {
  std::size_t states = 0, dims = 0;
  std::vector<std::size_t> offsets;  // component offsets per state
  long double log_likelihood = 0.0L;
  std::vector<double> initial;       // S
  std::vector<double> trans;         // S*S
  std::vector<double> occ;           // per component
  std::vector<double> sum;           // per component * D
  std::vector<double> sum_sq;        // per component * D

  EmAccumulator(const CompiledModel& m) : states(m.num_states()), dims(m.dims()) {
    offsets.push_back(0);
    for (std::size_t i = 0; i < states; ++i) offsets.push_back(offsets.back() + m.num_components(i));
    initial.assign(states, 0.0);
    trans.assign(states * states, 0.0);
    occ.assign(offsets.back(), 0.0);
    sum.assign(offsets.back() * dims, 0.0);
    sum_sq.assign(offsets.back() * dims, 0.0);
  }

  void merge(const EmAccumulator& o) {
    log_likelihood += o.log_likelihood;
    for (std::size_t i = 0; i < initial.size(); ++i) initial[i] += o.initial[i];
    for (std::size_t i = 0; i < trans.size(); ++i) trans[i] += o.trans[i];
    for (std::size_t i = 0; i < occ.size(); ++i) occ[i] += o.occ[i];
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += o.sum[i];
    for (std::size_t i = 0; i < sum_sq.size(); ++i) sum_sq[i] += o.sum_sq[i];
  }
};

/// Forward-backward over one epoch, adding its expected counts to `acc`.
inline void accumulate_epoch(const CompiledModel& m, const Epoch& e, EmAccumulator& acc) {
  const std::size_t s = m.num_states();
  const std::size_t T = e.num_frames();
  const std::size_t D = m.dims();
  // Component log-likelihoods and state emissions.
  const std::size_t total_comp = acc.offsets.back();
  std::vector<double> comp(T * total_comp);
  std::vector<double> b(T * s);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < s; ++i) {
      double acc_b = kNegInf;
      for (std::size_t c = 0; c < m.num_components(i); ++c) {
        const double v = m.component_log_likelihood(i, c, e.frame(t));
        comp[t * total_comp + acc.offsets[i] + c] = v;
        acc_b = log_sum_exp(acc_b, v);
      }
      b[t * s + i] = acc_b;
    }
  }
  std::vector<double> alpha(T * s), beta(T * s, 0.0);
  for (std::size_t i = 0; i < s; ++i) alpha[i] = m.log_initial(i) + b[i];
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t j = 0; j < s; ++j) {
      double v = kNegInf;
      for (std::size_t i = 0; i < s; ++i) v = log_sum_exp(v, alpha[(t - 1) * s + i] + m.log_transition(i, j));
      alpha[t * s + j] = v + b[t * s + j];
    }
  }
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t i = 0; i < s; ++i) {
      double v = kNegInf;
      for (std::size_t j = 0; j < s; ++j) {
        v = log_sum_exp(v, m.log_transition(i, j) + b[(t + 1) * s + j] + beta[(t + 1) * s + j]);
      }
      beta[t * s + i] = v;
    }
  }
  const double ll = log_sum_exp(std::span<const double>(alpha.data() + (T - 1) * s, s));
  if (!std::isfinite(ll)) {
    throw Error(ErrorCode::NonFiniteLikelihood,
                "epoch " + e.recording_id + "/" + e.channel_label + " has non-finite likelihood; check variance floor");
  }
  acc.log_likelihood += ll;

  for (std::size_t i = 0; i < s; ++i) acc.initial[i] += std::exp(alpha[i] + beta[i] - ll);
  for (std::size_t t = 0; t < T; ++t) {
    const auto x = e.frame(t);
    for (std::size_t i = 0; i < s; ++i) {
      const double gamma = alpha[t * s + i] + beta[t * s + i] - ll;
      if (gamma == kNegInf) continue;
      for (std::size_t c = 0; c < m.num_components(i); ++c) {
        const std::size_t k = acc.offsets[i] + c;
        const double post = std::exp(gamma + comp[t * total_comp + k] - b[t * s + i]);
        if (post == 0.0) continue;
        acc.occ[k] += post;
        double* sx = &acc.sum[k * D];
        double* sxx = &acc.sum_sq[k * D];
        for (std::size_t d = 0; d < D; ++d) {
          sx[d] += post * x[d];
          sxx[d] += post * x[d] * x[d];
        }
      }
    }
    if (t + 1 == T) break;
    for (std::size_t i = 0; i < s; ++i) {
      for (std::size_t j = 0; j < s; ++j) {
        const double lt = m.log_transition(i, j);
        if (lt == kNegInf) continue;
        acc.trans[i * s + j] += std::exp(alpha[t * s + i] + lt + b[(t + 1) * s + j] + beta[(t + 1) * s + j] - ll);
      }
    }
  }
}

/// E-step over all epochs. Work is cut into fixed chunks whose partial sums
/// are merged in chunk order, so the result does not depend on `jobs`.
inline EmAccumulator expectation(const CompiledModel& m, std::span<const Epoch> epochs, unsigned jobs) {
  constexpr std::size_t kChunk = 64;
  const std::size_t chunks = (epochs.size() + kChunk - 1) / kChunk;
  std::vector<EmAccumulator> partial(chunks, EmAccumulator(m));
  std::vector<std::exception_ptr> errors(chunks);
  auto run_chunk = [&](std::size_t c) {
    try {
      const std::size_t end = std::min(epochs.size(), (c + 1) * kChunk);
      for (std::size_t i = c * kChunk; i < end; ++i) accumulate_epoch(m, epochs[i], partial[c]);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(chunks)));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < chunks; c = next++) run_chunk(c);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  EmAccumulator total(m);
  for (const auto& p : partial) total.merge(p);
  return total;
}

/// M-step. Components or states without occupancy keep their parameters.
inline void maximize(HmmModel& model, const EmAccumulator& acc, const std::vector<double>& floor) {
  const std::size_t s = model.num_states();
  const std::size_t D = model.dims;
  double init_total = 0.0;
  for (double v : acc.initial) init_total += v;
  if (init_total > 0.0) {
    for (std::size_t i = 0; i < s; ++i) model.initial[i] = acc.initial[i] / init_total;
  }
  for (std::size_t i = 0; i < s; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < s; ++j) row += acc.trans[i * s + j];
    if (row > 0.0) {
      for (std::size_t j = 0; j < s; ++j) model.transitions[i][j] = acc.trans[i * s + j] / row;
      model.exit[i] = 0.0;
    }
    Gmm& g = model.states[i];
    double state_occ = 0.0;
    for (std::size_t c = 0; c < g.size(); ++c) state_occ += acc.occ[acc.offsets[i] + c];
    if (!(state_occ > 0.0)) continue;
    for (std::size_t c = 0; c < g.size(); ++c) {
      const std::size_t k = acc.offsets[i] + c;
      const double occ = acc.occ[k];
      g.weights[c] = occ / state_occ;
      if (!(occ > 1e-10)) continue;
      auto& comp = g.components[c];
      for (std::size_t d = 0; d < D; ++d) {
        const double mu = acc.sum[k * D + d] / occ;
        const double var = acc.sum_sq[k * D + d] / occ - mu * mu;
        comp.mean[d] = mu;
        comp.var[d] = std::max(var, floor[d]);
      }
    }
  }
}

/// Splits the heaviest components until each state holds `target` of them.
inline void split_mixtures(HmmModel& model, std::size_t target, double perturbation) {
  for (auto& g : model.states) {
    while (g.size() < target) {
      const std::size_t n = std::min(g.size(), target - g.size());
      std::vector<std::size_t> order(g.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return g.weights[a] > g.weights[b]; });
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t c = order[k];
        DiagGaussian twin = g.components[c];
        for (std::size_t d = 0; d < twin.mean.size(); ++d) {
          const double off = perturbation * std::sqrt(twin.var[d]);
          g.components[c].mean[d] += off;
          twin.mean[d] -= off;
        }
        g.weights[c] *= 0.5;
        g.weights.push_back(g.weights[c]);
        g.components.push_back(std::move(twin));
      }
    }
  }
}

}  // namespace detail

/// Flat-start model: means from a uniform segmentation of every epoch across
/// the states, global variances, and self-loops matched to the average
/// epoch length.
inline HmmModel flat_start(std::span<const Epoch> epochs, EventClass cls, std::size_t num_states,
                           const std::vector<double>& global_var, const std::vector<double>& global_mean) {
  const std::size_t D = global_mean.size();
  std::vector<RunningStats> seg(num_states, RunningStats(D));
  double frames = 0.0;
  for (const auto& e : epochs) {
    const std::size_t T = e.num_frames();
    frames += static_cast<double>(T);
    for (std::size_t t = 0; t < T; ++t) seg[t * num_states / T].add(e.frame(t));
  }
  HmmModel m;
  m.class_tag = cls;
  m.dims = D;
  m.initial.assign(num_states, 0.0);
  m.initial[0] = 1.0;
  m.exit.assign(num_states, 0.0);
  m.transitions.assign(num_states, std::vector<double>(num_states, 0.0));
  const double per_state = frames / static_cast<double>(epochs.size()) / static_cast<double>(num_states);
  const double self = std::clamp(1.0 - 1.0 / std::max(per_state, 1.0), 0.1, 0.9);
  for (std::size_t i = 0; i < num_states; ++i) {
    if (i + 1 < num_states) {
      m.transitions[i][i] = self;
      m.transitions[i][i + 1] = 1.0 - self;
    } else {
      m.transitions[i][i] = 1.0;
    }
    Gmm g;
    g.weights = {1.0};
    g.components.push_back({seg[i].empty() ? global_mean : seg[i].means(), global_var});
    m.states.push_back(std::move(g));
  }
  return m;
}

/// Re-estimates `model` in place until convergence, appending the
/// pre-update log-likelihood of every iteration to `history`.
inline void baum_welch(HmmModel& model, std::span<const Epoch> epochs, const TrainConfig& cfg,
                       const std::vector<double>& floor, std::vector<double>& history) {
  double previous = kNegInf;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const CompiledModel compiled(model);
    const auto acc = detail::expectation(compiled, epochs, cfg.jobs);
    const double ll = static_cast<double>(acc.log_likelihood);
    if (!std::isfinite(ll)) throw Error(ErrorCode::NonFiniteLikelihood, "training log-likelihood is not finite");
    history.push_back(ll);
    if (previous != kNegInf && (ll - previous) <= cfg.tolerance * std::fabs(previous)) break;
    previous = ll;
    detail::maximize(model, acc, floor);
  }
}

/// Trains one class model from its epochs.
inline TrainResult train_with_history(std::span<const Epoch> epochs, EventClass cls, const TrainConfig& cfg) {
  if (epochs.size() < std::max<std::size_t>(cfg.min_epochs, 1)) {
    throw Error(ErrorCode::InsufficientData, std::to_string(epochs.size()) + " " + std::string(to_string(cls)) +
                                                 " epochs, need at least " + std::to_string(cfg.min_epochs));
  }
  if (cfg.num_states == 0 || cfg.mixtures == 0) throw Error(ErrorCode::InvalidConfig, "states and mixtures must be >= 1");
  const std::size_t D = epochs.front().dims;
  RunningStats global(D);
  for (const auto& e : epochs) {
    if (e.dims != D) throw Error(ErrorCode::DimensionMismatch, "training epochs differ in dimension");
    if (e.num_frames() == 0) throw Error(ErrorCode::InsufficientData, "training epoch has no frames");
    for (std::size_t t = 0; t < e.num_frames(); ++t) global.add(e.frame(t));
  }
  std::vector<double> floor(D), var = global.variances();
  for (std::size_t d = 0; d < D; ++d) {
    floor[d] = std::max(cfg.variance_floor_scale * var[d], 1e-12);
    var[d] = std::max(var[d], floor[d]);
  }

  TrainResult r;
  r.model = flat_start(epochs, cls, cfg.num_states, var, global.means());
  std::size_t components = 1;
  while (true) {
    r.stage_starts.push_back(r.log_likelihood.size());
    baum_welch(r.model, epochs, cfg, floor, r.log_likelihood);
    if (components >= cfg.mixtures) break;
    components = std::min(cfg.mixtures, components * 2);
    detail::split_mixtures(r.model, components, cfg.split_perturbation);
  }
  return r;
}

inline HmmModel train(std::span<const Epoch> epochs, EventClass cls, const TrainConfig& cfg = {}) {
  return train_with_history(epochs, cls, cfg).model;
}

}  // namespace mlab

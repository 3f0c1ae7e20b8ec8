// Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>

#include "cli_harness.hpp"
#include "oracles.hpp"

using namespace mlab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Records the first failure and keeps the worst observed value for the report.
struct Tracker {
  bool pass = true;
  std::string first_failure;
  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      first_failure = what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome finish(const Tracker& t, const std::string& summary) {
  return {t.pass, t.pass ? summary : t.first_failure};
}

// 1 -------------------------------------------------------------------------
Outcome edf_round_trip() {
  const auto t0 = Clock::now();
  Rng rng(1001);
  Tracker t;
  std::size_t files = 0;
  for (int channels = 1; channels <= 32; ++channels) {
    for (int records : {1, 2, 7, 33, 100}) {
      std::vector<oracle::EdfSignal> sigs;
      const int spr = 1 + static_cast<int>(rng.uniform(0.0, 32.0));
      for (int c = 0; c < channels; ++c) {
        oracle::EdfSignal s;
        s.label = "EEG CH" + std::to_string(c) + "-REF";
        s.phys_min = std::round(rng.uniform(-5000.0, -1.0));
        s.phys_max = std::round(rng.uniform(1.0, 5000.0));
        s.dig_min = -32768 + static_cast<int>(rng.uniform(0.0, 1000.0));
        s.dig_max = 32767 - static_cast<int>(rng.uniform(0.0, 1000.0));
        s.samples_per_record = spr;
        for (int k = 0; k < records * spr; ++k) {
          s.digital.push_back(s.dig_min + static_cast<int>(rng.uniform(0.0, 1.0) * (s.dig_max - s.dig_min + 1)));
        }
        sigs.push_back(std::move(s));
      }
      const auto bytes = oracle::build_edf(sigs, records, 1.0);
      const Recording a = parse_edf(bytes, "a");
      const std::string written = write_edf(a);
      const Recording b = parse_edf(written, "b");
      ++files;
      t.require(a.num_channels() == static_cast<std::size_t>(channels) && b.num_channels() == a.num_channels(),
                "channel count changed");
      t.require(written.size() == bytes.size(), "written file size differs");
      for (std::size_t c = 0; c < a.num_channels() && t.pass; ++c) {
        const auto& sa = a.channels()[c];
        const auto& sb = b.channels()[c];
        t.require(sa.label == sb.label, "label changed");
        t.require(sa.samples.size() == static_cast<std::size_t>(records * spr), "sample count wrong");
        t.require(sa.samples == sb.samples, "samples differ after round trip in " + sa.label);
        for (std::size_t k = 0; k < sa.samples.size() && t.pass; ++k) {
          const auto& s = sigs[c];
          t.require(sa.samples[k] == oracle::scale(s.digital[k], s.phys_min, s.phys_max, s.dig_min, s.dig_max) ||
                        std::fabs(sa.samples[k] - oracle::scale(s.digital[k], s.phys_min, s.phys_max, s.dig_min,
                                                                 s.dig_max)) <= 1e-9 * (s.phys_max - s.phys_min),
                    "parsed value disagrees with the scaling formula");
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  t.require(secs < 5.0, "runtime " + fmt("%.2f", secs) + " s exceeds 5 s");
  return finish(t, std::to_string(files) + " files, 1-32 channels, 1-100 records, " + fmt("%.2f", secs) + " s");
}

// 2 -------------------------------------------------------------------------
Outcome montage_algebra() {
  Rng rng(1002);
  Tracker t;
  double worst_sum = 0.0, worst_diff = 0.0;
  const auto tcp = tcp_montage();
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 50 + static_cast<std::size_t>(rng.uniform(0.0, 500.0));
    const auto rec = oracle::random_recording(oracle::standard_labels("-REF"), n, 250.0, rng, ReferenceScheme::AR);
    RereferenceOptions all;
    for (const auto& ch : rec.channels()) all.average_set.push_back(ch.label);
    const auto ar = rereference(rec, ReferenceScheme::AR, all);
    for (std::size_t k = 0; k < n; ++k) {
      double sum = 0.0;
      for (const auto& ch : ar.channels()) sum += ch.samples[k];
      worst_sum = std::max(worst_sum, std::fabs(sum));
    }
    const auto via_le = apply_montage(rereference(rec, ReferenceScheme::LE), tcp);
    const auto via_ar = apply_montage(rereference(rec, ReferenceScheme::AR), tcp);
    for (std::size_t c = 0; c < via_le.num_channels(); ++c)
      for (std::size_t k = 0; k < n; ++k)
        worst_diff = std::max(worst_diff, std::fabs(via_le.channels()[c].samples[k] - via_ar.channels()[c].samples[k]));
  }
  t.require(worst_sum <= 1e-9, "AR channel sum reached " + fmt("%.3g", worst_sum));
  t.require(worst_diff <= 1e-9, "LE-then-TCP vs AR-then-TCP differ by " + fmt("%.3g", worst_diff));
  return finish(t, "100 recordings, max |AR sum| " + fmt("%.2g", worst_sum) + ", max TCP difference " +
                       fmt("%.2g", worst_diff));
}

// 3 -------------------------------------------------------------------------
Outcome feature_contract() {
  Rng rng(1003);
  Tracker t;
  double worst_parseval = 0.0, worst_gain = 0.0;
  std::size_t vectors = 0;
  for (double fs : {100.0, 250.0, 256.0, 400.0, 512.0}) {
    for (int trial = 0; trial < 4; ++trial) {
      const std::size_t n = static_cast<std::size_t>(fs * rng.uniform(1.0, 12.0));
      std::vector<ChannelSignal> ch(2);
      ch[0].label = "A";
      ch[1].label = "B";
      for (std::size_t i = 0; i < n; ++i) {
        ch[0].samples.push_back(30.0 * rng.normal());
        ch[1].samples.push_back(20.0 * std::sin(0.05 * static_cast<double>(i)) + rng.normal());
      }
      const Recording rec("r", fs, ch);
      const FeatureConfig cfg;
      const auto seqs = extract(rec, cfg);
      for (const auto& s : seqs) {
        t.require(s.dims == 26, "vector is not 26-dimensional");
        t.require(s.num_frames() == frame_count(n, fs, cfg), "frame count differs from the formula");
        for (double v : s.values) t.require(std::isfinite(v), "non-finite feature value");
        vectors += s.num_frames();
      }

      // Parseval on every analysis frame.
      const FrameAnalyzer fa(fs, cfg);
      const std::size_t len = fa.window_length(), step = frame_step(fs, cfg);
      for (std::size_t start = 0; start + len <= n; start += step) {
        const std::span<const double> frame(ch[0].samples.data() + start, len);
        const auto p = fa.power(frame);
        double energy = 0.0;
        for (std::size_t i = 0; i < len; ++i) energy += std::pow(frame[i] * fa.window()[i], 2);
        double total = 0.0;
        for (double v : p) total += v;
        worst_parseval = std::max(worst_parseval, std::fabs(total - energy) / energy);
      }

      // Gain: Ef moves by 2 ln g, everything else stays.
      const double g = std::exp(rng.uniform(-4.0, 4.0));
      auto scaled = ch;
      for (auto& c : scaled)
        for (double& v : c.samples) v *= g;
      const auto base = extract(rec, cfg);
      const auto gained = extract(Recording("r", fs, scaled), cfg);
      for (std::size_t c = 0; c < base.size(); ++c)
        for (std::size_t f = 0; f < base[c].num_frames(); ++f)
          for (std::size_t j = 0; j < 26; ++j) {
            const double expect = base[c].at(f, j) + (j == 0 ? 2.0 * std::log(g) : 0.0);
            worst_gain = std::max(worst_gain, std::fabs(gained[c].at(f, j) - expect));
          }
    }
  }
  t.require(worst_parseval <= 1e-6, "Parseval error " + fmt("%.3g", worst_parseval));
  t.require(worst_gain <= 1e-9, "gain error " + fmt("%.3g", worst_gain));

  // Frame-count formula against direct enumeration of frame starts.
  for (int i = 0; i < 1000; ++i) {
    const double fs = std::round(rng.uniform(20.0, 2000.0));
    FeatureConfig cfg;
    const std::size_t len = static_cast<std::size_t>(std::llround(cfg.window_s * fs));
    const std::size_t step = static_cast<std::size_t>(std::llround(cfg.frame_s * fs));
    const std::size_t n = len + static_cast<std::size_t>(rng.uniform(0.0, 100000.0));
    std::size_t expected = 0;
    for (std::size_t s = 0; s + len <= n; s += step) ++expected;
    t.require(frame_count(n, fs, cfg) == expected, "frame count wrong at fs=" + fmt("%g", fs));
  }
  return finish(t, std::to_string(vectors) + " vectors finite, Parseval " + fmt("%.2g", worst_parseval) + ", gain " +
                       fmt("%.2g", worst_gain) + ", 1000 frame counts");
}

// 4 -------------------------------------------------------------------------
Outcome delta_oracle() {
  Rng rng(1004);
  Tracker t;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(rng.uniform(0.0, 200.0));
    const double slope = rng.uniform(-50.0, 50.0), offset = rng.uniform(-100.0, 100.0);
    const double level = rng.uniform(-100.0, 100.0);
    std::vector<double> ramp(n), flat(n, level);
    for (std::size_t i = 0; i < n; ++i) ramp[i] = offset + slope * static_cast<double>(i);
    const auto d = deltas(ramp, 2);
    for (std::size_t i = 2; i + 2 < n; ++i) worst = std::max(worst, std::fabs(d[i] - slope) / std::max(1.0, std::fabs(slope)));
    for (double v : deltas(flat, 2)) t.require(v == 0.0, "delta of a constant is " + fmt("%.3g", v));
  }
  t.require(worst <= 1e-12, "ramp delta error " + fmt("%.3g", worst));
  return finish(t, "200 ramps, interior slope error " + fmt("%.2g", worst) + ", constants exactly zero");
}

// 5 -------------------------------------------------------------------------
Outcome cmn() {
  Rng rng(1005);
  Tracker t;
  double worst_mean = 0.0, worst_idem = 0.0, worst_offset = 0.0;
  const NormalizationConfig cfg;
  for (int trial = 0; trial < 100; ++trial) {
    FeatureSequence s;
    const std::size_t frames = 1 + static_cast<std::size_t>(rng.uniform(0.0, 500.0));
    for (std::size_t i = 0; i < frames * kFeatureDims; ++i) s.values.push_back(rng.uniform(-40.0, 40.0) + 15.0);
    const auto once = normalize(s, cfg);
    const auto twice = normalize(once, cfg);
    auto shifted = s;
    std::vector<double> off(kFeatureDims);
    for (double& o : off) o = rng.uniform(-1000.0, 1000.0);
    for (std::size_t i = 0; i < shifted.values.size(); ++i) shifted.values[i] += off[i % kFeatureDims];
    const auto from_shifted = normalize(shifted, cfg);
    for (std::size_t j : cfg.apply_to) {
      double sum = 0.0;
      for (std::size_t f = 0; f < frames; ++f) sum += once.at(f, j);
      worst_mean = std::max(worst_mean, std::fabs(sum / static_cast<double>(frames)));
      for (std::size_t f = 0; f < frames; ++f) {
        worst_idem = std::max(worst_idem, std::fabs(twice.at(f, j) - once.at(f, j)));
        worst_offset = std::max(worst_offset, std::fabs(from_shifted.at(f, j) - once.at(f, j)));
      }
    }
  }
  t.require(worst_mean <= 1e-9, "post-CMN mean " + fmt("%.3g", worst_mean));
  t.require(worst_idem <= 1e-12, "idempotence error " + fmt("%.3g", worst_idem));
  t.require(worst_offset <= 1e-9, "offset removal error " + fmt("%.3g", worst_offset));
  return finish(t, "mean " + fmt("%.2g", worst_mean) + ", idempotence " + fmt("%.2g", worst_idem) + ", offset " +
                       fmt("%.2g", worst_offset));
}

// 6 -------------------------------------------------------------------------
Outcome statistics() {
  Rng rng(1006);
  Tracker t;
  const std::size_t n = 1000000, dims = 9;
  std::vector<std::vector<double>> rows(n, std::vector<double>(dims));
  for (auto& r : rows)
    for (std::size_t j = 0; j < dims; ++j) r[j] = 1e4 * static_cast<double>(j) + (1.0 + j) * rng.normal();

  RunningStats whole(dims);
  for (const auto& r : rows) whole.add(r);
  double worst = 0.0;
  for (std::size_t j = 0; j < dims; ++j) {
    const auto [mean, var] = oracle::two_pass(rows, j);
    worst = std::max({worst, oracle::rel_err(whole.mean(j), mean), oracle::rel_err(whole.variance(j), var)});
  }
  t.require(worst <= 1e-10, "streaming vs two-pass relative error " + fmt("%.3g", worst));

  // Eight uneven chunks merged left-to-right, as a balanced tree, and right-to-left.
  const std::vector<std::size_t> cuts = {0, 1, 1000, 77777, 250000, 250001, 600000, 999000, n};
  std::vector<RunningStats> parts;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    RunningStats s(dims);
    for (std::size_t i = cuts[p]; i < cuts[p + 1]; ++i) s.add(rows[i]);
    parts.push_back(s);
  }
  RunningStats left(dims);
  for (const auto& p : parts) left.merge(p);
  std::vector<RunningStats> level = parts;
  while (level.size() > 1) {
    std::vector<RunningStats> next;
    for (std::size_t i = 0; i < level.size(); i += 2) {
      RunningStats m = level[i];
      if (i + 1 < level.size()) m.merge(level[i + 1]);
      next.push_back(m);
    }
    level = next;
  }
  RunningStats right(dims);
  for (std::size_t p = parts.size(); p-- > 0;) {
    RunningStats m = parts[p];
    m.merge(right);
    right = m;
  }
  double worst_merge = 0.0;
  for (std::size_t j = 0; j < dims; ++j) {
    for (const auto* s : {&left, &level[0], &right}) {
      worst_merge = std::max({worst_merge, oracle::rel_err(s->mean(j), whole.mean(j)),
                              oracle::rel_err(s->variance(j), whole.variance(j))});
    }
  }
  t.require(left.count() == n && right.count() == n && level[0].count() == n, "merged count wrong");
  t.require(worst_merge <= 1e-10, "merge order changes the result by " + fmt("%.3g", worst_merge));
  return finish(t, "1e6 x 9 stream, relative error " + fmt("%.2g", worst) + ", merge orders agree to " +
                       fmt("%.2g", worst_merge));
}

// 7 -------------------------------------------------------------------------
Outcome pca_suite() {
  const auto t0 = Clock::now();
  Rng rng(1007);
  Tracker t;
  double worst_orth = 0.0, worst_recon = 0.0, worst_sum = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto m = oracle::random_psd(9, rng);
    const auto d = decompose_covariance(std::vector<double>(9, 0.0), m);
    for (std::size_t a = 0; a < 9; ++a)
      for (std::size_t b = 0; b < 9; ++b) {
        double dot = 0.0;
        for (std::size_t k = 0; k < 9; ++k) dot += d.eigenvectors[a][k] * d.eigenvectors[b][k];
        worst_orth = std::max(worst_orth, std::fabs(dot - (a == b ? 1.0 : 0.0)));
      }
    for (std::size_t i = 0; i < 9; ++i)
      for (std::size_t j = 0; j < 9; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < 9; ++k) s += d.eigenvalues[k] * d.eigenvectors[k][i] * d.eigenvectors[k][j];
        worst_recon = std::max(worst_recon, std::fabs(s - m(i, j)));
      }
    double total = 0.0;
    for (double e : d.explained) total += e;
    worst_sum = std::max(worst_sum, std::fabs(total - 1.0));
  }
  const double secs = seconds_since(t0);
  t.require(worst_orth <= 1e-8, "orthonormality error " + fmt("%.3g", worst_orth));
  t.require(worst_recon <= 1e-8, "reconstruction error " + fmt("%.3g", worst_recon));
  t.require(worst_sum <= 1e-9, "explained variance sums off by " + fmt("%.3g", worst_sum));
  t.require(secs < 10.0, "runtime " + fmt("%.2f", secs) + " s exceeds 10 s");
  return finish(t, "1000 matrices, orthonormality " + fmt("%.2g", worst_orth) + ", reconstruction " +
                       fmt("%.2g", worst_recon) + ", explained " + fmt("%.2g", worst_sum) + ", " + fmt("%.2f", secs) +
                       " s");
}

// 8 -------------------------------------------------------------------------
Outcome hmm_suite() {
  Rng rng(1008);
  Tracker t;
  double worst_fwd = 0.0, worst_vit = 0.0;
  int models = 0;
  for (std::size_t S = 1; S <= 4; ++S)
    for (std::size_t T = 1; T <= 6; ++T)
      for (int k = 0; k < 9 && models < 200; ++k, ++models) {
        const auto h = oracle::random_model(S, 1 + models % 4, 1 + models % 3, rng);
        const auto e = oracle::random_epoch(T, h.dims, rng);
        const auto bf = oracle::enumerate_paths(h, e);
        const auto v = viterbi(h, e);
        worst_fwd = std::max(worst_fwd, std::fabs(log_forward(h, e) - bf.log_total));
        worst_vit = std::max(worst_vit, std::fabs(v.log_score - bf.best));
        t.require(v.path == bf.best_path, "Viterbi path differs from brute force");
      }
  while (models < 200) {
    const auto h = oracle::random_model(4, 2, 2, rng);
    const auto e = oracle::random_epoch(6, 2, rng);
    const auto bf = oracle::enumerate_paths(h, e);
    worst_fwd = std::max(worst_fwd, std::fabs(log_forward(h, e) - bf.log_total));
    worst_vit = std::max(worst_vit, std::fabs(viterbi(h, e).log_score - bf.best));
    ++models;
  }
  t.require(worst_fwd <= 1e-10, "forward differs from brute force by " + fmt("%.3g", worst_fwd));
  t.require(worst_vit <= 1e-10, "Viterbi differs from brute force by " + fmt("%.3g", worst_vit));

  // EM monotonicity: every re-estimation step within a mixture stage.
  double worst_drop = 0.0;
  std::size_t iterations = 0;
  for (int run = 0; run < 50; ++run) {
    const std::size_t S = 1 + run % 4, D = 1 + run % 5;
    auto truth = oracle::random_model(S, D, 1 + run % 3, rng);
    std::vector<Epoch> data;
    for (int i = 0; i < 20; ++i) data.push_back(sample_epoch(truth, 5 + (i % 11), rng).first);
    TrainConfig cfg;
    cfg.num_states = 1 + (run / 4) % 4;
    cfg.mixtures = 1 + run % 4;
    cfg.max_iterations = 30;
    cfg.tolerance = 0.0;
    cfg.jobs = 1 + run % 3;
    const auto r = train_with_history(data, EventClass::SEIZ, cfg);
    for (std::size_t k = 0; k < r.stage_starts.size(); ++k) {
      const std::size_t lo = r.stage_starts[k];
      const std::size_t hi = k + 1 < r.stage_starts.size() ? r.stage_starts[k + 1] : r.log_likelihood.size();
      for (std::size_t i = lo + 1; i < hi; ++i) {
        worst_drop = std::min(worst_drop, r.log_likelihood[i] - r.log_likelihood[i - 1]);
        ++iterations;
      }
    }
  }
  t.require(worst_drop >= -1e-8, "EM log-likelihood fell by " + fmt("%.3g", -worst_drop));
  return finish(t, "200 models, forward " + fmt("%.2g", worst_fwd) + ", Viterbi " + fmt("%.2g", worst_vit) +
                       "; 50 runs, " + std::to_string(iterations) + " EM steps, worst step " + fmt("%.2g", worst_drop));
}

// 9 -------------------------------------------------------------------------
MatrixResult run_recipe(const std::string& name) {
  auto cfg = load_experiment_config(fs::path(MONTAGELAB_RECIPES) / name);
  cfg.matrix.train.jobs = std::max(1u, std::thread::hardware_concurrency());
  const auto corpus = build_synthetic_corpus(cfg.synth, cfg.pipeline, cfg.seed);
  return run_matrix(corpus, cfg.matrix);
}

Outcome synthetic_experiment() {
  const auto t0 = Clock::now();
  Tracker t;
  const auto bias = run_recipe("synthetic_bias.ini");
  const auto& g = bias.grid;
  const double matched = std::min(g.rate(0, 0), g.rate(1, 1));
  const double mismatched = std::max(g.rate(0, 1), g.rate(1, 0));
  const double gap = 100.0 * (matched - mismatched);
  t.require(gap >= 5.0, "matched minus mismatched is only " + fmt("%.2f", gap) + " pp");

  const auto nobias = run_recipe("synthetic_nobias.ini");
  const double z = oracle::worst_cell_deviation(nobias.grid);
  double lowest = 1.0;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) lowest = std::min(lowest, nobias.grid.rate(r, c));
  t.require(z <= 3.0, "zero-bias cell deviates by " + fmt("%.2f", z) + " sigma");
  t.require(lowest >= 0.95, "zero-bias detection rate " + fmt("%.2f", 100.0 * lowest) + "%");
  const double secs = seconds_since(t0);
  t.require(secs < 300.0, "runtime " + fmt("%.0f", secs) + " s exceeds 5 minutes");
  return finish(t, "bias gap " + fmt("%.1f", gap) + " pp (matched " + fmt("%.1f", 100.0 * matched) +
                       "%, mismatched " + fmt("%.1f", 100.0 * mismatched) + "%); zero bias worst " + fmt("%.2f", z) +
                       " sigma, lowest " + fmt("%.1f", 100.0 * lowest) + "%; " + fmt("%.0f", secs) + " s");
}

// 10 ------------------------------------------------------------------------
Outcome det_suite() {
  Rng rng(1010);
  Tracker t;
  auto monotone = [&](const DetCurve& c) {
    const auto pts = c.sorted_by_false_alarm();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      t.require(pts[i].p_fa >= 0.0 && pts[i].p_fa <= 1.0 && pts[i].p_miss >= 0.0 && pts[i].p_miss <= 1.0,
                "rate outside [0, 1]");
      if (i > 0) t.require(pts[i].p_miss <= pts[i - 1].p_miss, "miss rate rises with false alarms");
    }
  };
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ScoredEpoch> s;
    const double shift = rng.uniform(-2.0, 2.0);
    const int n = 2 + static_cast<int>(rng.uniform(0.0, 300.0));
    for (int i = 0; i < n; ++i) {
      const bool seiz = i < 1 || (i > 1 && rng.uniform() < 0.5);
      double m = rng.normal() + (seiz ? shift : 0.0);
      if (trial % 3 == 0) m = std::round(m * 2.0);  // plenty of ties
      s.push_back({seiz ? EventClass::SEIZ : EventClass::BCKG, m});
    }
    monotone(det_curve(s));
  }

  std::vector<ScoredEpoch> separated;
  for (int i = 0; i < 50; ++i) {
    separated.push_back({EventClass::SEIZ, 1.0 + rng.uniform()});
    separated.push_back({EventClass::BCKG, -1.0 - rng.uniform()});
  }
  const auto sep = det_curve(separated);
  monotone(sep);
  bool origin = false;
  for (const auto& p : sep.points) origin = origin || (p.p_fa == 0.0 && p.p_miss == 0.0);
  t.require(origin, "perfect separation does not reach (0, 0)");

  std::vector<ScoredEpoch> flat = {{EventClass::SEIZ, 0.3}, {EventClass::BCKG, 0.3}, {EventClass::BCKG, 0.3}};
  const auto two = det_curve(flat);
  t.require(two.points.size() == 2 && two.points[0].p_fa == 1.0 && two.points[0].p_miss == 0.0 &&
                two.points[1].p_fa == 0.0 && two.points[1].p_miss == 1.0,
            "equal margins do not give {(1,0),(0,1)}");
  return finish(t, "200 random curves monotone, separation touches (0,0), two-point degenerate curve");
}

// 11 ------------------------------------------------------------------------
Outcome cli_determinism() {
  Tracker t;
  cli::Workspace ws;
  const auto a_fail = cli::run_chain(ws.root / "a", "--seed 21");
  const auto b_fail = cli::run_chain(ws.root / "b", "--seed 21");
  const auto c_fail = cli::run_chain(ws.root / "c", "--seed 21 --jobs 4");
  t.require(a_fail.empty() && b_fail.empty() && c_fail.empty(), "command failed: " + a_fail + b_fail + c_fail);
  std::size_t files = 0;
  if (t.pass) {
    const auto a = cli::snapshot(ws.root / "a");
    files = a.size();
    for (const char* other : {"b", "c"}) {
      const auto b = cli::snapshot(ws.root / other);
      t.require(a.size() == b.size(), "runs wrote different file sets");
      for (const auto& [name, bytes] : a) {
        t.require(b.count(name) && b.at(name) == bytes, name + " differs between runs");
      }
    }
  }
  return finish(t, "synth, features, stats, pca, train, classify, det, experiment: " + std::to_string(files) +
                       " files identical across 3 runs (jobs 1 and 4)");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"EDF round-trip", edf_round_trip},
      {"montage algebra", montage_algebra},
      {"feature contract", feature_contract},
      {"delta oracle", delta_oracle},
      {"CMN", cmn},
      {"streaming statistics", statistics},
      {"PCA", pca_suite},
      {"HMM", hmm_suite},
      {"synthetic mismatch experiment", synthetic_experiment},
      {"DET curves", det_suite},
      {"CLI determinism", cli_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

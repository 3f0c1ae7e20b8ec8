#include <catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace mlab;
using Catch::Approx;

namespace {

std::vector<double> noise(std::size_t n, Rng& rng, double sd = 10.0) {
  std::vector<double> x(n);
  for (double& v : x) v = sd * rng.normal();
  return x;
}

std::vector<FeatureSequence> run(const std::vector<double>& x, double fs, const FeatureConfig& cfg = {}) {
  ChannelSignal c;
  c.label = "C3";
  c.samples = x;
  return extract(Recording("r", fs, {c}), cfg);
}

}  // namespace

TEST_CASE("frame count") {
  FeatureConfig cfg;
  CHECK(frame_count(2500, 250.0, cfg) == 99);
  CHECK(frame_count(50, 250.0, cfg) == 1);
  CHECK(frame_count(74, 250.0, cfg) == 1);
  CHECK(frame_count(75, 250.0, cfg) == 2);
  CHECK_THROWS_AS(frame_count(49, 250.0, cfg), Error);
  CHECK_THROWS_AS(frame_count(100, 4.0, cfg), Error);

  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const double fs = std::round(rng.uniform(20.0, 1000.0));
    const std::size_t len = static_cast<std::size_t>(std::llround(0.2 * fs));
    const std::size_t step = static_cast<std::size_t>(std::llround(0.1 * fs));
    const std::size_t n = len + static_cast<std::size_t>(rng.uniform(0.0, 5000.0));
    // Count frame starts directly.
    std::size_t expected = 0;
    for (std::size_t s = 0; s + len <= n; s += step) ++expected;
    REQUIRE(frame_count(n, fs, cfg) == expected);
  }
}

TEST_CASE("windows") {
  const auto hann = dsp::make_window(dsp::WindowType::Hann, 5);
  CHECK(hann[0] == Approx(0.0).margin(1e-15));
  CHECK(hann[2] == Approx(1.0));
  CHECK(hann[1] == Approx(0.5));
  CHECK(hann[4] == Approx(0.0).margin(1e-15));
  const auto hamming = dsp::make_window(dsp::WindowType::Hamming, 5);
  CHECK(hamming[0] == Approx(0.08));
  CHECK(hamming[2] == Approx(1.0));
  for (double v : dsp::make_window(dsp::WindowType::Rectangular, 7)) CHECK(v == 1.0);
}

TEST_CASE("power spectrum matches a direct DFT and satisfies Parseval") {
  Rng rng(11);
  for (std::size_t n : {1u, 2u, 7u, 8u, 50u, 51u, 64u}) {
    const auto x = noise(n, rng);
    dsp::PowerSpectrum ps(n);
    std::vector<double> p(ps.bins());
    ps.compute(x, p);
    const auto ref = oracle::periodogram(x);
    double energy = 0.0;
    for (double v : x) energy += v * v;
    double total = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
      REQUIRE(p[k] == Approx((edge ? 1.0 : 2.0) * ref[k] / static_cast<double>(n)).epsilon(1e-9).margin(1e-9));
      total += p[k];
    }
    REQUIRE(std::fabs(total - energy) <= 1e-6 * energy);
  }
}

TEST_CASE("sine energy lands in the expected bin") {
  const double fs = 250.0;
  const std::size_t n = 50;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2.0 * std::numbers::pi * 25.0 * static_cast<double>(i) / fs);
  dsp::PowerSpectrum ps(n);
  std::vector<double> p(ps.bins());
  ps.compute(x, p);
  const auto peak = std::max_element(p.begin(), p.end()) - p.begin();
  CHECK(peak == 5);
}

TEST_CASE("filterbank shape") {
  dsp::Filterbank fb(8, 50, 250.0, dsp::FilterSpacing::Linear);
  REQUIRE(fb.size() == 8);
  // Interior bins sit under at most two filters whose weights sum to one.
  for (std::size_t k = 1; k < 25; ++k) {
    double s = 0.0;
    for (std::size_t m = 0; m < 8; ++m) {
      CHECK(fb.weight(m, k) >= 0.0);
      CHECK(fb.weight(m, k) <= 1.0);
      s += fb.weight(m, k);
    }
    if (static_cast<double>(k) * 5.0 > 125.0 / 9.0 && static_cast<double>(k) * 5.0 < 125.0 * 8.0 / 9.0) {
      CHECK(s == Approx(1.0));
    }
  }
  dsp::Filterbank mel(8, 50, 250.0, dsp::FilterSpacing::Mel);
  CHECK(mel.size() == 8);
  CHECK(dsp::mel_to_hz(dsp::hz_to_mel(123.0)) == Approx(123.0));
}

TEST_CASE("DCT-II is orthonormal") {
  const std::size_t m = 8;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        std::vector<double> e(m, 0.0);
        e[i] = 1.0;
        dot += dsp::dct2(e, a) * dsp::dct2(e, b);
      }
      REQUIRE(dot == Approx(a == b ? 1.0 : 0.0).margin(1e-12));
    }
  const std::vector<double> flat(m, 3.0);
  CHECK(dsp::dct2(flat, 0) == Approx(3.0 * std::sqrt(8.0)));
  for (std::size_t j = 1; j < m; ++j) CHECK(std::fabs(dsp::dct2(flat, j)) <= 1e-12);
}

TEST_CASE("frame energy is the log of the windowed energy") {
  Rng rng(13);
  const FeatureConfig cfg;
  const auto x = noise(50, rng);
  const auto f = base_features(x, 250.0, cfg);
  REQUIRE(f.size() == 8);
  const auto w = dsp::make_window(dsp::WindowType::Hann, 50);
  double e = 0.0;
  for (std::size_t i = 0; i < 50; ++i) e += (x[i] * w[i]) * (x[i] * w[i]);
  CHECK(f[0] == Approx(std::log(e)).epsilon(1e-10));
  CHECK_THROWS_AS(base_features(std::vector<double>(49, 1.0), 250.0, cfg), Error);
}

TEST_CASE("silence is floored, not infinite") {
  const auto f = base_features(std::vector<double>(50, 0.0), 250.0);
  CHECK(f[0] == Approx(std::log(1e-10)));
  for (double v : f) CHECK(std::isfinite(v));
}

TEST_CASE("differential energy") {
  const std::vector<double> track = {0, 5, 1, 2, 9, 3, 3, 3, 3, 3, 3, -1};
  CHECK(differential_energy(track, 0, 4) == 9.0);
  CHECK(differential_energy(track, 4, 4) == 9.0);
  CHECK(differential_energy(track, 9, 4) == 4.0);
  CHECK(differential_energy(track, 6, 0) == 0.0);
  CHECK(differential_energy(track, 8, 1) == 0.0);
  const std::vector<double> flat(20, 1.5);
  for (std::size_t t = 0; t < flat.size(); ++t) CHECK(differential_energy(flat, t, 4) == 0.0);
}

TEST_CASE("deltas of a ramp and a constant") {
  std::vector<double> ramp(20), constant(20, -4.2);
  for (std::size_t t = 0; t < ramp.size(); ++t) ramp[t] = 3.0 * static_cast<double>(t) + 1.0;
  const auto d = deltas(ramp, 2);
  for (std::size_t t = 2; t + 2 < ramp.size(); ++t) REQUIRE(std::fabs(d[t] - 3.0) <= 1e-12);
  // Clamped edges see a shortened ramp.
  CHECK(d[0] == Approx((1 * 3.0 + 2 * 6.0) / 10.0));
  for (double v : deltas(constant, 2)) REQUIRE(std::fabs(v) <= 1e-12);
  CHECK_THROWS_AS(deltas(ramp, 0), Error);
  CHECK(deltas(std::vector<double>{7.0}, 2) == std::vector<double>{0.0});
}

TEST_CASE("feature vector layout") {
  const FeatureLayout layout;
  CHECK(layout.dims() == kFeatureDims);
  CHECK(layout.base_dims() == kBaseFeatureDims);
  const auto names = layout.names();
  REQUIRE(names.size() == 26);
  CHECK(names[0] == "Ef");
  CHECK(names[7] == "c7");
  CHECK(names[8] == "Ed");
  CHECK(names[9] == "dEf");
  CHECK(names[17] == "dEd");
  CHECK(names[18] == "ddEf");
  CHECK(names[25] == "ddc7");
}

TEST_CASE("extracted features are finite and 26-dimensional") {
  Rng rng(17);
  const auto x = noise(2500, rng);
  const auto seqs = run(x, 250.0);
  REQUIRE(seqs.size() == 1);
  const auto& s = seqs[0];
  CHECK(s.dims == 26);
  CHECK(s.num_frames() == 99);
  CHECK(s.channel_label == "C3");
  for (double v : s.values) REQUIRE(std::isfinite(v));

  // Columns agree with the building blocks.
  const FeatureConfig cfg;
  std::vector<double> ef(s.num_frames());
  for (std::size_t t = 0; t < s.num_frames(); ++t) {
    const auto f = base_features(std::span<const double>(x).subspan(t * 25, 50), 250.0, cfg);
    for (std::size_t j = 0; j < 8; ++j) REQUIRE(s.at(t, j) == Approx(f[j]).epsilon(1e-12));
    ef[t] = f[0];
  }
  const auto d = deltas(ef, 2);
  const auto dd = deltas(d, 2);
  for (std::size_t t = 0; t < s.num_frames(); ++t) {
    REQUIRE(s.at(t, 8) == Approx(differential_energy(ef, t, 4)));
    REQUIRE(s.at(t, 9) == Approx(d[t]).margin(1e-12));
    REQUIRE(s.at(t, 18) == Approx(dd[t]).margin(1e-12));
  }
}

TEST_CASE("scaling the signal shifts only the frame energy") {
  Rng rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = noise(1000, rng);
    const double a = std::exp(rng.uniform(-3.0, 3.0));
    auto y = x;
    for (double& v : y) v *= a;
    const auto fx = run(x, 250.0)[0];
    const auto fy = run(y, 250.0)[0];
    for (std::size_t t = 0; t < fx.num_frames(); ++t) {
      REQUIRE(std::fabs(fy.at(t, 0) - fx.at(t, 0) - 2.0 * std::log(a)) <= 1e-9);
      for (std::size_t j = 1; j < 26; ++j) REQUIRE(std::fabs(fy.at(t, j) - fx.at(t, j)) <= 1e-9);
    }
  }
}

TEST_CASE("feature config validation") {
  FeatureConfig cfg;
  cfg.num_cepstra = 8;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.window_s = 0.05;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.delta_halfwidth = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.energy_floor = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);

  Rng rng(1);
  try {
    run(noise(40, rng), 250.0);
    FAIL("expected TooShort");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooShort);
  }
}

TEST_CASE("other cepstral orders change the layout") {
  FeatureConfig cfg;
  cfg.num_filters = 12;
  cfg.num_cepstra = 10;
  Rng rng(23);
  const auto s = run(noise(1000, rng), 250.0, cfg)[0];
  CHECK(s.dims == FeatureLayout{10}.dims());
  CHECK(s.dims == 2 * 12 + 11);
}

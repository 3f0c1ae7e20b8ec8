#include <catch_amalgamated.hpp>

#include <functional>

#include "oracles.hpp"

using namespace mlab;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an mlab::Error");
  return ErrorCode::IoError;
}

oracle::EdfSignal signal(const std::string& label, int spr, std::vector<int> digital) {
  oracle::EdfSignal s;
  s.label = label;
  s.samples_per_record = spr;
  s.digital = std::move(digital);
  return s;
}

}  // namespace

TEST_CASE("hand-built two-signal EDF parses to the written samples") {
  auto a = signal("EEG FP1-REF", 4, {-32768, -1, 0, 32767});
  auto b = signal("EEG FP2-REF", 4, {100, 200, -300, 400});
  b.phys_min = -500;
  b.phys_max = 500;
  b.dig_min = -2048;
  b.dig_max = 2047;
  const Recording rec = parse_edf(oracle::build_edf({a, b}, 1, 1.0), "hand");
  REQUIRE(rec.num_channels() == 2);
  REQUIRE(rec.num_samples() == 4);
  CHECK(rec.sample_rate_hz() == 4.0);
  CHECK(rec.id() == "hand");
  CHECK(rec.channels()[0].label == "EEG FP1-REF");
  CHECK(rec.channels()[0].unit == "uV");
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(rec.channels()[0].samples[k] == oracle::scale(a.digital[k], -100, 100, -32768, 32767));
    CHECK(rec.channels()[1].samples[k] == oracle::scale(b.digital[k], -500, 500, -2048, 2047));
  }
  CHECK(rec.reference_scheme() == ReferenceScheme::AR);
}

TEST_CASE("digital extremes map exactly onto the physical extremes") {
  CHECK(edf::digital_to_physical(-32768, {-100, 100}, {-32768, 32767}) == -100.0);
  CHECK(edf::digital_to_physical(32767, {-100, 100}, {-32768, 32767}) == 100.0);
  CHECK(edf::digital_to_physical(-2048, {-3.3, 7.1}, {-2048, 2047}) == -3.3);
  CHECK(edf::digital_to_physical(2047, {-3.3, 7.1}, {-2048, 2047}) == 7.1);
}

TEST_CASE("digital zero on a symmetric 16-bit range sits half an LSB above zero") {
  const double v = edf::digital_to_physical(0, {-100, 100}, {-32768, 32767});
  CHECK_THAT(v, WithinRel(oracle::scale(0, -100, 100, -32768, 32767), 1e-12));
  CHECK_THAT(v, WithinAbs(100.0 / 65535.0, 1e-12));
}

TEST_CASE("EDF header rejections") {
  const auto s = signal("EEG C3-REF", 2, {1, 2});
  SECTION("version other than 0") {
    CHECK(code_of([&] { parse_edf(oracle::build_edf({s}, 1, 1.0, "1")); }) == ErrorCode::MalformedHeader);
  }
  SECTION("truncated fixed header") {
    CHECK(code_of([&] { parse_edf(oracle::build_edf({s}, 1).substr(0, 100)); }) == ErrorCode::MalformedHeader);
  }
  SECTION("record count disagrees with the payload") {
    auto bytes = oracle::build_edf({s}, 1);
    bytes += "xx";
    CHECK(code_of([&] { parse_edf(bytes); }) == ErrorCode::InconsistentRecordCount);
  }
  SECTION("unknown record count is inferred from the file size") {
    auto two = signal("EEG C3-REF", 2, {1, 2, 3, 4});
    auto bytes = oracle::build_edf({two}, 2);
    bytes.replace(236, 8, oracle::pad("-1", 8));
    CHECK(parse_edf(bytes).num_samples() == 4);
  }
  SECTION("degenerate digital range") {
    auto bad = s;
    bad.dig_min = bad.dig_max = 5;
    CHECK(code_of([&] { parse_edf(oracle::build_edf({bad}, 1)); }) == ErrorCode::DegenerateScaling);
  }
  SECTION("channels at different rates") {
    auto fast = signal("EEG C4-REF", 4, {1, 2, 3, 4});
    CHECK(code_of([&] { parse_edf(oracle::build_edf({s, fast}, 1)); }) == ErrorCode::RateMismatch);
  }
  SECTION("non-numeric field") {
    auto bytes = oracle::build_edf({s}, 1);
    bytes.replace(256 + 16 + 80 + 8, 8, oracle::pad("abc", 8));
    CHECK(code_of([&] { parse_edf(bytes); }) == ErrorCode::MalformedHeader);
  }
}

TEST_CASE("annotation signals are dropped, even at another rate") {
  auto eeg = signal("EEG C3-LE", 2, {1, 2});
  auto ann = signal("EDF Annotations", 6, {0, 0, 0, 0, 0, 0});
  const Recording rec = parse_edf(oracle::build_edf({eeg, ann}, 1));
  REQUIRE(rec.num_channels() == 1);
  CHECK(rec.channels()[0].label == "EEG C3-LE");
  CHECK(rec.reference_scheme() == ReferenceScheme::LE);
}

TEST_CASE("EDF write then parse reproduces samples and header fields") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int ns = 1 + static_cast<int>(rng.uniform() * 8);
    const int records = 1 + static_cast<int>(rng.uniform() * 5);
    const int spr = 1 + static_cast<int>(rng.uniform() * 16);
    std::vector<oracle::EdfSignal> sigs;
    for (int c = 0; c < ns; ++c) {
      oracle::EdfSignal s;
      s.label = "EEG E" + std::to_string(c) + "-REF";
      s.samples_per_record = spr;
      s.phys_min = -std::floor(rng.uniform(1, 900));
      s.phys_max = std::floor(rng.uniform(1, 900));
      for (int k = 0; k < records * spr; ++k) s.digital.push_back(static_cast<int>(rng.uniform(-32768, 32768)));
      sigs.push_back(s);
    }
    const Recording first = parse_edf(oracle::build_edf(sigs, records));
    const Recording second = parse_edf(write_edf(first));
    REQUIRE(second.num_channels() == first.num_channels());
    CHECK(second.sample_rate_hz() == first.sample_rate_hz());
    for (int c = 0; c < ns; ++c) {
      CHECK(second.channels()[c].label == first.channels()[c].label);
      CHECK(second.channels()[c].samples == first.channels()[c].samples);
    }
  }
}

TEST_CASE("write_edf refuses sample counts that do not fill whole records") {
  Rng rng(1);
  const Recording rec = oracle::random_recording({"EEG C3-LE"}, 7, 2.0, rng);
  CHECK(code_of([&] { write_edf(rec); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("labels parse, sort and reject bad spans") {
  SECTION("two events") {
    const auto set = parse_labels("0.0 10.0 BCKG\n10.0 15.5 SEIZ");
    REQUIRE(set.events.size() == 2);
    CHECK(set.events[1].start_s == 10.0);
    CHECK(set.events[1].stop_s == 15.5);
    CHECK(set.events[1].cls == EventClass::SEIZ);
  }
  SECTION("comments, blanks and lower case") {
    const auto set = parse_labels("# header\n\n  5 6 seiz\n0 5 bckg\n");
    REQUIRE(set.events.size() == 2);
    CHECK(set.events[0].start_s == 0.0);
  }
  SECTION("reversed span") {
    CHECK(code_of([] { parse_labels("5.0 3.0 SEIZ"); }) == ErrorCode::NegativeSpanError);
  }
  SECTION("negative start") {
    CHECK(code_of([] { parse_labels("-1 3 SEIZ"); }) == ErrorCode::NegativeSpanError);
  }
  SECTION("overlap") {
    CHECK(code_of([] { parse_labels("0 10 BCKG\n9 12 SEIZ"); }) == ErrorCode::OverlapError);
  }
  SECTION("unknown class") {
    CHECK(code_of([] { parse_labels("0 1 SPSW"); }) == ErrorCode::UnknownClassError);
  }
  SECTION("malformed line") {
    CHECK(code_of([] { parse_labels("0 1"); }) == ErrorCode::ParseError);
  }
  SECTION("event past the end of the recording") {
    CHECK(code_of([] { parse_labels("0 12 BCKG").check_within(10.0); }) == ErrorCode::NegativeSpanError);
  }
}

TEST_CASE("labels survive format and parse") {
  const auto set = parse_labels("0 0.1 BCKG\n0.1 7.25 SEIZ\n9 10 BCKG");
  const auto again = parse_labels(format_labels(set));
  REQUIRE(again.events.size() == set.events.size());
  for (std::size_t i = 0; i < set.events.size(); ++i) {
    CHECK(again.events[i].start_s == set.events[i].start_s);
    CHECK(again.events[i].stop_s == set.events[i].stop_s);
    CHECK(again.events[i].cls == set.events[i].cls);
  }
}

TEST_CASE("majority labelling of a time span") {
  const auto set = parse_labels("0 10 BCKG\n10 15 SEIZ\n20 30 BCKG");
  CHECK(set.majority_class(9.0, 12.0) == EventClass::SEIZ);
  CHECK(set.majority_class(8.0, 11.0) == EventClass::BCKG);
  CHECK(set.majority_class(9.0, 11.0) == EventClass::BCKG);  // tie
  CHECK_FALSE(set.majority_class(16.0, 19.0).has_value());
}

TEST_CASE("reference scheme inferred from channel suffixes") {
  CHECK(infer_reference_scheme(std::vector<std::string>{"EEG FP1-LE", "EEG FP2-LE", "EKG1"}) == ReferenceScheme::LE);
  CHECK(infer_reference_scheme(std::vector<std::string>{"EEG FP1-REF", "EEG FP2-REF"}) == ReferenceScheme::AR);
  CHECK(infer_reference_scheme(std::vector<std::string>{"EEG FP1-LE", "EEG FP2-REF"}) == ReferenceScheme::UNKNOWN);
  CHECK(infer_reference_scheme(std::vector<std::string>{"FP1", "FP2"}) == ReferenceScheme::UNKNOWN);
}

TEST_CASE("electrode label matching") {
  CHECK(canonical_electrode("EEG Fp1-REF") == "FP1");
  CHECK(canonical_electrode(" eeg a1-le ") == "A1");
  CHECK(same_electrode("EEG CZ-LE", "cz"));
  CHECK(is_ear_electrode("EEG A2-REF"));
  CHECK_FALSE(is_eeg_electrode("EEG EKG1-REF"));
  CHECK_FALSE(is_eeg_electrode("PHOTIC-REF"));
  CHECK(is_eeg_electrode("EEG T3-REF"));
}

TEST_CASE("synthetic generation is a pure function of config and seed") {
  SynthConfig cfg;
  cfg.duration_s = 4;
  cfg.segment_s = 2;
  const auto [a, la] = generate_synthetic(cfg, 5);
  const auto [b, lb] = generate_synthetic(cfg, 5);
  const auto [c, lc] = generate_synthetic(cfg, 6);
  REQUIRE(a.num_channels() == 21);
  for (std::size_t i = 0; i < a.num_channels(); ++i) CHECK(a.channels()[i].samples == b.channels()[i].samples);
  CHECK(a.channels()[0].samples != c.channels()[0].samples);
  REQUIRE(la.events.size() == 2);
  CHECK(la.events[0].cls == EventClass::BCKG);
  CHECK(la.events[1].cls == EventClass::SEIZ);
}

TEST_CASE("without bias, LE and AR synthetic recordings differ only in tag") {
  SynthConfig le;
  le.duration_s = 4;
  SynthConfig ar = le;
  ar.scheme = ReferenceScheme::AR;
  const auto [x, lx] = generate_synthetic(le, 9);
  const auto [y, ly] = generate_synthetic(ar, 9);
  CHECK(x.reference_scheme() == ReferenceScheme::LE);
  CHECK(y.reference_scheme() == ReferenceScheme::AR);
  for (std::size_t i = 0; i < x.num_channels(); ++i) {
    CHECK(canonical_electrode(x.channels()[i].label) == canonical_electrode(y.channels()[i].label));
    CHECK(x.channels()[i].samples == y.channels()[i].samples);
  }
}

TEST_CASE("bias applies gain and offset pattern to AR output only") {
  SynthConfig le;
  le.duration_s = 2;
  le.bias = {3.0, 10.0};
  SynthConfig ar = le;
  ar.scheme = ReferenceScheme::AR;
  SynthConfig plain = le;
  plain.bias = {};
  const auto [x, lx] = generate_synthetic(le, 2);
  const auto [y, ly] = generate_synthetic(ar, 2);
  const auto [z, lz] = generate_synthetic(plain, 2);
  for (std::size_t c = 0; c < x.num_channels(); ++c) {
    CHECK(x.channels()[c].samples == z.channels()[c].samples);
    const double pattern = static_cast<double>(c % 3) - 1.0;
    for (std::size_t k = 0; k < x.num_samples(); k += 97) {
      CHECK_THAT(y.channels()[c].samples[k], WithinAbs(3.0 * x.channels()[c].samples[k] + 10.0 * pattern, 1e-9));
    }
  }
}

TEST_CASE("seizure segment spectrum peaks below 5 Hz") {
  SynthConfig cfg;
  cfg.duration_s = 20;
  const auto [rec, labels] = generate_synthetic(cfg, 3);
  const auto& seiz = labels.events[1];
  REQUIRE(seiz.cls == EventClass::SEIZ);
  const double fs = rec.sample_rate_hz();
  for (std::size_t c : {0u, 7u, 17u}) {
    const auto& s = rec.channels()[c].samples;
    std::vector<double> seg(s.begin() + static_cast<long>(seiz.start_s * fs), s.begin() + static_cast<long>(seiz.stop_s * fs));
    const auto p = oracle::periodogram(seg);
    std::size_t best = 1;
    for (std::size_t k = 1; k < p.size(); ++k) {
      if (p[k] > p[best]) best = k;
    }
    CHECK(static_cast<double>(best) * fs / static_cast<double>(seg.size()) < 5.0);
  }
}

TEST_CASE("synthetic config validation") {
  SynthConfig cfg;
  cfg.sample_rate_hz = 0;
  CHECK(code_of([&] { generate_synthetic(cfg, 1); }) == ErrorCode::InvalidConfig);
  cfg = {};
  cfg.duration_s = -1;
  CHECK(code_of([&] { generate_synthetic(cfg, 1); }) == ErrorCode::InvalidConfig);
  cfg = {};
  cfg.num_channels = 40;
  CHECK(code_of([&] { generate_synthetic(cfg, 1); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("synthetic recordings survive an EDF round trip within one LSB") {
  SynthConfig cfg;
  cfg.duration_s = 3;
  const auto [rec, labels] = generate_synthetic(cfg, 4);
  const Recording back = parse_edf(write_edf(rec));
  REQUIRE(back.num_channels() == rec.num_channels());
  for (std::size_t c = 0; c < rec.num_channels(); ++c) {
    const auto r = back.channels()[c].physical_range;
    const double lsb = (r.max - r.min) / 65535.0;
    for (std::size_t k = 0; k < rec.num_samples(); ++k) {
      REQUIRE(std::fabs(back.channels()[c].samples[k] - rec.channels()[c].samples[k]) <= lsb);
    }
  }
  CHECK(back.reference_scheme() == ReferenceScheme::LE);
}

TEST_CASE("Recording validation") {
  ChannelSignal a{"A", "uV", {1, 2, 3}};
  ChannelSignal b{"B", "uV", {1, 2}};
  CHECK(code_of([&] { Recording("r", 10, {a, b}); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([&] { Recording("r", 10, {a, a}); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([&] { Recording("r", 0, {a}); }) == ErrorCode::InvalidConfig);
}

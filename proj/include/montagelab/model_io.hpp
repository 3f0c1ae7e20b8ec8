#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "montagelab/error.hpp"
#include "montagelab/hmm.hpp"

namespace mlab {

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
  }
  void raw(std::string_view s) { out_ += s; }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view in) : in_(in) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(u);
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error(ErrorCode::ParseError, "model file truncated");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

inline void check_expected_dims(const HmmModel& m, std::optional<std::size_t> expected) {
  if (expected && m.dims != *expected) {
    throw Error(ErrorCode::DimensionMismatch, "model has " + std::to_string(m.dims) + " dims, expected " +
                                                  std::to_string(*expected));
  }
}

}  // namespace detail

/// Little-endian binary model: "HMM1", class, states, dims, initial,
/// transitions, exit, then per state the mixture count, weights, and each
/// component's means and variances; finally the length-prefixed metadata.
inline std::string model_to_binary(const HmmModel& m) {
  detail::ByteWriter w;
  w.raw("HMM1");
  w.u32(m.class_tag == EventClass::SEIZ ? 0u : 1u);
  w.u32(static_cast<std::uint32_t>(m.num_states()));
  w.u32(static_cast<std::uint32_t>(m.dims));
  for (double p : m.initial) w.f64(p);
  for (const auto& row : m.transitions)
    for (double p : row) w.f64(p);
  for (double p : m.exit) w.f64(p);
  for (const auto& g : m.states) {
    w.u32(static_cast<std::uint32_t>(g.size()));
    for (double x : g.weights) w.f64(x);
    for (const auto& c : g.components) {
      for (double x : c.mean) w.f64(x);
      for (double x : c.var) w.f64(x);
    }
  }
  w.u32(static_cast<std::uint32_t>(m.trained_on.size()));
  w.raw(m.trained_on);
  return w.take();
}

inline HmmModel model_from_binary(std::string_view bytes, std::optional<std::size_t> expected_dims = std::nullopt) {
  detail::ByteReader r(bytes);
  if (r.raw(4) != "HMM1") throw Error(ErrorCode::ParseError, "missing HMM1 magic");
  HmmModel m;
  const auto cls = r.u32();
  if (cls > 1) throw Error(ErrorCode::ParseError, "bad class tag in model file");
  m.class_tag = cls == 0 ? EventClass::SEIZ : EventClass::BCKG;
  const std::size_t s = r.u32();
  m.dims = r.u32();
  detail::check_expected_dims(m, expected_dims);
  if (s == 0 || s > 1024 || m.dims > 65536) throw Error(ErrorCode::ParseError, "implausible model size");
  m.initial.resize(s);
  for (auto& p : m.initial) p = r.f64();
  m.transitions.assign(s, std::vector<double>(s));
  for (auto& row : m.transitions)
    for (auto& p : row) p = r.f64();
  m.exit.resize(s);
  for (auto& p : m.exit) p = r.f64();
  for (std::size_t i = 0; i < s; ++i) {
    Gmm g;
    const std::size_t k = r.u32();
    if (k == 0 || k > 4096) throw Error(ErrorCode::ParseError, "implausible mixture size");
    g.weights.resize(k);
    for (auto& x : g.weights) x = r.f64();
    for (std::size_t c = 0; c < k; ++c) {
      DiagGaussian comp{std::vector<double>(m.dims), std::vector<double>(m.dims)};
      for (auto& x : comp.mean) x = r.f64();
      for (auto& x : comp.var) x = r.f64();
      g.components.push_back(std::move(comp));
    }
    m.states.push_back(std::move(g));
  }
  m.trained_on = r.raw(r.u32());
  if (!r.done()) throw Error(ErrorCode::ParseError, "trailing bytes after model");
  m.validate();
  return m;
}

inline nlohmann::json model_to_json(const HmmModel& m) {
  nlohmann::json j;
  j["format"] = "HMM1";
  j["class"] = std::string(to_string(m.class_tag));
  j["dims"] = m.dims;
  j["initial"] = m.initial;
  j["transitions"] = m.transitions;
  j["exit"] = m.exit;
  j["trained_on"] = m.trained_on;
  auto& states = j["states"] = nlohmann::json::array();
  for (const auto& g : m.states) {
    nlohmann::json s;
    s["weights"] = g.weights;
    auto& comps = s["components"] = nlohmann::json::array();
    for (const auto& c : g.components) comps.push_back({{"mean", c.mean}, {"var", c.var}});
    states.push_back(std::move(s));
  }
  return j;
}

inline HmmModel model_from_json(const nlohmann::json& j, std::optional<std::size_t> expected_dims = std::nullopt) {
  try {
    if (j.at("format").get<std::string>() != "HMM1") throw Error(ErrorCode::ParseError, "unknown model format");
    HmmModel m;
    const auto cls = parse_event_class(j.at("class").get<std::string>());
    if (!cls) throw Error(ErrorCode::ParseError, "bad class in model JSON");
    m.class_tag = *cls;
    m.dims = j.at("dims").get<std::size_t>();
    detail::check_expected_dims(m, expected_dims);
    m.initial = j.at("initial").get<std::vector<double>>();
    m.transitions = j.at("transitions").get<std::vector<std::vector<double>>>();
    m.exit = j.at("exit").get<std::vector<double>>();
    m.trained_on = j.value("trained_on", "");
    for (const auto& s : j.at("states")) {
      Gmm g;
      g.weights = s.at("weights").get<std::vector<double>>();
      for (const auto& c : s.at("components")) {
        g.components.push_back({c.at("mean").get<std::vector<double>>(), c.at("var").get<std::vector<double>>()});
      }
      m.states.push_back(std::move(g));
    }
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model JSON: ") + e.what());
  }
}

}  // namespace mlab

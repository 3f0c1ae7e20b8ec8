#pragma once

// Experiment recipes: a single "key = value" text file split into
// [sections]. Relative paths resolve against the file's directory.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "montagelab/edf.hpp"
#include "montagelab/error.hpp"
#include "montagelab/experiment.hpp"
#include "montagelab/montage.hpp"
#include "montagelab/pipeline.hpp"
#include "montagelab/recording.hpp"

namespace mlab {

struct ConfigEntry {
  std::string value;
  int line = 0;
};

/// Parsed "section.key" -> value, keeping line numbers for error messages.
class ConfigFile {
 public:
  static ConfigFile parse(std::string_view text, std::string source = "config") {
    ConfigFile cfg;
    cfg.source_ = std::move(source);
    std::istringstream in{std::string(text)};
    std::string raw, section;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto hash = raw.find_first_of("#;");
      const std::string line(trim(hash == std::string::npos ? raw : raw.substr(0, hash)));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']' || line.size() < 3) cfg.fail(line_no, "malformed section header '" + line + "'");
        section = std::string(trim(line.substr(1, line.size() - 2)));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) cfg.fail(line_no, "expected 'key = value', got '" + line + "'");
      const std::string key(trim(line.substr(0, eq)));
      if (key.empty()) cfg.fail(line_no, "empty key");
      const std::string full = section.empty() ? key : section + "." + key;
      if (cfg.entries_.count(full)) {
        cfg.fail(line_no, "duplicate key '" + full + "' (first set on line " +
                              std::to_string(cfg.entries_[full].line) + ")");
      }
      cfg.entries_[full] = ConfigEntry{std::string(trim(line.substr(eq + 1))), line_no};
    }
    return cfg;
  }

  const std::string& source() const { return source_; }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  const ConfigEntry* find(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    used_[key] = true;
    return &it->second;
  }

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw Error(ErrorCode::InvalidConfig, source_ + ":" + std::to_string(line) + ": " + msg);
  }

  std::string get_string(const std::string& key, std::string fallback) const {
    const auto* e = find(key);
    return e ? e->value : fallback;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto* e = find(key);
    if (!e) return fallback;
    double v = 0.0;
    const auto* end = e->value.data() + e->value.size();
    auto [ptr, ec] = std::from_chars(e->value.data(), end, v);
    if (ec != std::errc{} || ptr != end) fail(e->line, "'" + key + "' expects a number, got '" + e->value + "'");
    return v;
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    const auto* e = find(key);
    if (!e) return fallback;
    std::int64_t v = 0;
    const auto* end = e->value.data() + e->value.size();
    auto [ptr, ec] = std::from_chars(e->value.data(), end, v);
    if (ec != std::errc{} || ptr != end) fail(e->line, "'" + key + "' expects an integer, got '" + e->value + "'");
    return v;
  }

  std::size_t get_count(const std::string& key, std::size_t fallback, std::int64_t min = 0) const {
    const auto v = get_int(key, static_cast<std::int64_t>(fallback));
    if (v < min) fail(find(key)->line, "'" + key + "' must be at least " + std::to_string(min));
    return static_cast<std::size_t>(v);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto* e = find(key);
    if (!e) return fallback;
    const std::string u = to_upper(e->value);
    if (u == "TRUE" || u == "YES" || u == "ON" || u == "1") return true;
    if (u == "FALSE" || u == "NO" || u == "OFF" || u == "0") return false;
    fail(e->line, "'" + key + "' expects true/false, got '" + e->value + "'");
  }

  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> out;
    const auto* e = find(key);
    if (!e) return out;
    std::string item;
    std::istringstream in(e->value);
    while (std::getline(in, item, ',')) {
      item = std::string(trim(item));
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  int line_of(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  /// Rejects keys nothing asked for, which are almost always typos.
  void check_all_used() const {
    for (const auto& [key, entry] : entries_) {
      if (!used_.count(key)) fail(entry.line, "unknown key '" + key + "'");
    }
  }

 private:
  std::string source_;
  std::map<std::string, ConfigEntry> entries_;
  mutable std::map<std::string, bool> used_;
};

enum class CorpusSource { Synthetic, Files };

struct FileSplits {
  std::vector<std::filesystem::path> le_train, le_eval, ar_train, ar_eval;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  CorpusSource source = CorpusSource::Synthetic;
  SynthCorpusConfig synth;
  FileSplits files;
  PipelineConfig pipeline;
  MatrixConfig matrix;
  /// When set, the matrix also runs with this normalisation and the two
  /// grids are compared.
  std::optional<NormalizationConfig> normalized;
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline ReferenceScheme config_scheme(const ConfigFile& f, const std::string& key, const std::string& value) {
  const auto s = parse_reference_scheme(value);
  if (!s || *s == ReferenceScheme::UNKNOWN) {
    f.fail(f.line_of(key), "'" + key + "' must be LE, AR or CV, got '" + value + "'");
  }
  return *s;
}

}  // namespace detail

/// Reads the montage, feature and normalisation keys shared by every command.
inline PipelineConfig pipeline_from_config(const ConfigFile& f, const std::filesystem::path& base) {
  PipelineConfig p;
  const std::string ref = f.get_string("montage.reference", "none");
  if (to_upper(ref) != "NONE") p.reference = detail::config_scheme(f, "montage.reference", ref);
  const std::string ears = to_upper(f.get_string("montage.ears", "both"));
  if (ears == "BOTH") {
    p.reference_options.ears = EarMode::Both;
  } else if (ears == "LEFT" || ears == "A1") {
    p.reference_options.ears = EarMode::Left;
  } else if (ears == "RIGHT" || ears == "A2") {
    p.reference_options.ears = EarMode::Right;
  } else {
    f.fail(f.line_of("montage.ears"), "'montage.ears' must be both, left or right");
  }
  p.reference_options.average_set = f.get_list("montage.average_set");
  const std::string spec = f.get_string("montage.spec", "tcp");
  if (to_upper(spec) == "TCP") {
    p.montage = tcp_montage();
  } else if (to_upper(spec) != "NONE") {
    const auto path = detail::resolve(base, spec);
    if (!std::filesystem::exists(path)) f.fail(f.line_of("montage.spec"), "montage file not found: " + path.string());
    p.montage = parse_montage_spec(read_binary_file(path.string()), path.stem().string());
  }

  FeatureConfig& fc = p.features;
  fc.frame_s = f.get_double("features.frame_s", fc.frame_s);
  fc.window_s = f.get_double("features.window_s", fc.window_s);
  fc.num_filters = static_cast<int>(f.get_count("features.filters", static_cast<std::size_t>(fc.num_filters), 2));
  fc.num_cepstra = static_cast<int>(f.get_count("features.cepstra", static_cast<std::size_t>(fc.num_cepstra), 1));
  fc.delta_halfwidth = static_cast<int>(f.get_count("features.delta_halfwidth", 2, 1));
  fc.diff_energy_halfwidth = static_cast<int>(f.get_count("features.energy_halfwidth", 4, 0));
  fc.energy_floor = f.get_double("features.energy_floor", fc.energy_floor);
  const std::string spacing = to_upper(f.get_string("features.spacing", "linear"));
  if (spacing == "LINEAR") {
    fc.spacing = dsp::FilterSpacing::Linear;
  } else if (spacing == "MEL") {
    fc.spacing = dsp::FilterSpacing::Mel;
  } else {
    f.fail(f.line_of("features.spacing"), "'features.spacing' must be linear or mel");
  }
  const std::string window = to_upper(f.get_string("features.window", "hann"));
  if (window == "HANN") {
    fc.window = dsp::WindowType::Hann;
  } else if (window == "HAMMING") {
    fc.window = dsp::WindowType::Hamming;
  } else if (window == "RECTANGULAR") {
    fc.window = dsp::WindowType::Rectangular;
  } else {
    f.fail(f.line_of("features.window"), "'features.window' must be hann, hamming or rectangular");
  }
  try {
    fc.validate();
  } catch (const Error& e) {
    f.fail(f.line_of("features.frame_s"), e.what());
  }
  return p;
}

inline NormalizationConfig normalization_from_config(const ConfigFile& f, NormalizationMode mode) {
  NormalizationConfig n;
  n.mode = mode;
  const std::string scope = to_upper(f.get_string("normalize.scope", "channel"));
  if (scope == "CHANNEL") {
    n.scope = NormalizationScope::PER_RECORDING_PER_CHANNEL;
  } else if (scope == "RECORDING") {
    n.scope = NormalizationScope::PER_RECORDING_POOLED;
  } else {
    f.fail(f.line_of("normalize.scope"), "'normalize.scope' must be channel or recording");
  }
  FeatureLayout layout{static_cast<std::size_t>(f.get_count("features.cepstra", 7, 1))};
  n.apply_to = default_normalized_dims(layout);
  if (f.get_bool("normalize.include_ed", false)) {
    n.apply_to.push_back(layout.diff_energy());
    n.apply_to.push_back(layout.delta(layout.diff_energy()));
    std::sort(n.apply_to.begin(), n.apply_to.end());
  }
  return n;
}

inline ExperimentConfig experiment_from_config(const ConfigFile& f, const std::filesystem::path& base) {
  ExperimentConfig cfg;
  const auto seed = f.get_int("experiment.seed", 0);
  if (seed < 0) f.fail(f.line_of("experiment.seed"), "'experiment.seed' must be non-negative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.output_dir = detail::resolve(base, f.get_string("experiment.output", "out"));

  const std::string source = to_upper(f.get_string("corpus.source", "synthetic"));
  if (source == "SYNTHETIC") {
    cfg.source = CorpusSource::Synthetic;
  } else if (source == "FILES") {
    cfg.source = CorpusSource::Files;
  } else {
    f.fail(f.line_of("corpus.source"), "'corpus.source' must be synthetic or files");
  }

  SynthCorpusConfig& s = cfg.synth;
  s.train_records = f.get_count("synth.train_records", s.train_records, 1);
  s.eval_records = f.get_count("synth.eval_records", s.eval_records, 1);
  s.signal.num_channels = static_cast<int>(f.get_count("synth.channels", static_cast<std::size_t>(s.signal.num_channels), 1));
  s.signal.sample_rate_hz = f.get_double("synth.fs", s.signal.sample_rate_hz);
  s.signal.duration_s = f.get_double("synth.duration_s", s.signal.duration_s);
  s.signal.segment_s = f.get_double("synth.segment_s", s.signal.segment_s);
  s.signal.pink_amplitude = f.get_double("synth.background_amplitude", s.signal.pink_amplitude);
  s.signal.seizure_amplitude = f.get_double("synth.seizure_amplitude", s.signal.seizure_amplitude);
  s.signal.seizure_frequency_hz = f.get_double("synth.seizure_hz", s.signal.seizure_frequency_hz);
  s.signal.beta_amplitude = f.get_double("synth.beta_amplitude", s.signal.beta_amplitude);
  s.ar_bias.gain = f.get_double("synth.ar_gain", s.ar_bias.gain);
  s.ar_bias.offset = f.get_double("synth.ar_offset", s.ar_bias.offset);
  if (!(s.signal.sample_rate_hz > 0.0) || !(s.signal.duration_s > 0.0) || !(s.signal.segment_s > 0.0)) {
    f.fail(f.line_of("synth.fs"), "synthetic fs, duration_s and segment_s must be positive");
  }

  auto files = [&](const std::string& key, std::vector<std::filesystem::path>& out) {
    for (const auto& item : f.get_list(key)) {
      auto path = detail::resolve(base, item);
      if (!std::filesystem::exists(path)) f.fail(f.line_of(key), "file not found: " + path.string());
      out.push_back(std::move(path));
    }
  };
  files("corpus.le_train", cfg.files.le_train);
  files("corpus.le_eval", cfg.files.le_eval);
  files("corpus.ar_train", cfg.files.ar_train);
  files("corpus.ar_eval", cfg.files.ar_eval);
  if (cfg.source == CorpusSource::Files) {
    for (const auto* list : {&cfg.files.le_train, &cfg.files.le_eval, &cfg.files.ar_train, &cfg.files.ar_eval}) {
      if (list->empty()) f.fail(f.line_of("corpus.source"), "file corpus needs le_train, le_eval, ar_train and ar_eval");
    }
  }

  cfg.pipeline = pipeline_from_config(f, base);

  TrainConfig& t = cfg.matrix.train;
  t.num_states = f.get_count("train.states", t.num_states, 1);
  t.mixtures = f.get_count("train.mixtures", t.mixtures, 1);
  t.max_iterations = static_cast<int>(f.get_count("train.max_iterations", static_cast<std::size_t>(t.max_iterations), 1));
  t.tolerance = f.get_double("train.tolerance", t.tolerance);
  t.variance_floor_scale = f.get_double("train.variance_floor", t.variance_floor_scale);
  t.split_perturbation = f.get_double("train.split_perturbation", t.split_perturbation);
  t.min_epochs = f.get_count("train.min_epochs", t.min_epochs, 1);
  if (!(t.variance_floor_scale > 0.0)) f.fail(f.line_of("train.variance_floor"), "'train.variance_floor' must be positive");
  t.seed = cfg.seed;
  cfg.matrix.epoch.frames_per_epoch = f.get_count("epoch.frames", cfg.matrix.epoch.frames_per_epoch, 1);
  cfg.matrix.macro_average = f.get_bool("eval.macro", false);

  const auto mode_text = f.get_string("normalize.mode", "none");
  const auto mode = parse_normalization_mode(mode_text);
  if (!mode) f.fail(f.line_of("normalize.mode"), "'normalize.mode' must be none, cmn or cmvn");
  const bool compare = f.get_bool("normalize.compare", false);
  const NormalizationConfig ncfg = normalization_from_config(f, *mode);
  if (compare) {
    if (*mode == NormalizationMode::NONE) {
      f.fail(f.line_of("normalize.compare"), "'normalize.compare' needs normalize.mode cmn or cmvn");
    }
    cfg.normalized = ncfg;
  } else if (*mode != NormalizationMode::NONE) {
    cfg.matrix.normalize = ncfg;
  }
  f.check_all_used();
  return cfg;
}

inline ConfigFile load_config_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::IoError, "config file not found: " + path.string());
  return ConfigFile::parse(read_binary_file(path.string()), path.string());
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  const auto f = load_config_file(path);
  return experiment_from_config(f, path.parent_path());
}

}  // namespace mlab

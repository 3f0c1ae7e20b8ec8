// montage-lab: command-line front end for the montagelab library.
//
// Exit status: 0 success, 1 internal error, 2 input or validation error.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "montagelab/montagelab.hpp"

namespace fs = std::filesystem;
using namespace mlab;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

struct GlobalOptions {
  std::uint64_t seed = 0;
  bool seed_given = false;
  unsigned jobs = 1;
  std::string config;
};

/// Library error annotated with the file or channel it came from.
class ContextError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class F>
auto with_context(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw ContextError(where + ": " + e.what());
  }
}

/// Runs body(i) for i in [0, n) on up to `jobs` threads. Each index writes
/// only its own slot, so results do not depend on scheduling.
template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string read_text(const fs::path& p) { return read_binary_file(p.string()); }

void write_text(const fs::path& p, std::string_view text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_binary_file(p.string(), text);
}

std::string file_safe(std::string_view label) {
  std::string out;
  for (char c : label) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
    out += keep ? c : '_';
  }
  return out.empty() ? std::string("channel") : out;
}

std::optional<ReferenceScheme> scheme_flag(const std::string& value, bool allow_auto) {
  const std::string u = to_upper(value);
  if (allow_auto && u == "AUTO") return std::nullopt;
  const auto s = parse_reference_scheme(u);
  if (!s || *s == ReferenceScheme::UNKNOWN) throw Error(ErrorCode::InvalidConfig, "unknown reference scheme '" + value + "'");
  return s;
}

/// Montage, feature and normalisation settings: config file first, then any
/// explicit flags on top.
struct PipelineFlags {
  std::string montage;
  std::string ref;
  std::string ears;
  std::string normalize;
  std::string scope;

  void add(CLI::App* cmd) {
    cmd->add_option("--montage", montage, "Montage: tcp, none, or a montage file (LABEL: POS -- NEG per line)");
    cmd->add_option("--ref", ref, "Re-reference before the montage: le, ar, cv or none");
    cmd->add_option("--ears", ears, "Ears used for the LE reference: both, left, right");
    cmd->add_option("--normalize", normalize, "Feature normalisation: none, cmn, cmvn");
    cmd->add_option("--scope", scope, "Normalisation statistics: channel or recording");
  }

  PipelineConfig resolve(const GlobalOptions& g) const {
    ConfigFile file;
    fs::path base = ".";
    if (!g.config.empty()) {
      file = load_config_file(g.config);
      base = fs::path(g.config).parent_path();
    }
    PipelineConfig p = pipeline_from_config(file, base);
    const auto mode_text = file.get_string("normalize.mode", "none");
    auto mode = parse_normalization_mode(mode_text);
    if (!mode) throw Error(ErrorCode::InvalidConfig, "unknown normalisation '" + mode_text + "'");
    p.normalization = normalization_from_config(file, *mode);

    if (!montage.empty()) {
      const std::string u = to_upper(montage);
      if (u == "TCP") {
        p.montage = tcp_montage();
      } else if (u == "NONE") {
        p.montage.reset();
      } else {
        p.montage = with_context(montage, [&] { return parse_montage_spec(read_text(montage), fs::path(montage).stem().string()); });
      }
    }
    if (!ref.empty()) {
      if (to_upper(ref) == "NONE") {
        p.reference.reset();
      } else {
        p.reference = scheme_flag(ref, false);
      }
    }
    if (!ears.empty()) {
      const std::string u = to_upper(ears);
      if (u == "BOTH") p.reference_options.ears = EarMode::Both;
      else if (u == "LEFT") p.reference_options.ears = EarMode::Left;
      else if (u == "RIGHT") p.reference_options.ears = EarMode::Right;
      else throw Error(ErrorCode::InvalidConfig, "--ears must be both, left or right");
    }
    if (!normalize.empty()) {
      const auto m = parse_normalization_mode(normalize);
      if (!m) throw Error(ErrorCode::InvalidConfig, "--normalize must be none, cmn or cmvn");
      p.normalization.mode = *m;
    }
    if (!scope.empty()) {
      const std::string u = to_upper(scope);
      if (u == "CHANNEL") p.normalization.scope = NormalizationScope::PER_RECORDING_PER_CHANNEL;
      else if (u == "RECORDING") p.normalization.scope = NormalizationScope::PER_RECORDING_POOLED;
      else throw Error(ErrorCode::InvalidConfig, "--scope must be channel or recording");
    }
    return p;
  }
};

/// Loads an EDF and its sibling .lbl file when present.
struct LoadedRecording {
  Recording rec;
  std::optional<LabelSet> labels;
};

LoadedRecording load_recording(const fs::path& path, const std::optional<ReferenceScheme>& scheme) {
  return with_context(path.string(), [&] {
    LoadedRecording out{parse_edf(read_text(path), path.stem().string()), std::nullopt};
    if (scheme) out.rec = out.rec.with_scheme(*scheme);
    fs::path lbl = path;
    lbl.replace_extension(".lbl");
    if (fs::exists(lbl)) {
      out.labels = with_context(lbl.string(), [&] { return parse_labels(read_text(lbl), out.rec.id()); });
      out.labels->check_within(out.rec.duration_s());
    }
    return out;
  });
}

std::vector<FeatureSequence> pipeline_with_context(const Recording& rec, const PipelineConfig& p,
                                                   const std::string& where) {
  return with_context(where, [&] { return run_pipeline(rec, p); });
}

// ---------------------------------------------------------------------------
// Feature directories: one directory per recording holding one file per
// channel (.csv or .feat) and, optionally, labels.lbl.

constexpr const char* kLabelFile = "labels.lbl";

struct FeatureRecording {
  std::string id;
  fs::path dir;
  std::vector<FeatureSequence> channels;
  std::optional<LabelSet> labels;
};

bool is_feature_file(const fs::path& p) { return p.extension() == ".csv" || p.extension() == ".feat"; }

std::vector<fs::path> sorted_entries(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

FeatureRecording load_feature_dir(const fs::path& dir, double frame_s) {
  FeatureRecording r;
  r.dir = dir;
  r.id = dir.filename().string();
  for (const auto& p : sorted_entries(dir)) {
    if (!fs::is_regular_file(p) || !is_feature_file(p)) continue;
    const std::string label = p.stem().string();
    r.channels.push_back(with_context(p.string(), [&] {
      return p.extension() == ".csv" ? features_from_csv(read_text(p), label)
                                      : features_from_binary(read_text(p), label, frame_s);
    }));
  }
  const fs::path lbl = dir / kLabelFile;
  if (fs::exists(lbl)) r.labels = with_context(lbl.string(), [&] { return parse_labels(read_text(lbl), r.id); });
  return r;
}

/// Every recording directory under `roots`: a root holding feature files is
/// itself a recording, otherwise each of its subdirectories is.
std::vector<FeatureRecording> collect_feature_dirs(const std::vector<std::string>& roots, double frame_s) {
  std::vector<fs::path> dirs;
  for (const auto& root : roots) {
    if (!fs::is_directory(root)) throw Error(ErrorCode::IoError, "not a directory: " + root);
    const auto entries = sorted_entries(root);
    const bool direct = std::any_of(entries.begin(), entries.end(), [](const fs::path& p) {
      return fs::is_regular_file(p) && is_feature_file(p);
    });
    if (direct) {
      dirs.push_back(root);
      continue;
    }
    for (const auto& p : entries) {
      if (fs::is_directory(p)) dirs.push_back(p);
    }
  }
  std::vector<FeatureRecording> out;
  for (const auto& d : dirs) {
    auto r = load_feature_dir(d, frame_s);
    if (!r.channels.empty()) out.push_back(std::move(r));
  }
  return out;
}

std::vector<Epoch> feature_epochs(const std::vector<FeatureRecording>& recs, const EpochConfig& cfg) {
  std::vector<Epoch> out;
  for (const auto& r : recs) {
    if (!r.labels) throw Error(ErrorCode::EmptyInput, r.dir.string() + ": no " + kLabelFile + " next to the features");
    for (const auto& s : r.channels) {
      auto e = make_epochs(s, *r.labels, r.id, cfg);
      out.insert(out.end(), std::make_move_iterator(e.begin()), std::make_move_iterator(e.end()));
    }
  }
  return out;
}

TrainConfig train_config(const GlobalOptions& g, EpochConfig& epoch) {
  ConfigFile file;
  if (!g.config.empty()) file = load_config_file(g.config);
  TrainConfig t;
  t.num_states = file.get_count("train.states", t.num_states, 1);
  t.mixtures = file.get_count("train.mixtures", t.mixtures, 1);
  t.max_iterations = static_cast<int>(file.get_count("train.max_iterations", static_cast<std::size_t>(t.max_iterations), 1));
  t.tolerance = file.get_double("train.tolerance", t.tolerance);
  t.variance_floor_scale = file.get_double("train.variance_floor", t.variance_floor_scale);
  t.split_perturbation = file.get_double("train.split_perturbation", t.split_perturbation);
  t.min_epochs = file.get_count("train.min_epochs", t.min_epochs, 1);
  epoch.frames_per_epoch = file.get_count("epoch.frames", epoch.frames_per_epoch, 1);
  t.jobs = g.jobs;
  t.seed = g.seed;
  return t;
}

double config_frame_s(const GlobalOptions& g) {
  if (g.config.empty()) return FeatureConfig{}.frame_s;
  return load_config_file(g.config).get_double("features.frame_s", FeatureConfig{}.frame_s);
}

// ---------------------------------------------------------------------------
// features

struct FeaturesCmd {
  std::vector<std::string> inputs;
  std::string out = "features";
  std::string scheme = "auto";
  std::string format = "csv";
  PipelineFlags pipeline;

  void add(CLI::App& app, const GlobalOptions& g) {
    auto* cmd = app.add_subcommand("features", "Extract per-channel feature files from EDF recordings");
    cmd->add_option("inputs", inputs, "EDF files")->required();
    cmd->add_option("-o,--output", out, "Output directory; one subdirectory per recording");
    cmd->add_option("--scheme", scheme, "Reference scheme of the input: auto (from channel labels), le, ar, cv");
    cmd->add_option("--format", format, "Feature file format: csv or bin")->check(CLI::IsMember({"csv", "bin"}));
    pipeline.add(cmd);
    cmd->callback([this, &g] { run(g); });
  }

  void run(const GlobalOptions& g) {
    const PipelineConfig p = pipeline.resolve(g);
    const auto input_scheme = scheme_flag(scheme, true);
    std::vector<std::size_t> counts(inputs.size());
    parallel_for(inputs.size(), g.jobs, [&](std::size_t i) {
      const fs::path in = inputs[i];
      const auto loaded = load_recording(in, input_scheme);
      const auto seqs = pipeline_with_context(loaded.rec, p, in.string());
      const fs::path dir = fs::path(out) / in.stem();
      fs::create_directories(dir);
      for (const auto& s : seqs) {
        const std::string name = file_safe(s.channel_label);
        if (format == "csv") {
          write_text(dir / (name + ".csv"), features_to_csv(s));
        } else {
          write_text(dir / (name + ".feat"), features_to_binary(s));
        }
      }
      if (loaded.labels) write_text(dir / kLabelFile, format_labels(*loaded.labels));
      counts[i] = seqs.size();
    });
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      std::cout << inputs[i] << ": " << counts[i] << " channels -> " << (fs::path(out) / fs::path(inputs[i]).stem()).string()
                << "\n";
    }
  }
};

// ---------------------------------------------------------------------------
// stats and pca

struct ClassDirs {
  std::vector<std::string> le, ar;
  std::string out = ".";

  void add(CLI::App* cmd) {
    cmd->add_option("--le", le, "Feature directories of LE recordings")->required();
    cmd->add_option("--ar", ar, "Feature directories of AR recordings")->required();
    cmd->add_option("-o,--output", out, "Output directory");
  }

  std::pair<std::vector<FeatureRecording>, std::vector<FeatureRecording>> load(const GlobalOptions& g) const {
    const double frame_s = config_frame_s(g);
    auto a = collect_feature_dirs(le, frame_s);
    auto b = collect_feature_dirs(ar, frame_s);
    if (a.empty()) throw Error(ErrorCode::EmptyCorpus, "no feature files under the LE directories");
    if (b.empty()) throw Error(ErrorCode::EmptyCorpus, "no feature files under the AR directories");
    return {std::move(a), std::move(b)};
  }
};

struct StatsCmd {
  ClassDirs dirs;

  void add(CLI::App& app, const GlobalOptions& g) {
    auto* cmd = app.add_subcommand("stats", "Per-feature means and variances of LE, AR and pooled data");
    dirs.add(cmd);
    cmd->callback([this, &g] { run(g); });
  }

  void run(const GlobalOptions& g) {
    const auto [le, ar] = dirs.load(g);
    StatsSummary sle{StatsClass::LE}, sar{StatsClass::AR};
    for (const auto& r : le)
      for (const auto& s : r.channels) sle = with_context(r.dir.string(), [&] { return accumulate(std::move(sle), s); });
    for (const auto& r : ar)
      for (const auto& s : r.channels) sar = with_context(r.dir.string(), [&] { return accumulate(std::move(sar), s); });
    StatsSummary global{StatsClass::GLOBAL};
    global.merge(sle);
    global.merge(sar);
    const auto table = report_table(sle, sar, global);
    write_text(fs::path(dirs.out) / "stats.csv", stats_to_csv(table));
    write_text(fs::path(dirs.out) / "stats.txt", stats_to_text(table));
    std::cout << stats_to_text(table);
  }
};

struct PcaCmd {
  ClassDirs dirs;
  bool population = false;

  void add(CLI::App& app, const GlobalOptions& g) {
    auto* cmd = app.add_subcommand("pca", "Principal components of the base features for LE and AR data");
    dirs.add(cmd);
    cmd->add_flag("--population", population, "Divide the covariance by N instead of N - 1");
    cmd->callback([this, &g] { run(g); });
  }

  EigenDecomposition decompose(const std::vector<FeatureRecording>& recs) const {
    CovarianceAccumulator acc(kBaseFeatureDims);
    for (const auto& r : recs) {
      for (const auto& s : r.channels) {
        if (s.dims < kBaseFeatureDims) {
          throw ContextError(r.dir.string() + ": feature files have fewer than " + std::to_string(kBaseFeatureDims) + " dims");
        }
        for (std::size_t t = 0; t < s.num_frames(); ++t) acc.add(s.row(t).first(kBaseFeatureDims));
      }
    }
    return acc.decompose(population ? CovarianceNormalization::Population : CovarianceNormalization::Sample);
  }

  void run(const GlobalOptions& g) {
    const auto [le, ar] = dirs.load(g);
    const auto a = decompose(le);
    const auto b = decompose(ar);
    const auto cmp = compare_eigenvectors(a, b);
    const fs::path out = dirs.out;
    write_text(out / "pca_explained.dat", explained_table(a, b));
    write_text(out / "pca_eigenvectors.dat", amplitude_table(cmp));
    write_text(out / "pca_comparison.csv", comparison_to_csv(cmp));
    std::cout << explained_table(a, b);
  }
};

// ---------------------------------------------------------------------------
// train, classify, det

struct TrainCmd {
  std::vector<std::string> dirs;
  std::string out = "models";
  std::string tag;

  void add(CLI::App& app, const GlobalOptions& g) {
    auto* cmd = app.add_subcommand("train", "Train SEIZ and BCKG models from labelled feature directories");
    cmd->add_option("dirs", dirs, "Feature directories (each recording needs labels.lbl)")->required();
    cmd->add_option("-o,--output", out, "Model directory");
    cmd->add_option("--tag", tag, "Training condition recorded in the models, e.g. LE");
    cmd->callback([this, &g] { run(g); });
  }

  void run(const GlobalOptions& g) {
    EpochConfig ecfg;
    const TrainConfig t = train_config(g, ecfg);
    const auto recs = collect_feature_dirs(dirs, config_frame_s(g));
    if (recs.empty()) throw Error(ErrorCode::EmptyCorpus, "no feature files found");
    const auto models = train_pair(feature_epochs(recs, ecfg), t, tag);
    const fs::path dir = out;
    write_text(dir / "seiz.hmm", model_to_binary(models.seiz));
    write_text(dir / "bckg.hmm", model_to_binary(models.bckg));
    write_text(dir / "seiz.json", model_to_json(models.seiz).dump(2) + "\n");
    write_text(dir / "bckg.json", model_to_json(models.bckg).dump(2) + "\n");
    std::cout << "models written to " << dir.string() << "\n";
  }
};

HmmModel load_model(const fs::path& dir, const std::string& name) {
  const fs::path bin = dir / (name + ".hmm");
  const fs::path json = dir / (name + ".json");
  if (fs::exists(bin)) return with_context(bin.string(), [&] { return model_from_binary(read_text(bin)); });
  if (fs::exists(json)) {
    return with_context(json.string(), [&] {
      try {
        return model_from_json(nlohmann::json::parse(read_text(json)));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
      }
    });
  }
  throw Error(ErrorCode::IoError, "no " + name + ".hmm or " + name + ".json in " + dir.string());
}

struct ClassifyCmd {
  std::string models = "models";
  std::vector<std::string> dirs;
  std::string out = "scores.csv";

  void add(CLI::App& app, const GlobalOptions& g) {
    auto* cmd = app.add_subcommand("classify", "Score every labelled epoch with a SEIZ/BCKG model pair");
    cmd->add_option("dirs", dirs, "Feature directories")->required();
    cmd->add_option("-m,--models", models, "Directory holding seiz and bckg models");
    cmd->add_option("-o,--output", out, "Per-epoch score CSV");
    cmd->callback([this, &g] { run(g); });
  }

  void run(const GlobalOptions& g) {
    EpochConfig ecfg;
    train_config(g, ecfg);
    const HmmModel seiz = load_model(models, "seiz");
    const HmmModel bckg = load_model(models, "bckg");
    const CompiledModel cs(seiz), cb(bckg);
    const auto recs = collect_feature_dirs(dirs, config_frame_s(g));
    if (recs.empty()) throw Error(ErrorCode::EmptyCorpus, "no feature files found");
    const auto epochs = feature_epochs(recs, ecfg);
    if (epochs.empty()) throw Error(ErrorCode::EmptyInput, "no labelled epochs to classify");
    std::vector<Classification> results(epochs.size());
    parallel_for(epochs.size(), g.jobs, [&](std::size_t i) {
      results[i] = with_context(epochs[i].recording_id + "/" + epochs[i].channel_label,
                                [&] { return classify(cs, cb, epochs[i]); });
    });
    std::string csv = "recording,channel,first_frame,reference,hypothesis,margin,loglik_seiz,loglik_bckg\n";
    std::vector<Prediction> preds;
    for (std::size_t i = 0; i < epochs.size(); ++i) {
      const auto& e = epochs[i];
      const auto& c = results[i];
      using detail::format_double;
      csv += e.recording_id + "," + e.channel_label + "," + std::to_string(e.first_frame) + "," +
             std::string(to_string(e.reference_class)) + "," + std::string(to_string(c.predicted)) + "," +
             format_double(c.margin) + "," + format_double(c.log_likelihood_seiz) + "," +
             format_double(c.log_likelihood_bckg) + "\n";
      preds.push_back({e.reference_class, c.predicted});
    }
    write_text(out, csv);
    const auto report = score(preds);
    std::printf("%llu epochs, detection rate %.4f%%\n", static_cast<unsigned long long>(report.total),
                100.0 * report.rate());
  }
};

struct DetCmd {
  std::string scores;
  std::string out = "det.csv";

  void add(CLI::App& app, const GlobalOptions&) {
    auto* cmd = app.add_subcommand("det", "DET curve from a per-epoch score CSV");
    cmd->add_option("scores", scores, "Output of the classify command")->required();
    cmd->add_option("-o,--output", out, "DET curve CSV");
    cmd->callback([this] { run(); });
  }

  void run() {
    const std::string text = read_text(scores);
    std::vector<ScoredEpoch> scored;
    with_context(scores, [&] {
      std::istringstream in(text);
      std::string line;
      if (!std::getline(in, line)) throw Error(ErrorCode::EmptyInput, "score file is empty");
      const auto header = detail::split_csv(line);
      const auto col = [&](std::string_view name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw Error(ErrorCode::ParseError, "missing column '" + std::string(name) + "'");
        return static_cast<std::size_t>(it - header.begin());
      };
      const std::size_t ref = col("reference"), margin = col("margin");
      int line_no = 1;
      while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = detail::split_csv(line);
        const std::string ctx = "line " + std::to_string(line_no);
        if (cells.size() != header.size()) throw Error(ErrorCode::ParseError, ctx + ": wrong column count");
        const auto cls = parse_event_class(cells[ref]);
        if (!cls) throw Error(ErrorCode::UnknownClassError, ctx + ": unknown class '" + std::string(cells[ref]) + "'");
        scored.push_back({*cls, detail::parse_double(cells[margin], ctx)});
      }
      return 0;
    });
    const auto curve = with_context(scores, [&] { return det_curve(scored); });
    write_text(out, det_to_csv(curve));
    std::cout << curve.points.size() << " operating points -> " << out << "\n";
  }
};

// ---------------------------------------------------------------------------
// experiment

Corpus file_corpus(const ExperimentConfig& cfg, unsigned jobs) {
  struct Item {
    fs::path path;
    ReferenceScheme tag;
    bool train;
  };
  std::vector<Item> items;
  for (const auto& p : cfg.files.le_train) items.push_back({p, ReferenceScheme::LE, true});
  for (const auto& p : cfg.files.le_eval) items.push_back({p, ReferenceScheme::LE, false});
  for (const auto& p : cfg.files.ar_train) items.push_back({p, ReferenceScheme::AR, true});
  for (const auto& p : cfg.files.ar_eval) items.push_back({p, ReferenceScheme::AR, false});
  std::vector<CorpusRecord> records(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const auto loaded = load_recording(items[i].path, items[i].tag);
    if (!loaded.labels) throw ContextError(items[i].path.string() + ": missing sibling .lbl file");
    std::string patient(trim(loaded.rec.patient_id));
    patient = patient.substr(0, patient.find(' '));
    if (patient == "X") patient.clear();
    records[i] = {loaded.rec.id(), patient, items[i].tag, pipeline_with_context(loaded.rec, cfg.pipeline, items[i].path.string()),
                  *loaded.labels};
  });
  Corpus corpus;
  for (std::size_t i = 0; i < items.size(); ++i) {
    MontageSplit& split = items[i].tag == ReferenceScheme::LE ? corpus.le : corpus.ar;
    (items[i].train ? split.train : split.eval).push_back(std::move(records[i]));
  }
  return corpus;
}

std::string tag_file(std::size_t i) {
  std::string t = kGridTags[i];
  t.erase(std::remove(t.begin(), t.end(), '+'), t.end());
  return t;
}

void write_matrix(const fs::path& dir, const std::string& suffix, const MatrixResult& r) {
  write_text(dir / ("grid" + suffix + ".csv"), grid_to_csv(r.grid));
  write_text(dir / ("grid" + suffix + ".json"), grid_to_json(r.grid).dump(2) + "\n");
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      write_text(dir / ("det" + suffix) / ("det_" + tag_file(a) + "_" + tag_file(b) + ".csv"), det_to_csv(r.det[a][b]));
    }
  }
}

struct ExperimentCmd {
  std::string recipe;
  std::string out;

  void add(CLI::App& app, const GlobalOptions& g) {
    auto* cmd = app.add_subcommand("experiment", "Run the train/eval montage matrix described by a recipe");
    cmd->add_option("recipe", recipe, "Recipe file; defaults to --config");
    cmd->add_option("-o,--output", out, "Output directory, overriding the recipe");
    cmd->callback([this, &g] { run(g); });
  }

  void run(const GlobalOptions& g) {
    const std::string path = recipe.empty() ? g.config : recipe;
    if (path.empty()) throw Error(ErrorCode::InvalidConfig, "experiment needs a recipe file");
    ExperimentConfig cfg = load_experiment_config(path);
    if (g.seed_given) cfg.seed = g.seed;
    cfg.matrix.train.seed = cfg.seed;
    cfg.matrix.train.jobs = g.jobs;
    if (!out.empty()) cfg.output_dir = out;

    const Corpus corpus = cfg.source == CorpusSource::Synthetic
                              ? build_synthetic_corpus(cfg.synth, cfg.pipeline, cfg.seed)
                              : file_corpus(cfg, g.jobs);
    const MatrixResult raw = run_matrix(corpus, cfg.matrix);
    write_matrix(cfg.output_dir, "", raw);
    std::cout << grid_to_csv(raw.grid);
    if (cfg.normalized) {
      MatrixConfig m = cfg.matrix;
      m.normalize = cfg.normalized;
      const MatrixResult norm = run_matrix(corpus, m);
      const std::string label(to_string(cfg.normalized->mode));
      write_matrix(cfg.output_dir, "_" + label, norm);
      write_text(cfg.output_dir / "normalization.dat", normalization_comparison(raw.grid, norm.grid, label));
      std::cout << "\n" << label << ":\n" << grid_to_csv(norm.grid);
    }
  }
};

// ---------------------------------------------------------------------------
// synth

struct SynthCmd {
  std::string out = "synth";
  std::string scheme = "le";
  std::string prefix;
  std::size_t count = 1;
  SynthConfig cfg;

  void add(CLI::App& app, const GlobalOptions& g) {
    auto* cmd = app.add_subcommand("synth", "Write synthetic EDF recordings with .lbl seizure labels");
    cmd->add_option("-o,--output", out, "Output directory");
    cmd->add_option("-n,--count", count, "Number of recordings")->check(CLI::PositiveNumber);
    cmd->add_option("--scheme", scheme, "Reference tag of the recordings: le or ar")->check(CLI::IsMember({"le", "ar", "LE", "AR"}));
    cmd->add_option("--prefix", prefix, "File name prefix; defaults to the scheme");
    cmd->add_option("--duration", cfg.duration_s, "Seconds per recording");
    cmd->add_option("--segment", cfg.segment_s, "Seconds per alternating BCKG/SEIZ segment");
    cmd->add_option("--fs", cfg.sample_rate_hz, "Sample rate in Hz");
    cmd->add_option("--channels", cfg.num_channels, "Electrodes, taken from the standard 10-20 list");
    cmd->add_option("--seizure-amplitude", cfg.seizure_amplitude, "Seizure discharge amplitude in uV");
    cmd->add_option("--ar-gain", cfg.bias.gain, "Gain applied to AR recordings");
    cmd->add_option("--ar-offset", cfg.bias.offset, "Offset pattern amplitude applied to AR recordings");
    cmd->callback([this, &g] { run(g); });
  }

  void run(const GlobalOptions& g) {
    cfg.scheme = *scheme_flag(scheme, false);
    const std::string base = prefix.empty() ? to_upper(scheme) : prefix;
    // Batches with different prefixes draw independent recordings.
    std::uint64_t prefix_hash = 0xcbf29ce484222325ull;
    for (unsigned char ch : base) prefix_hash = (prefix_hash ^ ch) * 0x100000001b3ull;
    fs::create_directories(out);
    parallel_for(count, g.jobs, [&](std::size_t k) {
      SynthConfig c = cfg;
      c.id = base + "_" + std::to_string(k);
      auto [rec, labels] = generate_synthetic(c, mix_seed(g.seed ^ prefix_hash) ^ mix_seed(k + 1));
      write_text(fs::path(out) / (c.id + ".edf"), write_edf(rec));
      write_text(fs::path(out) / (c.id + ".lbl"), format_labels(labels));
    });
    std::cout << count << " recordings -> " << out << "\n";
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"montage-lab: EEG montage analysis, feature extraction and seizure detection"};
  app.require_subcommand(1);
  GlobalOptions g;
  auto* seed = app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--config", g.config, "Config file (key = value with [sections])")->check(CLI::ExistingFile);

  FeaturesCmd features;
  StatsCmd stats;
  PcaCmd pca_cmd;
  TrainCmd train_cmd;
  ClassifyCmd classify_cmd;
  DetCmd det;
  ExperimentCmd experiment;
  SynthCmd synth;
  features.add(app, g);
  stats.add(app, g);
  pca_cmd.add(app, g);
  train_cmd.add(app, g);
  classify_cmd.add(app, g);
  det.add(app, g);
  experiment.add(app, g);
  synth.add(app, g);
  app.parse_complete_callback([&] { g.seed_given = seed->count() > 0; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ContextError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return 0;
}

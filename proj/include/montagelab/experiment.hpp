#pragma once

// The montage mismatch experiment: train SEIZ/BCKG models on LE, AR and
// pooled data, score each against LE, AR and pooled evaluation sets.

#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "montagelab/epochs.hpp"
#include "montagelab/eval.hpp"
#include "montagelab/hmm.hpp"
#include "montagelab/labels.hpp"
#include "montagelab/normalize.hpp"
#include "montagelab/pipeline.hpp"
#include "montagelab/synth.hpp"
#include "montagelab/train.hpp"

namespace mlab {

struct CorpusRecord {
  std::string id;
  std::string patient_id;
  ReferenceScheme tag = ReferenceScheme::UNKNOWN;
  std::vector<FeatureSequence> features;
  LabelSet labels;
};

struct MontageSplit {
  std::vector<CorpusRecord> train;
  std::vector<CorpusRecord> eval;
};

struct Corpus {
  MontageSplit le;
  MontageSplit ar;
};

struct MatrixConfig {
  TrainConfig train;
  EpochConfig epoch;
  /// Applied to every record's features before epoching when set.
  std::optional<NormalizationConfig> normalize;
  bool macro_average = false;
};

struct ModelPair {
  HmmModel seiz;
  HmmModel bckg;
};

struct MatrixResult {
  ScoreGrid grid;
  /// det[train][eval]
  std::array<std::array<DetCurve, 3>, 3> det;
  std::array<ModelPair, 3> models;
};

/// Rejects corpora where a record id, or a non-empty patient id, appears in
/// both the training and the evaluation half.
inline void check_disjoint(const Corpus& corpus) {
  std::set<std::string> ids, patients;
  for (const auto* split : {&corpus.le, &corpus.ar}) {
    for (const auto& r : split->train) {
      ids.insert(r.id);
      if (!r.patient_id.empty()) patients.insert(r.patient_id);
    }
  }
  for (const auto* split : {&corpus.le, &corpus.ar}) {
    for (const auto& r : split->eval) {
      if (ids.count(r.id)) throw Error(ErrorCode::SplitOverlap, "record '" + r.id + "' is in both train and eval");
      if (!r.patient_id.empty() && patients.count(r.patient_id)) {
        throw Error(ErrorCode::SplitOverlap, "patient '" + r.patient_id + "' is in both train and eval");
      }
    }
  }
}

inline std::vector<Epoch> corpus_epochs(const std::vector<const CorpusRecord*>& records, const MatrixConfig& cfg) {
  std::vector<Epoch> out;
  for (const auto* r : records) {
    std::vector<FeatureSequence> seqs = r->features;
    if (cfg.normalize && cfg.normalize->mode != NormalizationMode::NONE) {
      seqs = normalize_recording(std::move(seqs), *cfg.normalize);
    }
    for (const auto& s : seqs) {
      auto e = make_epochs(s, r->labels, r->id, cfg.epoch);
      out.insert(out.end(), std::make_move_iterator(e.begin()), std::make_move_iterator(e.end()));
    }
  }
  return out;
}

inline ModelPair train_pair(const std::vector<Epoch>& epochs, const TrainConfig& cfg, const std::string& tag) {
  std::vector<Epoch> seiz, bckg;
  for (const auto& e : epochs) (e.reference_class == EventClass::SEIZ ? seiz : bckg).push_back(e);
  ModelPair p{train(seiz, EventClass::SEIZ, cfg), train(bckg, EventClass::BCKG, cfg)};
  p.seiz.trained_on = p.bckg.trained_on = tag;
  return p;
}

inline std::pair<ScoreReport, DetCurve> evaluate_pair(const ModelPair& models, const std::vector<Epoch>& epochs) {
  const CompiledModel seiz(models.seiz), bckg(models.bckg);
  std::vector<Prediction> preds;
  std::vector<ScoredEpoch> scored;
  for (const auto& e : epochs) {
    const auto c = classify(seiz, bckg, e);
    preds.push_back({e.reference_class, c.predicted});
    scored.push_back({e.reference_class, c.margin});
  }
  return {score(preds), det_curve(scored)};
}

inline MatrixResult run_matrix(const Corpus& corpus, const MatrixConfig& cfg) {
  check_disjoint(corpus);
  auto pointers = [](const std::vector<CorpusRecord>& a, const std::vector<CorpusRecord>* b) {
    std::vector<const CorpusRecord*> out;
    for (const auto& r : a) out.push_back(&r);
    if (b) {
      for (const auto& r : *b) out.push_back(&r);
    }
    return out;
  };
  const std::array<std::vector<const CorpusRecord*>, 3> train_sets = {
      pointers(corpus.le.train, nullptr), pointers(corpus.ar.train, nullptr),
      pointers(corpus.le.train, &corpus.ar.train)};
  const std::array<std::vector<const CorpusRecord*>, 3> eval_sets = {
      pointers(corpus.le.eval, nullptr), pointers(corpus.ar.eval, nullptr), pointers(corpus.le.eval, &corpus.ar.eval)};

  MatrixResult result;
  result.grid.macro = cfg.macro_average;
  std::array<std::vector<Epoch>, 3> eval_epochs;
  for (std::size_t c = 0; c < 3; ++c) eval_epochs[c] = corpus_epochs(eval_sets[c], cfg);
  for (std::size_t r = 0; r < 3; ++r) {
    result.models[r] = train_pair(corpus_epochs(train_sets[r], cfg), cfg.train, kGridTags[r]);
    for (std::size_t c = 0; c < 3; ++c) {
      auto [report, curve] = evaluate_pair(result.models[r], eval_epochs[c]);
      report.train_tag = curve.train_tag = kGridTags[r];
      report.eval_tag = curve.eval_tag = kGridTags[c];
      result.grid.cells[r][c] = std::move(report);
      result.det[r][c] = std::move(curve);
    }
  }
  return result;
}

struct SynthCorpusConfig {
  SynthConfig signal;
  std::size_t train_records = 4;
  std::size_t eval_records = 2;
  /// Distortion applied to the AR half of the corpus.
  MontageBias ar_bias;
};

/// Synthetic LE/AR corpus, every record from its own seed and patient.
inline Corpus build_synthetic_corpus(const SynthCorpusConfig& cfg, const PipelineConfig& pipeline, std::uint64_t seed) {
  Corpus corpus;
  std::uint64_t index = 0;
  for (ReferenceScheme tag : {ReferenceScheme::LE, ReferenceScheme::AR}) {
    MontageSplit& split = tag == ReferenceScheme::LE ? corpus.le : corpus.ar;
    for (std::size_t k = 0; k < cfg.train_records + cfg.eval_records; ++k, ++index) {
      const bool is_train = k < cfg.train_records;
      SynthConfig sc = cfg.signal;
      sc.scheme = tag;
      sc.bias = cfg.ar_bias;
      sc.id = std::string(to_string(tag)) + (is_train ? "_train_" : "_eval_") + std::to_string(k);
      sc.patient_id = "P" + std::to_string(index);
      auto [rec, labels] = generate_synthetic(sc, mix_seed(seed) ^ mix_seed(index + 17));
      CorpusRecord cr{sc.id, sc.patient_id, tag, run_pipeline(rec, pipeline), std::move(labels)};
      (is_train ? split.train : split.eval).push_back(std::move(cr));
    }
  }
  return corpus;
}

}  // namespace mlab

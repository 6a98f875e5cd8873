#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mispron/corpus.hpp"
#include "mispron/dataset.hpp"
#include "mispron/parallel.hpp"
#include "mispron/pipeline.hpp"
#include "mispron/split.hpp"

namespace mispron {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

// counts[true][predicted]
struct ConfusionMatrix {
  int n_classes = 0;
  std::vector<long long> counts;

  long long at(int truth, int predicted) const {
    return counts[static_cast<std::size_t>(truth) * n_classes + predicted];
  }
  long long total() const {
    long long t = 0;
    for (long long c : counts) t += c;
    return t;
  }
};

inline ConfusionMatrix confusion_matrix(const std::vector<int>& y_true,
                                        const std::vector<int>& y_pred, int n_classes) {
  if (y_true.size() != y_pred.size()) {
    raise(ErrorKind::param, "bad_input", "label sequences differ in length");
  }
  ConfusionMatrix cm;
  cm.n_classes = n_classes;
  cm.counts.assign(static_cast<std::size_t>(n_classes) * n_classes, 0);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t < 0 || t >= n_classes || p < 0 || p >= n_classes) {
      raise(ErrorKind::param, "bad_input", "label out of range");
    }
    ++cm.counts[static_cast<std::size_t>(t) * n_classes + p];
  }
  return cm;
}

struct PerClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // 0/0 cells are reported as 0 with the flag cleared
  bool precision_defined = true;
  bool recall_defined = true;
};

struct FoldReport {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  int n_validated = 0;
};

struct LatencyStats {
  double mean_seconds = 0.0;
  double p95_seconds = 0.0;
  int reps = 0;
};

struct EvaluationReport {
  std::string method;
  std::string features;
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<PerClassMetrics> per_class;
  ConfusionMatrix cm;
  std::vector<std::string> class_names;
  std::vector<std::string> exclusions;      // all-silent samples left out, by path
  std::vector<double> member_accuracy;      // filled for committee methods
  std::vector<std::string> member_names;
  std::vector<FoldReport> folds;            // filled by cross-validation
  LatencyStats latency;                     // filled by the benchmark path only
  bool has_latency = false;
};

// Accuracy is the diagonal share; per-class precision/recall/F1 use the
// one-vs-rest reading, macro values are their unweighted means.
inline EvaluationReport metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) raise(ErrorKind::param, "bad_input", "empty confusion matrix");
  EvaluationReport report;
  report.cm = cm;

  long long diagonal = 0;
  for (int k = 0; k < cm.n_classes; ++k) diagonal += cm.at(k, k);
  report.accuracy = static_cast<double>(diagonal) / static_cast<double>(cm.total());

  for (int k = 0; k < cm.n_classes; ++k) {
    long long tp = cm.at(k, k), row = 0, col = 0;
    for (int j = 0; j < cm.n_classes; ++j) {
      row += cm.at(k, j);
      col += cm.at(j, k);
    }
    PerClassMetrics pc;
    pc.precision_defined = col > 0;
    pc.recall_defined = row > 0;
    pc.precision = col > 0 ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
    pc.recall = row > 0 ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
    pc.f1 = pc.precision + pc.recall > 0.0
                ? 2.0 * pc.precision * pc.recall / (pc.precision + pc.recall)
                : 0.0;
    report.per_class.push_back(pc);
    report.macro_precision += pc.precision;
    report.macro_recall += pc.recall;
    report.macro_f1 += pc.f1;
  }
  report.macro_precision /= cm.n_classes;
  report.macro_recall /= cm.n_classes;
  report.macro_f1 /= cm.n_classes;
  return report;
}

inline double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

// ---------------------------------------------------------------------------
// Corpus-level evaluation
// ---------------------------------------------------------------------------

namespace detail {

struct PreparedCorpus {
  std::vector<CorpusEntry> entries;   // originals that survived preprocessing
  std::vector<AudioClip> clips;       // preprocessed
  std::vector<std::string> class_names;
  std::vector<int> labels;
  std::vector<std::string> exclusions;
};

// Loads and preprocesses every original entry; all-silent clips become named
// exclusions instead of errors.
inline PreparedCorpus prepare_corpus(const CorpusManifest& manifest, const PipelineConfig& cfg) {
  std::vector<const CorpusEntry*> originals;
  for (const auto& e : manifest.entries) {
    if (e.origin == EntryOrigin::original) originals.push_back(&e);
  }
  if (originals.empty()) raise(ErrorKind::data, "empty_corpus", "manifest has no original entries");

  struct Slot {
    AudioClip clip;
    bool silent = false;
  };
  std::vector<Slot> slots(originals.size());
  const PreprocessParams prep = preprocess_params(cfg);
  parallel_for(originals.size(), cfg.jobs, [&](std::size_t i) {
    try {
      slots[i].clip = preprocess_pipeline(load_wav(originals[i]->path), prep);
    } catch (const Error& err) {
      if (err.code() == "all_silent") {
        slots[i].silent = true;
      } else {
        throw;
      }
    }
  });

  PreparedCorpus out;
  std::map<std::string, int> class_ids;
  for (const auto* e : originals) class_ids.emplace(e->label, 0);
  int next = 0;
  for (auto& [name, id] : class_ids) {
    id = next++;
    out.class_names.push_back(name);
  }
  for (std::size_t i = 0; i < originals.size(); ++i) {
    if (slots[i].silent) {
      out.exclusions.push_back(originals[i]->path);
      continue;
    }
    out.entries.push_back(*originals[i]);
    out.clips.push_back(std::move(slots[i].clip));
    out.labels.push_back(class_ids.at(originals[i]->label));
  }
  if (out.entries.empty()) {
    raise(ErrorKind::data, "empty_corpus", "every sample was excluded as silent");
  }
  return out;
}

// Feature rows for the given corpus indices plus, optionally, their four
// augmented derivatives (training side only).
inline void append_rows(LabeledDataset& ds, const PreparedCorpus& corpus,
                        const std::vector<int>& indices, bool augmented,
                        const PipelineConfig& cfg, std::vector<std::string>* warnings) {
  const AugmentPlan plan = augment_plan_for(cfg);
  struct RowBlock {
    std::vector<std::vector<double>> rows;
  };
  std::vector<RowBlock> blocks(indices.size());
  parallel_for(indices.size(), cfg.jobs, [&](std::size_t i) {
    const int idx = indices[i];
    const AudioClip& clip = corpus.clips[static_cast<std::size_t>(idx)];
    blocks[i].rows.push_back(extract_for(cfg, clip).values);
    if (!augmented) return;
    for (AugmentTechnique technique : kAllTechniques) {
      try {
        const AudioClip derived =
            apply_augmentation(clip, technique, plan, corpus.entries[static_cast<std::size_t>(idx)].group);
        blocks[i].rows.push_back(extract_for(cfg, derived).values);
      } catch (const Error& err) {
        if (warnings != nullptr) {
          warnings->push_back(std::string("skipped ") + technique_name(technique) + " for " +
                              corpus.entries[static_cast<std::size_t>(idx)].path + ": " + err.what());
        }
      }
    }
  });
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    for (const auto& row : blocks[i].rows) {
      ds.push_row(row, corpus.labels[static_cast<std::size_t>(idx)],
                  corpus.entries[static_cast<std::size_t>(idx)].group);
    }
  }
}

inline EvaluationReport evaluate_on(const AnyModel& model, const LabeledDataset& test,
                                    const PipelineConfig& cfg) {
  std::vector<int> y_pred(static_cast<std::size_t>(test.n));
  parallel_for(static_cast<std::size_t>(test.n), cfg.jobs,
               [&](std::size_t i) { y_pred[i] = predict(model, test.row(static_cast<int>(i))); });
  EvaluationReport report = metrics(confusion_matrix(test.labels, y_pred, test.n_classes()));
  report.method = cfg.method;
  report.features = feature_kind_name(cfg.features);
  report.class_names = test.class_names;

  // committee members get their own test accuracy when the model carries them
  if (const auto* ensemble = std::get_if<EnsembleModel>(&model)) {
    if (const auto* voting = std::get_if<VotingModel>(&ensemble->model)) {
      for (const auto& member : voting->members) {
        int hits = 0;
        for (int i = 0; i < test.n; ++i) {
          if (predict(member, test.row(i)) == test.labels[static_cast<std::size_t>(i)]) ++hits;
        }
        report.member_accuracy.push_back(static_cast<double>(hits) / test.n);
        report.member_names.push_back(learner_kind_name(member.kind));
      }
    }
  }
  return report;
}

}  // namespace detail

struct HoldoutResult {
  EvaluationReport report;
  AnyModel model;
  LabeledDataset train;
  LabeledDataset test;

  HoldoutResult() : model(TrainedLearner{}) {}
};

// The full protocol: preprocess everything, split originals group-aware,
// augment only the training side, extract features, train, evaluate on the
// untouched test originals.
inline HoldoutResult run_holdout(const CorpusManifest& manifest, const PipelineConfig& cfg) {
  const detail::PreparedCorpus corpus = detail::prepare_corpus(manifest, cfg);

  std::vector<std::string> group_labels;
  std::vector<std::string> group_ids;
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    group_labels.push_back(corpus.entries[i].label);
    group_ids.push_back(corpus.entries[i].group);
  }
  const SplitPlan plan =
      stratified_split_rows(group_labels, group_ids, cfg.test_fraction, cfg.seed);

  HoldoutResult result;
  result.train.d = feature_dimension(cfg.features, mel_params(cfg));
  result.train.class_names = corpus.class_names;
  result.test.d = result.train.d;
  result.test.class_names = corpus.class_names;

  std::vector<std::string> augment_warnings;
  detail::append_rows(result.train, corpus, plan.train_indices, cfg.augment, cfg,
                      &augment_warnings);
  detail::append_rows(result.test, corpus, plan.test_indices, false, cfg, nullptr);

  result.model = train_any(cfg, result.train);
  result.report = detail::evaluate_on(result.model, result.test, cfg);
  result.report.exclusions = corpus.exclusions;
  for (auto& w : augment_warnings) result.report.exclusions.push_back(std::move(w));
  return result;
}

// k-fold protocol: every fold re-trains with in-fold augmentation and
// validates on untouched originals; headline metrics are fold means.
inline EvaluationReport run_cv(const CorpusManifest& manifest, const PipelineConfig& cfg, int k) {
  const detail::PreparedCorpus corpus = detail::prepare_corpus(manifest, cfg);

  std::vector<std::string> group_labels;
  std::vector<std::string> group_ids;
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    group_labels.push_back(corpus.entries[i].label);
    group_ids.push_back(corpus.entries[i].group);
  }
  const SplitPlan plan = kfold_rows(group_labels, group_ids, k, cfg.seed);

  EvaluationReport aggregate;
  aggregate.method = cfg.method;
  aggregate.features = feature_kind_name(cfg.features);
  aggregate.class_names = corpus.class_names;
  aggregate.cm.n_classes = static_cast<int>(corpus.class_names.size());
  aggregate.cm.counts.assign(corpus.class_names.size() * corpus.class_names.size(), 0);
  aggregate.exclusions = corpus.exclusions;

  const int d = feature_dimension(cfg.features, mel_params(cfg));
  for (const Fold& fold : plan.folds) {
    LabeledDataset train, validation;
    train.d = validation.d = d;
    train.class_names = validation.class_names = corpus.class_names;
    detail::append_rows(train, corpus, fold.train_indices, cfg.augment, cfg, nullptr);
    detail::append_rows(validation, corpus, fold.validation_indices, false, cfg, nullptr);

    const AnyModel model = train_any(cfg, train);
    const EvaluationReport fold_report = detail::evaluate_on(model, validation, cfg);
    aggregate.folds.push_back({fold_report.accuracy, fold_report.macro_precision,
                               fold_report.macro_recall, fold_report.macro_f1, validation.n});
    for (std::size_t i = 0; i < fold_report.cm.counts.size(); ++i) {
      aggregate.cm.counts[i] += fold_report.cm.counts[i];
    }
  }

  for (const FoldReport& fold : aggregate.folds) {
    aggregate.accuracy += fold.accuracy;
    aggregate.macro_precision += fold.macro_precision;
    aggregate.macro_recall += fold.macro_recall;
    aggregate.macro_f1 += fold.macro_f1;
  }
  const double n_folds = static_cast<double>(aggregate.folds.size());
  aggregate.accuracy /= n_folds;
  aggregate.macro_precision /= n_folds;
  aggregate.macro_recall /= n_folds;
  aggregate.macro_f1 /= n_folds;
  aggregate.per_class = metrics(aggregate.cm).per_class;  // pooled per-class view
  return aggregate;
}

// ---------------------------------------------------------------------------
// Inference benchmark
// ---------------------------------------------------------------------------

// Wall-clock cost of the full per-sample path (preprocess -> features ->
// predict), single-threaded, cycling through the given clips. The numbers are
// machine-dependent by nature.
inline LatencyStats bench_inference(const ModelBundle& bundle, const std::vector<AudioClip>& clips,
                                    int warmup = 10, int reps = 100) {
  if (clips.empty()) raise(ErrorKind::param, "bad_param", "need at least one clip");
  if (reps < 1) raise(ErrorKind::param, "bad_param", "reps must be >= 1");

  using Clock = std::chrono::steady_clock;
  std::vector<double> seconds;
  seconds.reserve(static_cast<std::size_t>(reps));
  for (int i = 0; i < warmup + reps; ++i) {
    const AudioClip& clip = clips[static_cast<std::size_t>(i) % clips.size()];
    const auto begin = Clock::now();
    const ClipPrediction prediction = predict_clip(bundle, clip);
    const auto end = Clock::now();
    if (prediction.scores.empty()) raise(ErrorKind::data, "bad_model", "empty prediction");
    if (i >= warmup) {
      seconds.push_back(std::chrono::duration<double>(end - begin).count());
    }
  }
  std::sort(seconds.begin(), seconds.end());
  LatencyStats stats;
  stats.reps = reps;
  for (double s : seconds) stats.mean_seconds += s;
  stats.mean_seconds /= static_cast<double>(seconds.size());
  const std::size_t p95_index =
      std::min(seconds.size() - 1,
               static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(seconds.size()))) - 1);
  stats.p95_seconds = seconds[p95_index];
  return stats;
}

// ---------------------------------------------------------------------------
// Report output
// ---------------------------------------------------------------------------

inline Json report_to_json(const EvaluationReport& report) {
  Json per_class = Json::array();
  for (std::size_t k = 0; k < report.per_class.size(); ++k) {
    const auto& pc = report.per_class[k];
    per_class.push_back(Json{{"class", report.class_names[k]},
                             {"precision", pc.precision},
                             {"recall", pc.recall},
                             {"f1", pc.f1},
                             {"precision_defined", pc.precision_defined},
                             {"recall_defined", pc.recall_defined}});
  }
  Json folds = Json::array();
  for (const auto& fold : report.folds) {
    folds.push_back(Json{{"accuracy", fold.accuracy},
                         {"precision", fold.macro_precision},
                         {"recall", fold.macro_recall},
                         {"f1", fold.macro_f1},
                         {"n_validated", fold.n_validated}});
  }
  Json members = Json::array();
  for (std::size_t m = 0; m < report.member_accuracy.size(); ++m) {
    members.push_back(
        Json{{"member", report.member_names[m]}, {"accuracy", report.member_accuracy[m]}});
  }
  Json j{{"method", report.method},
         {"features", report.features},
         {"accuracy", report.accuracy},
         {"precision", report.macro_precision},
         {"recall", report.macro_recall},
         {"f1", report.macro_f1},
         {"per_class", std::move(per_class)},
         {"class_names", report.class_names},
         {"confusion", report.cm.counts},
         {"exclusions", report.exclusions},
         {"folds", std::move(folds)},
         {"members", std::move(members)}};
  if (report.has_latency) {
    j["latency"] = Json{{"mean_seconds", report.latency.mean_seconds},
                        {"p95_seconds", report.latency.p95_seconds},
                        {"reps", report.latency.reps}};
  }
  return j;
}

// Aligned table with the conventional column order.
inline std::string report_to_table(const EvaluationReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-28s %9s %10s %8s %9s\n", "Method", "Accuracy", "Precision",
                "Recall", "F1-Score");
  out << line;
  const std::string name = report.method + " + " + report.features;
  std::snprintf(line, sizeof(line), "%-28s %9.3f %10.3f %8.3f %9.3f\n", name.c_str(),
                report.accuracy, report.macro_precision, report.macro_recall, report.macro_f1);
  out << line;
  for (std::size_t m = 0; m < report.member_accuracy.size(); ++m) {
    std::snprintf(line, sizeof(line), "  member %-19s %9.3f\n", report.member_names[m].c_str(),
                  report.member_accuracy[m]);
    out << line;
  }
  for (std::size_t f = 0; f < report.folds.size(); ++f) {
    const auto& fold = report.folds[f];
    std::snprintf(line, sizeof(line), "  fold %-21zu %9.3f %10.3f %8.3f %9.3f\n", f + 1,
                  fold.accuracy, fold.macro_precision, fold.macro_recall, fold.macro_f1);
    out << line;
  }
  return out.str();
}

inline std::string confusion_to_csv(const ConfusionMatrix& cm,
                                    const std::vector<std::string>& class_names) {
  std::ostringstream out;
  out << "true\\predicted";
  for (const auto& name : class_names) out << ',' << name;
  out << '\n';
  for (int t = 0; t < cm.n_classes; ++t) {
    out << class_names[static_cast<std::size_t>(t)];
    for (int p = 0; p < cm.n_classes; ++p) out << ',' << cm.at(t, p);
    out << '\n';
  }
  return out.str();
}

}  // namespace mispron

#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mispron/augment.hpp"
#include "mispron/ensembles.hpp"
#include "mispron/error.hpp"
#include "mispron/features.hpp"
#include "mispron/model_io.hpp"
#include "mispron/preprocess.hpp"

namespace mispron {

// Every pipeline knob in one place. The flat key=value form is what config
// files, reproducibility records and bundle snapshots carry.
struct PipelineConfig {
  FeatureKind features = FeatureKind::mel128;
  std::string method = "voting";
  std::uint64_t seed = 42;
  double test_fraction = 0.2;
  int cv_folds = 5;
  bool augment = true;
  int jobs = 1;

  AugmentPlan augment_plan;      // seed overwritten from `seed`
  GateParams gate;
  TrimParams trim;
  int mel_bands = 128;
  int mfcc_filters = 40;
  MfccMode mfcc_mode = MfccMode::last20;

  double svm_c = 0.02;
  int knn_k = 3;
  int tree_depth = -1;
  int tree_min_leaf = 1;
  int forest_trees = 100;
  int forest_features = 0;  // 0 = floor(sqrt(d))
  int bags = 50;
  int boost_rounds = 50;
  int boost_depth = 5;
  int stack_folds = 5;
  double logreg_l2 = 1.0;
};

inline const std::set<std::string>& known_methods() {
  static const std::set<std::string> methods = {
      "svm",     "knn",     "dtree",       "gnb",         "rforest",    "voting",
      "bagging", "boosting", "stacking-lr", "stacking-rf", "stacking-et"};
  return methods;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    raise(ErrorKind::param, "bad_config", "key " + key + " expects a number, got '" + value + "'");
  }
}

inline int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    raise(ErrorKind::param, "bad_config", "key " + key + " expects an integer, got '" + value + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  raise(ErrorKind::param, "bad_config", "key " + key + " expects a boolean, got '" + value + "'");
}

}  // namespace detail

inline std::map<std::string, std::string> config_to_map(const PipelineConfig& cfg) {
  using detail::format_double;
  std::map<std::string, std::string> m;
  m["features"] = feature_kind_name(cfg.features);
  m["method"] = cfg.method;
  m["seed"] = std::to_string(cfg.seed);
  m["test-fraction"] = format_double(cfg.test_fraction);
  m["cv-folds"] = std::to_string(cfg.cv_folds);
  m["augment"] = cfg.augment ? "true" : "false";
  m["jobs"] = std::to_string(cfg.jobs);
  m["snr-db"] = format_double(cfg.augment_plan.snr_db);
  m["shift"] = format_double(cfg.augment_plan.shift_fraction);
  m["stretch-lo"] = format_double(cfg.augment_plan.stretch_lo);
  m["stretch-hi"] = format_double(cfg.augment_plan.stretch_hi);
  m["semitones"] = std::to_string(cfg.augment_plan.max_semitones);
  m["gate-n-fft"] = std::to_string(cfg.gate.n_fft);
  m["gate-hop"] = std::to_string(cfg.gate.hop);
  m["gate-quiet"] = format_double(cfg.gate.quiet_fraction);
  m["gate-sigma"] = format_double(cfg.gate.threshold_sigma);
  m["gate-smooth"] = std::to_string(cfg.gate.mask_smoothing);
  m["gate-floor-db"] = format_double(cfg.gate.attenuation_floor_db);
  m["top-db"] = format_double(cfg.trim.top_db);
  m["trim-frame"] = std::to_string(cfg.trim.frame);
  m["trim-hop"] = std::to_string(cfg.trim.hop);
  m["mel-bands"] = std::to_string(cfg.mel_bands);
  m["mfcc-filters"] = std::to_string(cfg.mfcc_filters);
  m["mfcc-mode"] = cfg.mfcc_mode == MfccMode::last20 ? "last20" : "deltas";
  m["svm-c"] = format_double(cfg.svm_c);
  m["knn-k"] = std::to_string(cfg.knn_k);
  m["tree-depth"] = std::to_string(cfg.tree_depth);
  m["tree-min-leaf"] = std::to_string(cfg.tree_min_leaf);
  m["forest-trees"] = std::to_string(cfg.forest_trees);
  m["forest-features"] = std::to_string(cfg.forest_features);
  m["bags"] = std::to_string(cfg.bags);
  m["boost-rounds"] = std::to_string(cfg.boost_rounds);
  m["boost-depth"] = std::to_string(cfg.boost_depth);
  m["stack-folds"] = std::to_string(cfg.stack_folds);
  m["logreg-l2"] = format_double(cfg.logreg_l2);
  return m;
}

inline void validate_config(const PipelineConfig& cfg);

// Builds a config from key=value pairs. Unknown keys are hard errors; values
// are validated against module preconditions before any work starts.
inline PipelineConfig config_from_map(const std::map<std::string, std::string>& m) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_int;
  PipelineConfig cfg;
  for (const auto& [key, value] : m) {
    if (key == "features") {
      cfg.features = parse_feature_kind(value);
    } else if (key == "method") {
      cfg.method = value;
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
    } else if (key == "test-fraction") {
      cfg.test_fraction = parse_double(key, value);
    } else if (key == "cv-folds") {
      cfg.cv_folds = parse_int(key, value);
    } else if (key == "augment") {
      cfg.augment = parse_bool(key, value);
    } else if (key == "jobs") {
      cfg.jobs = parse_int(key, value);
    } else if (key == "snr-db") {
      cfg.augment_plan.snr_db = parse_double(key, value);
    } else if (key == "shift") {
      cfg.augment_plan.shift_fraction = parse_double(key, value);
    } else if (key == "stretch-lo") {
      cfg.augment_plan.stretch_lo = parse_double(key, value);
    } else if (key == "stretch-hi") {
      cfg.augment_plan.stretch_hi = parse_double(key, value);
    } else if (key == "semitones") {
      cfg.augment_plan.max_semitones = parse_int(key, value);
    } else if (key == "gate-n-fft") {
      cfg.gate.n_fft = parse_int(key, value);
    } else if (key == "gate-hop") {
      cfg.gate.hop = parse_int(key, value);
    } else if (key == "gate-quiet") {
      cfg.gate.quiet_fraction = parse_double(key, value);
    } else if (key == "gate-sigma") {
      cfg.gate.threshold_sigma = parse_double(key, value);
    } else if (key == "gate-smooth") {
      cfg.gate.mask_smoothing = parse_int(key, value);
    } else if (key == "gate-floor-db") {
      cfg.gate.attenuation_floor_db = parse_double(key, value);
    } else if (key == "top-db") {
      cfg.trim.top_db = parse_double(key, value);
    } else if (key == "trim-frame") {
      cfg.trim.frame = parse_int(key, value);
    } else if (key == "trim-hop") {
      cfg.trim.hop = parse_int(key, value);
    } else if (key == "mel-bands") {
      cfg.mel_bands = parse_int(key, value);
    } else if (key == "mfcc-filters") {
      cfg.mfcc_filters = parse_int(key, value);
    } else if (key == "mfcc-mode") {
      if (value == "last20") {
        cfg.mfcc_mode = MfccMode::last20;
      } else if (value == "deltas") {
        cfg.mfcc_mode = MfccMode::deltas;
      } else {
        raise(ErrorKind::param, "bad_config", "mfcc-mode must be last20 or deltas");
      }
    } else if (key == "svm-c") {
      cfg.svm_c = parse_double(key, value);
    } else if (key == "knn-k") {
      cfg.knn_k = parse_int(key, value);
    } else if (key == "tree-depth") {
      cfg.tree_depth = parse_int(key, value);
    } else if (key == "tree-min-leaf") {
      cfg.tree_min_leaf = parse_int(key, value);
    } else if (key == "forest-trees") {
      cfg.forest_trees = parse_int(key, value);
    } else if (key == "forest-features") {
      cfg.forest_features = parse_int(key, value);
    } else if (key == "bags") {
      cfg.bags = parse_int(key, value);
    } else if (key == "boost-rounds") {
      cfg.boost_rounds = parse_int(key, value);
    } else if (key == "boost-depth") {
      cfg.boost_depth = parse_int(key, value);
    } else if (key == "stack-folds") {
      cfg.stack_folds = parse_int(key, value);
    } else if (key == "logreg-l2") {
      cfg.logreg_l2 = parse_double(key, value);
    } else {
      raise(ErrorKind::param, "bad_config", "unknown configuration key: " + key);
    }
  }
  validate_config(cfg);
  return cfg;
}

inline void validate_config(const PipelineConfig& cfg) {
  if (known_methods().find(cfg.method) == known_methods().end()) {
    raise(ErrorKind::param, "bad_config", "unknown method: " + cfg.method);
  }
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) {
    raise(ErrorKind::param, "bad_config", "test-fraction must lie in (0,1)");
  }
  if (cfg.cv_folds < 2) raise(ErrorKind::param, "bad_config", "cv-folds must be >= 2");
  if (cfg.jobs < 1) raise(ErrorKind::param, "bad_config", "jobs must be >= 1");
  if (!(cfg.augment_plan.stretch_lo >= 0.5 && cfg.augment_plan.stretch_hi <= 2.0 &&
        cfg.augment_plan.stretch_lo <= cfg.augment_plan.stretch_hi)) {
    raise(ErrorKind::param, "bad_config", "stretch range must lie within [0.5, 2.0]");
  }
  if (!(std::abs(cfg.augment_plan.shift_fraction) < 1.0)) {
    raise(ErrorKind::param, "bad_config", "|shift| must be < 1");
  }
  if (cfg.augment_plan.max_semitones < 1 || cfg.augment_plan.max_semitones > 12) {
    raise(ErrorKind::param, "bad_config", "semitones must lie in [1, 12]");
  }
  if (!(cfg.gate.quiet_fraction > 0.0 && cfg.gate.quiet_fraction < 1.0)) {
    raise(ErrorKind::param, "bad_config", "gate-quiet must lie in (0,1)");
  }
  if (cfg.gate.threshold_sigma < 0.0) {
    raise(ErrorKind::param, "bad_config", "gate-sigma must be >= 0");
  }
  if (cfg.gate.hop <= 0 || cfg.gate.hop > cfg.gate.n_fft || !is_power_of_two(cfg.gate.n_fft)) {
    raise(ErrorKind::param, "bad_config", "gate FFT/hop sizes are invalid");
  }
  if (cfg.trim.top_db <= 0.0) raise(ErrorKind::param, "bad_config", "top-db must be positive");
  if (cfg.mel_bands < 1 || cfg.mfcc_filters < 21) {
    raise(ErrorKind::param, "bad_config", "mel-bands must be >= 1 and mfcc-filters >= 21");
  }
  if (cfg.svm_c <= 0.0) raise(ErrorKind::param, "bad_config", "svm-c must be positive");
  if (cfg.knn_k < 1) raise(ErrorKind::param, "bad_config", "knn-k must be >= 1");
  if (cfg.forest_trees < 1 || cfg.bags < 1 || cfg.boost_rounds < 1 || cfg.stack_folds < 2) {
    raise(ErrorKind::param, "bad_config", "ensemble sizes must be positive (stack-folds >= 2)");
  }
  if (cfg.logreg_l2 < 0.0) raise(ErrorKind::param, "bad_config", "logreg-l2 must be >= 0");
}

// Flat UTF-8 key=value file with '#' comments.
inline std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) raise(ErrorKind::io, "io_error", "cannot open config file: " + path);
  std::map<std::string, std::string> m;
  std::string line;
  int line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim_ws = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    line = trim_ws(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      raise(ErrorKind::param, "bad_config",
            "expected key=value at " + path + ":" + std::to_string(line_no));
    }
    m[trim_ws(line.substr(0, eq))] = trim_ws(line.substr(eq + 1));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Pipeline steps
// ---------------------------------------------------------------------------

inline PreprocessParams preprocess_params(const PipelineConfig& cfg) {
  return {cfg.gate, cfg.trim};
}

inline MelFeatureParams mel_params(const PipelineConfig& cfg) {
  MelFeatureParams p;
  p.n_mels = cfg.mel_bands;
  return p;
}

inline MfccFeatureParams mfcc_params(const PipelineConfig& cfg) {
  MfccFeatureParams p;
  p.n_filters = cfg.mfcc_filters;
  p.mode = cfg.mfcc_mode;
  return p;
}

inline FeatureVector extract_for(const PipelineConfig& cfg, const AudioClip& clip) {
  return extract_feature(clip, cfg.features, mel_params(cfg), mfcc_params(cfg));
}

inline AugmentPlan augment_plan_for(const PipelineConfig& cfg) {
  AugmentPlan plan = cfg.augment_plan;
  plan.seed = mix_seed(cfg.seed, hash64("augment"));
  return plan;
}

// Trains the configured method on a ready dataset.
inline AnyModel train_any(const PipelineConfig& cfg, const LabeledDataset& ds) {
  const std::uint64_t seed = mix_seed(cfg.seed, hash64("train"));
  const std::string& method = cfg.method;

  LearnerSpec svm;
  svm.kind = LearnerKind::svm;
  svm.svm.c = cfg.svm_c;
  LearnerSpec knn;
  knn.kind = LearnerKind::knn;
  knn.knn.k = cfg.knn_k;
  LearnerSpec dtree;
  dtree.kind = LearnerKind::dtree;
  dtree.tree.max_depth = cfg.tree_depth;
  dtree.tree.min_leaf = cfg.tree_min_leaf;
  LearnerSpec gnb;
  gnb.kind = LearnerKind::gnb;
  LearnerSpec forest;
  forest.kind = LearnerKind::rforest;
  forest.forest.n_trees = cfg.forest_trees;
  forest.forest.max_features = cfg.forest_features;
  forest.forest.jobs = cfg.jobs;

  Committee committee;
  committee.members = {svm, knn, dtree, gnb, forest};

  if (method == "svm") return train_learner(ds, svm, seed);
  if (method == "knn") return train_learner(ds, knn, seed);
  if (method == "dtree") return train_learner(ds, dtree, seed);
  if (method == "gnb") return train_learner(ds, gnb, seed);
  if (method == "rforest") return train_learner(ds, forest, seed);
  if (method == "voting") return train_voting(ds, committee, seed);
  if (method == "bagging") {
    BaggingParams params;
    params.base = dtree;
    params.n_bags = cfg.bags;
    params.seed = seed;
    return train_bagging(ds, params);
  }
  if (method == "boosting") {
    AdaBoostParams params;
    params.base.max_depth = cfg.boost_depth;
    params.rounds = cfg.boost_rounds;
    params.seed = seed;
    return train_adaboost_m1(ds, params);
  }
  StackingParams params;
  params.committee = committee;
  params.oof_folds = cfg.stack_folds;
  params.seed = seed;
  if (method == "stacking-lr") {
    params.meta = StackingMeta::logistic;
  } else if (method == "stacking-rf") {
    params.meta = StackingMeta::rforest;
  } else {
    params.meta = StackingMeta::extra_trees;
  }
  return train_stacking(ds, params);
}

// Bundle prediction surface: WAV in, label + scores out.
struct ClipPrediction {
  std::string label;
  std::vector<double> scores;
};

inline ClipPrediction predict_clip(const ModelBundle& bundle, const AudioClip& clip) {
  const PipelineConfig cfg = config_from_map(bundle.config);
  const AudioClip prepped = preprocess_pipeline(clip, preprocess_params(cfg));
  const FeatureVector fv = extract_for(cfg, prepped);
  ClipPrediction out;
  out.scores = predict_scores(bundle.model, fv.values);
  out.label = bundle.class_names[static_cast<std::size_t>(predict(bundle.model, fv.values))];
  return out;
}

}  // namespace mispron

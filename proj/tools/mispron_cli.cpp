// mispron: phoneme mispronunciation detection pipeline over classical
// learners and ensembles. Subcommands cover corpus synthesis, preprocessing,
// augmentation, feature extraction, training, evaluation, prediction and
// latency benchmarking.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mispron/eval.hpp"
#include "mispron/synth.hpp"

namespace fs = std::filesystem;
using namespace mispron;

namespace {

int exit_code_for(const Error& error) {
  switch (error.kind()) {
    case ErrorKind::param: return 2;
    case ErrorKind::io:
    case ErrorKind::format:
    case ErrorKind::data: return 3;
    case ErrorKind::training: return 4;
    case ErrorKind::version: return 5;
  }
  return 3;
}

std::string hex_hash(const std::string& content) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash64(content)));
  return buf;
}

std::string file_hash(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) raise(ErrorKind::io, "io_error", "cannot open " + path);
  std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return hex_hash(content);
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) raise(ErrorKind::io, "io_error", "cannot write " + path);
  f << content;
}

// Options arriving from several sources, later sources win:
// defaults < --config file < --from-record < explicit flags / --set pairs.
struct ConfigCli {
  std::string config_path;
  std::string record_path;
  std::vector<std::string> overrides;  // key=value
  std::map<std::string, std::string> flag_values;

  void add_flag_value(const std::string& key, const std::string& value) {
    flag_values[key] = value;
  }

  PipelineConfig resolve() const {
    std::map<std::string, std::string> merged = config_to_map(PipelineConfig{});
    if (!config_path.empty()) {
      for (const auto& [k, v] : load_config_file(config_path)) merged[k] = v;
    }
    if (!record_path.empty()) {
      std::ifstream f(record_path);
      if (!f) raise(ErrorKind::io, "io_error", "cannot open record: " + record_path);
      Json j;
      try {
        f >> j;
      } catch (const Json::exception& e) {
        raise(ErrorKind::format, "bad_record", std::string("record parse failure: ") + e.what());
      }
      for (const auto& [k, v] : j.at("config").get<std::map<std::string, std::string>>()) {
        merged[k] = v;
      }
    }
    for (const auto& [k, v] : flag_values) merged[k] = v;
    for (const auto& pair : overrides) {
      const auto eq = pair.find('=');
      if (eq == std::string::npos) {
        raise(ErrorKind::param, "bad_config", "--set expects key=value, got " + pair);
      }
      merged[pair.substr(0, eq)] = pair.substr(eq + 1);
    }
    return config_from_map(merged);
  }
};

void attach_config_options(CLI::App* cmd, ConfigCli& cli) {
  cmd->add_option("--config", cli.config_path, "flat key=value config file ('#' comments)");
  cmd->add_option("--from-record", cli.record_path,
                  "reproducibility record whose config snapshot to replay");
  cmd->add_option("--set", cli.overrides, "override any config key (key=value, repeatable)");
}

Json repro_record(const std::string& command, const PipelineConfig& cfg,
                  const std::string& manifest_hash, const Json& outputs) {
  return Json{{"format_version", kBundleFormatVersion},
              {"command", command},
              {"config", config_to_map(cfg)},
              {"manifest_hash", manifest_hash},
              {"outputs", outputs}};
}

std::string manifest_hash_of(const CorpusManifest& manifest) {
  std::string blob;
  for (const auto& e : manifest.entries) {
    blob += e.path + "|" + e.label + "|" + e.speaker + "|" + e.group + "|" +
            origin_name(e.origin) + "\n";
    blob += file_hash(e.path) + "\n";
  }
  return hex_hash(blob);
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

int cmd_synth_corpus(const std::string& out_dir, int classes, int takes, std::uint64_t seed,
                     bool verbose) {
  SynthParams params;
  params.classes = classes;
  params.takes_per_class = takes;
  params.seed = seed;
  const int written = generate_synth_corpus(out_dir, params);
  const CorpusManifest manifest = scan_corpus(out_dir);
  save_manifest_csv(manifest, (fs::path(out_dir) / "manifest.csv").string());
  if (verbose) {
    for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << "\n";
  }
  std::cout << "wrote " << written << " clips across " << classes << " classes under " << out_dir
            << "\n";
  return 0;
}

int cmd_prep(const std::string& in_path, const std::string& out_path, const PipelineConfig& cfg,
             bool verbose) {
  const PreprocessParams params = preprocess_params(cfg);
  if (fs::is_directory(in_path)) {
    const CorpusManifest manifest = scan_corpus(in_path);
    int done = 0, skipped = 0;
    for (const auto& e : manifest.entries) {
      const fs::path rel = fs::relative(e.path, in_path);
      const fs::path dst = fs::path(out_path) / rel;
      fs::create_directories(dst.parent_path());
      try {
        write_wav(dst.string(), preprocess_pipeline(load_wav(e.path), params),
                  WavFormat::float32);
        ++done;
      } catch (const Error& err) {
        if (err.code() != "all_silent" && err.code() != "too_short") throw;
        ++skipped;
        if (verbose) std::cerr << "skipped " << e.path << ": " << err.what() << "\n";
      }
    }
    std::cout << "preprocessed " << done << " clips (" << skipped << " skipped) into " << out_path
              << "\n";
    return 0;
  }
  write_wav(out_path, preprocess_pipeline(load_wav(in_path), params), WavFormat::float32);
  std::cout << "preprocessed " << in_path << " -> " << out_path << "\n";
  return 0;
}

int cmd_augment(const std::string& corpus_dir, const std::string& manifest_out,
                const PipelineConfig& cfg, bool verbose) {
  CorpusManifest manifest = scan_corpus(corpus_dir);
  CorpusManifest originals;
  originals.warnings = manifest.warnings;
  for (auto& e : manifest.entries) {
    if (e.origin == EntryOrigin::original) originals.entries.push_back(std::move(e));
  }
  const CorpusManifest expanded = augment_training_set(originals, augment_plan_for(cfg));
  const std::string out =
      manifest_out.empty() ? (fs::path(corpus_dir) / "manifest.csv").string() : manifest_out;
  save_manifest_csv(expanded, out);
  if (verbose) {
    for (const auto& w : expanded.warnings) std::cerr << "warning: " << w << "\n";
  }
  std::cout << "expanded " << originals.entries.size() << " originals to "
            << expanded.entries.size() << " entries; manifest at " << out << "\n";
  return 0;
}

int cmd_extract(const std::string& corpus_dir, const std::string& out_path,
                const PipelineConfig& cfg, bool verbose) {
  const CorpusManifest manifest = scan_corpus(corpus_dir);
  const PreprocessParams prep = preprocess_params(cfg);
  std::vector<FeatureTableRow> rows(manifest.entries.size());
  std::vector<char> keep(manifest.entries.size(), 0);
  parallel_for(manifest.entries.size(), cfg.jobs, [&](std::size_t i) {
    const auto& e = manifest.entries[i];
    try {
      const AudioClip clip = preprocess_pipeline(load_wav(e.path), prep);
      rows[i].group = e.group;
      rows[i].label = e.label;
      rows[i].kind = cfg.features;
      rows[i].values = extract_for(cfg, clip).values;
      keep[i] = 1;
    } catch (const Error& err) {
      if (err.code() != "all_silent" && err.code() != "too_short") throw;
    }
  });
  std::vector<FeatureTableRow> kept;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (keep[i] != 0) {
      kept.push_back(std::move(rows[i]));
    } else if (verbose) {
      std::cerr << "skipped " << manifest.entries[i].path << "\n";
    }
  }
  save_feature_table(kept, out_path);
  std::cout << "wrote " << kept.size() << " feature rows ("
            << feature_kind_name(cfg.features) << ") to " << out_path << "\n";
  return 0;
}

int cmd_train(const std::string& corpus_dir, const std::string& bundle_path,
              const PipelineConfig& cfg, const std::string& command_line, bool verbose) {
  const CorpusManifest manifest = scan_corpus(corpus_dir);
  const HoldoutResult result = run_holdout(manifest, cfg);

  ModelBundle bundle;
  bundle.model = result.model;
  bundle.class_names = result.test.class_names;
  bundle.config = config_to_map(cfg);
  save_bundle(bundle, bundle_path);

  const std::string report_json = report_to_json(result.report).dump(2) + "\n";
  const std::string report_path = bundle_path + ".report.json";
  write_text(report_path, report_json);

  const Json outputs{{"bundle", bundle_path},
                     {"bundle_hash", file_hash(bundle_path)},
                     {"report", report_path},
                     {"report_hash", hex_hash(report_json)}};
  write_text(bundle_path + ".repro.json",
             repro_record(command_line, cfg, manifest_hash_of(manifest), outputs).dump(2) + "\n");

  if (verbose) {
    for (const auto& x : result.report.exclusions) std::cerr << "excluded: " << x << "\n";
  }
  std::cout << report_to_table(result.report);
  std::cout << "bundle: " << bundle_path << "\n";
  return 0;
}

int cmd_evaluate(const std::string& corpus_dir, const std::string& report_path,
                 const std::string& confusion_path, int cv, const PipelineConfig& cfg,
                 const std::string& command_line, bool verbose) {
  const CorpusManifest manifest = scan_corpus(corpus_dir);
  EvaluationReport report;
  if (cv > 0) {
    report = run_cv(manifest, cfg, cv);
  } else {
    report = run_holdout(manifest, cfg).report;
  }
  const std::string report_json = report_to_json(report).dump(2) + "\n";
  if (!confusion_path.empty()) {
    write_text(confusion_path, confusion_to_csv(report.cm, report.class_names));
  }
  if (!report_path.empty()) {
    write_text(report_path, report_json);
    const Json outputs{{"report", report_path}, {"report_hash", hex_hash(report_json)}};
    write_text(report_path + ".repro.json",
               repro_record(command_line, cfg, manifest_hash_of(manifest), outputs).dump(2) + "\n");
  }
  if (verbose) {
    for (const auto& x : report.exclusions) std::cerr << "excluded: " << x << "\n";
  }
  std::cout << report_to_table(report);
  if (report_path.empty()) std::cout << report_json;
  return 0;
}

int cmd_predict(const std::string& bundle_path, const std::string& wav_path) {
  const ModelBundle bundle = load_bundle(bundle_path);
  const AudioClip clip = load_wav(wav_path);
  const auto begin = std::chrono::steady_clock::now();
  const ClipPrediction prediction = predict_clip(bundle, clip);
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin);

  Json scores = Json::object();
  for (std::size_t k = 0; k < prediction.scores.size(); ++k) {
    scores[bundle.class_names[k]] = prediction.scores[k];
  }
  const Json out{{"label", prediction.label},
                 {"scores", std::move(scores)},
                 {"elapsed_seconds", elapsed.count()}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_bench(const std::string& bundle_path, const std::string& corpus_dir, int warmup, int reps) {
  const ModelBundle bundle = load_bundle(bundle_path);
  const CorpusManifest manifest = scan_corpus(corpus_dir);
  std::vector<AudioClip> clips;
  for (const auto& e : manifest.entries) {
    if (e.origin == EntryOrigin::original) clips.push_back(load_wav(e.path));
    if (clips.size() >= 32) break;  // enough variety for a latency benchmark
  }
  const LatencyStats stats = bench_inference(bundle, clips, warmup, reps);
  const Json out{{"mean_seconds", stats.mean_seconds},
                 {"p95_seconds", stats.p95_seconds},
                 {"reps", stats.reps},
                 {"clips", clips.size()},
                 {"note", "wall-clock, machine-dependent"}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phoneme mispronunciation detection pipeline"};
  app.require_subcommand(1);

  bool verbose = false;
  app.add_flag("--verbose", verbose, "print warnings and exclusions");

  std::string command_line;
  for (int i = 0; i < argc; ++i) {
    if (i > 0) command_line += ' ';
    command_line += argv[i];
  }

  // synth-corpus
  auto* synth = app.add_subcommand("synth-corpus", "generate the deterministic synthetic corpus");
  std::string synth_out;
  int synth_classes = 29, synth_takes = 10;
  std::uint64_t synth_seed = 42;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--classes", synth_classes, "number of classes (max 29)");
  synth->add_option("--takes", synth_takes, "takes per class");
  synth->add_option("--seed", synth_seed, "generator seed");

  // shared config plumbing for the pipeline commands
  struct PipelineCmd {
    CLI::App* cmd = nullptr;
    ConfigCli config;
    std::string seed_flag, jobs_flag, features_flag, method_flag;

    void attach(CLI::App* sub) {
      cmd = sub;
      attach_config_options(sub, config);
      sub->add_option("--seed", seed_flag, "master seed");
      sub->add_option("--jobs", jobs_flag, "worker threads");
      sub->add_option("--features", features_flag, "feature kind: mel or mfcc");
      sub->add_option("--method", method_flag, "model id (svm knn dtree gnb rforest voting "
                                               "bagging boosting stacking-lr stacking-rf "
                                               "stacking-et)");
    }

    PipelineConfig resolve() {
      if (!seed_flag.empty()) config.add_flag_value("seed", seed_flag);
      if (!jobs_flag.empty()) config.add_flag_value("jobs", jobs_flag);
      if (!features_flag.empty()) config.add_flag_value("features", features_flag);
      if (!method_flag.empty()) config.add_flag_value("method", method_flag);
      return config.resolve();
    }
  };

  // prep
  auto* prep = app.add_subcommand("prep", "noise-gate and trim WAVs");
  PipelineCmd prep_cfg;
  prep_cfg.attach(prep);
  std::string prep_in, prep_out;
  std::string prep_top_db, prep_n_fft, prep_hop, prep_sigma;
  prep->add_option("--in", prep_in, "input WAV or corpus directory")->required();
  prep->add_option("--out", prep_out, "output WAV or directory")->required();
  prep->add_option("--top-db", prep_top_db, "trim threshold below peak, dB");
  prep->add_option("--n-fft", prep_n_fft, "gate FFT size");
  prep->add_option("--hop", prep_hop, "gate hop size");
  prep->add_option("--gate-sigma", prep_sigma, "gate threshold sigma");

  // augment
  auto* augment = app.add_subcommand("augment", "write 4 derivatives per original");
  PipelineCmd augment_cfg;
  augment_cfg.attach(augment);
  std::string augment_corpus, augment_manifest;
  std::string aug_snr, aug_shift, aug_lo, aug_hi, aug_semitones;
  augment->add_option("--corpus", augment_corpus, "corpus directory")->required();
  augment->add_option("--manifest", augment_manifest, "manifest output path");
  augment->add_option("--snr-db", aug_snr, "noise SNR in dB");
  augment->add_option("--shift", aug_shift, "circular shift fraction");
  augment->add_option("--stretch-lo", aug_lo, "stretch rate lower bound");
  augment->add_option("--stretch-hi", aug_hi, "stretch rate upper bound");
  augment->add_option("--semitones", aug_semitones, "max pitch shift magnitude");

  // extract
  auto* extract = app.add_subcommand("extract", "preprocess and write a feature table CSV");
  PipelineCmd extract_cfg;
  extract_cfg.attach(extract);
  std::string extract_corpus, extract_out;
  extract->add_option("--corpus", extract_corpus, "corpus directory")->required();
  extract->add_option("--out", extract_out, "feature table path")->required();

  // train
  auto* train = app.add_subcommand("train", "holdout-train a model and save the bundle");
  PipelineCmd train_cfg;
  train_cfg.attach(train);
  std::string train_corpus, train_out;
  train->add_option("--corpus", train_corpus, "corpus directory")->required();
  train->add_option("--out", train_out, "bundle output path")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "holdout or k-fold evaluation");
  PipelineCmd eval_cfg;
  eval_cfg.attach(evaluate);
  std::string eval_corpus, eval_out, eval_confusion;
  int eval_cv = 0;
  evaluate->add_option("--corpus", eval_corpus, "corpus directory")->required();
  evaluate->add_option("--out", eval_out, "report JSON path");
  evaluate->add_option("--confusion", eval_confusion, "confusion matrix CSV path");
  evaluate->add_option("--cv", eval_cv, "fold count; omit for a single holdout");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "classify one WAV with a saved bundle");
  std::string predict_bundle, predict_wav;
  predict_cmd->add_option("--bundle", predict_bundle, "model bundle path")->required();
  predict_cmd->add_option("--wav", predict_wav, "input WAV")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "per-sample inference latency");
  std::string bench_bundle, bench_corpus;
  int bench_warmup = 10, bench_reps = 100;
  bench->add_option("--bundle", bench_bundle, "model bundle path")->required();
  bench->add_option("--corpus", bench_corpus, "corpus directory for probe clips")->required();
  bench->add_option("--warmup", bench_warmup, "unmeasured warmup repetitions");
  bench->add_option("--reps", bench_reps, "measured repetitions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) {
      return cmd_synth_corpus(synth_out, synth_classes, synth_takes, synth_seed, verbose);
    }
    if (prep->parsed()) {
      if (!prep_top_db.empty()) prep_cfg.config.add_flag_value("top-db", prep_top_db);
      if (!prep_n_fft.empty()) prep_cfg.config.add_flag_value("gate-n-fft", prep_n_fft);
      if (!prep_hop.empty()) prep_cfg.config.add_flag_value("gate-hop", prep_hop);
      if (!prep_sigma.empty()) prep_cfg.config.add_flag_value("gate-sigma", prep_sigma);
      return cmd_prep(prep_in, prep_out, prep_cfg.resolve(), verbose);
    }
    if (augment->parsed()) {
      if (!aug_snr.empty()) augment_cfg.config.add_flag_value("snr-db", aug_snr);
      if (!aug_shift.empty()) augment_cfg.config.add_flag_value("shift", aug_shift);
      if (!aug_lo.empty()) augment_cfg.config.add_flag_value("stretch-lo", aug_lo);
      if (!aug_hi.empty()) augment_cfg.config.add_flag_value("stretch-hi", aug_hi);
      if (!aug_semitones.empty()) augment_cfg.config.add_flag_value("semitones", aug_semitones);
      return cmd_augment(augment_corpus, augment_manifest, augment_cfg.resolve(), verbose);
    }
    if (extract->parsed()) {
      return cmd_extract(extract_corpus, extract_out, extract_cfg.resolve(), verbose);
    }
    if (train->parsed()) {
      return cmd_train(train_corpus, train_out, train_cfg.resolve(), command_line, verbose);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(eval_corpus, eval_out, eval_confusion, eval_cv, eval_cfg.resolve(),
                          command_line, verbose);
    }
    if (predict_cmd->parsed()) {
      return cmd_predict(predict_bundle, predict_wav);
    }
    if (bench->parsed()) {
      return cmd_bench(bench_bundle, bench_corpus, bench_warmup, bench_reps);
    }
  } catch (const Error& error) {
    if (predict_cmd->parsed()) {
      // machine-readable failure for the prediction surface
      const Json out{{"error", Json{{"code", error.code()}, {"message", error.what()}}}};
      std::cout << out.dump(2) << "\n";
    } else {
      std::cerr << "error: " << error.what() << "\n";
    }
    return exit_code_for(error);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}

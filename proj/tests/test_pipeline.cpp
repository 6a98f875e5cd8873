#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "mispron/eval.hpp"
#include "mispron/synth.hpp"

using namespace mispron;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<char> slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// small synthetic corpus shared by the pipeline tests
const std::filesystem::path& small_corpus() {
  static const std::filesystem::path dir = [] {
    const auto d = fresh_dir("mispron_pipe_corpus");
    SynthParams params;
    params.classes = 4;
    params.takes_per_class = 6;
    params.base_seconds = 0.5;
    params.seed = 7;
    generate_synth_corpus(d.string(), params);
    return d;
  }();
  return dir;
}

PipelineConfig small_config(const std::string& method) {
  PipelineConfig cfg;
  cfg.method = method;
  cfg.seed = 11;
  cfg.test_fraction = 0.34;  // 2 of 6 groups per class
  cfg.forest_trees = 20;
  cfg.bags = 10;
  cfg.boost_rounds = 10;
  return cfg;
}

}  // namespace

TEST_CASE("synthetic corpus layout, counts and bit-identical regeneration") {
  const auto dir_a = fresh_dir("mispron_synth_a");
  const auto dir_b = fresh_dir("mispron_synth_b");
  SynthParams params;
  params.classes = 3;
  params.takes_per_class = 2;
  params.base_seconds = 0.4;
  params.seed = 99;
  CHECK(generate_synth_corpus(dir_a.string(), params) == 6);
  CHECK(generate_synth_corpus(dir_b.string(), params) == 6);

  const CorpusManifest manifest = scan_corpus(dir_a.string());
  CHECK(manifest.entries.size() == 6);
  CHECK(manifest.class_names() == std::vector<std::string>{"class_00", "class_01", "class_02"});
  std::set<std::string> groups;
  for (const auto& e : manifest.entries) {
    CHECK(e.origin == EntryOrigin::original);
    groups.insert(e.group);
  }
  CHECK(groups.size() == 6);  // globally unique stems

  for (const auto& e : manifest.entries) {
    const auto rel = std::filesystem::relative(e.path, dir_a);
    CHECK(slurp(dir_a / rel) == slurp(dir_b / rel));
  }
}

TEST_CASE("singleton synthetic corpus") {
  const auto dir = fresh_dir("mispron_synth_single");
  SynthParams params;
  params.classes = 1;
  params.takes_per_class = 1;
  params.base_seconds = 0.3;
  CHECK(generate_synth_corpus(dir.string(), params) == 1);
  // one class is not trainable but must scan fine
  const CorpusManifest manifest = scan_corpus(dir.string());
  CHECK(manifest.entries.size() == 1);
}

TEST_CASE("feature table CSV round-trips doubles losslessly") {
  Rng rng(55);
  std::vector<FeatureTableRow> rows;
  for (int i = 0; i < 12; ++i) {
    FeatureTableRow row;
    row.group = "g" + std::to_string(i);
    row.label = i % 2 == 0 ? "even" : "odd";
    row.kind = FeatureKind::mfcc20;
    for (int j = 0; j < 20; ++j) {
      // awkward values: tiny, huge, negative, non-terminating binary fractions
      row.values.push_back(rng.uniform(-1.0, 1.0) * std::pow(10.0, rng.uniform_int(-12, 8)));
    }
    rows.push_back(std::move(row));
  }
  const auto path = (fresh_dir("mispron_feat_table") / "features.csv").string();
  save_feature_table(rows, path);
  const auto loaded = load_feature_table(path);
  REQUIRE(loaded.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(loaded[i].group == rows[i].group);
    CHECK(loaded[i].label == rows[i].label);
    CHECK(loaded[i].kind == rows[i].kind);
    CHECK(loaded[i].values == rows[i].values);  // bit-exact through %.17g
  }

  const LabeledDataset ds = dataset_from_rows(loaded);
  CHECK(ds.n == 12);
  CHECK(ds.d == 20);
  CHECK(ds.class_names == std::vector<std::string>{"even", "odd"});
  CHECK(ds.labels[0] == 0);
  CHECK(ds.labels[1] == 1);
}

TEST_CASE("config map round trip and validation") {
  PipelineConfig cfg;
  cfg.method = "stacking-rf";
  cfg.features = FeatureKind::mfcc20;
  cfg.seed = 123;
  cfg.augment_plan.snr_db = 25.0;
  cfg.mfcc_mode = MfccMode::deltas;
  const auto m = config_to_map(cfg);
  const PipelineConfig back = config_from_map(m);
  CHECK(config_to_map(back) == m);

  auto bad = m;
  bad["not-a-key"] = "1";
  CHECK_THROWS_WITH_AS(config_from_map(bad), doctest::Contains("unknown configuration key"),
                       Error);

  auto invalid = m;
  invalid["test-fraction"] = "1.5";
  CHECK_THROWS_WITH_AS(config_from_map(invalid), doctest::Contains("bad_config"), Error);

  auto not_a_number = m;
  not_a_number["svm-c"] = "abc";
  CHECK_THROWS_WITH_AS(config_from_map(not_a_number), doctest::Contains("bad_config"), Error);
}

TEST_CASE("config files parse with comments and whitespace") {
  const auto path = fresh_dir("mispron_cfg") / "pipeline.conf";
  {
    std::ofstream f(path);
    f << "# pipeline settings\n"
      << "features = mfcc\n"
      << "method=knn   # inline comment\n"
      << "\n"
      << "  knn-k = 5\n";
  }
  const auto m = load_config_file(path.string());
  CHECK(m.at("features") == "mfcc");
  CHECK(m.at("method") == "knn");
  CHECK(m.at("knn-k") == "5");

  const auto broken = fresh_dir("mispron_cfg_bad") / "broken.conf";
  {
    std::ofstream f(broken);
    f << "just some words\n";
  }
  CHECK_THROWS_WITH_AS(load_config_file(broken.string()), doctest::Contains("bad_config"), Error);
}

TEST_CASE("holdout: augmentation never touches the test side") {
  const CorpusManifest manifest = scan_corpus(small_corpus().string());

  PipelineConfig with_aug = small_config("gnb");
  PipelineConfig without_aug = with_aug;
  without_aug.augment = false;

  const HoldoutResult a = run_holdout(manifest, with_aug);
  const HoldoutResult b = run_holdout(manifest, without_aug);

  // identical test sets either way
  CHECK(a.test.features == b.test.features);
  CHECK(a.test.labels == b.test.labels);
  // training side expands 5x with augmentation
  CHECK(a.train.n == 5 * b.train.n);
  // no test group ever appears in the training rows
  const std::set<std::string> test_groups(a.test.groups.begin(), a.test.groups.end());
  for (const auto& g : a.train.groups) CHECK(test_groups.find(g) == test_groups.end());
}

TEST_CASE("holdout reports are deterministic") {
  const CorpusManifest manifest = scan_corpus(small_corpus().string());
  const PipelineConfig cfg = small_config("voting");
  const HoldoutResult a = run_holdout(manifest, cfg);
  const HoldoutResult b = run_holdout(manifest, cfg);
  CHECK(report_to_json(a.report).dump() == report_to_json(b.report).dump());
  CHECK(model_to_json(a.model).dump() == model_to_json(b.model).dump());
  CHECK(a.report.accuracy >= 0.75);  // engineered separable classes
  REQUIRE(a.report.member_accuracy.size() == 5);
}

TEST_CASE("holdout output is independent of the job count") {
  const CorpusManifest manifest = scan_corpus(small_corpus().string());
  PipelineConfig serial = small_config("gnb");
  PipelineConfig threaded = serial;
  threaded.jobs = 4;
  const HoldoutResult a = run_holdout(manifest, serial);
  const HoldoutResult b = run_holdout(manifest, threaded);
  CHECK(report_to_json(a.report).dump() == report_to_json(b.report).dump());
  CHECK(a.train.features == b.train.features);
}

TEST_CASE("cross-validation produces one report per fold") {
  const CorpusManifest manifest = scan_corpus(small_corpus().string());
  PipelineConfig cfg = small_config("dtree");
  const EvaluationReport report = run_cv(manifest, cfg, 3);
  REQUIRE(report.folds.size() == 3);
  int validated = 0;
  double lo = 1.0, hi = 0.0;
  for (const auto& fold : report.folds) {
    validated += fold.n_validated;
    lo = std::min(lo, fold.accuracy);
    hi = std::max(hi, fold.accuracy);
  }
  CHECK(validated == 24);  // every original validates exactly once
  CHECK(report.accuracy >= lo);
  CHECK(report.accuracy <= hi);
}

TEST_CASE("all-silent samples are excluded by name, not fatal") {
  const auto dir = fresh_dir("mispron_silent_corpus");
  SynthParams params;
  params.classes = 2;
  params.takes_per_class = 4;
  params.base_seconds = 0.4;
  params.seed = 3;
  generate_synth_corpus(dir.string(), params);
  // overwrite one take with digital silence
  AudioClip silent;
  silent.sample_rate = 22050;
  silent.samples.assign(8000, 0.0);
  const auto victim = dir / "class_00" / "s01_class_00-t01.wav";
  REQUIRE(std::filesystem::exists(victim));
  write_wav(victim.string(), silent);

  const CorpusManifest manifest = scan_corpus(dir.string());
  const HoldoutResult result = run_holdout(manifest, small_config("gnb"));
  REQUIRE(result.report.exclusions.size() == 1);
  CHECK(result.report.exclusions[0].find("s01_class_00-t01") != std::string::npos);
}

TEST_CASE("predict_clip and bench run off a saved bundle") {
  const CorpusManifest manifest = scan_corpus(small_corpus().string());
  const PipelineConfig cfg = small_config("gnb");
  const HoldoutResult result = run_holdout(manifest, cfg);

  ModelBundle bundle;
  bundle.model = result.model;
  bundle.class_names = result.test.class_names;
  bundle.config = config_to_map(cfg);
  const auto path = (fresh_dir("mispron_bundle_dir") / "model.json").string();
  save_bundle(bundle, path);
  const ModelBundle loaded = load_bundle(path);

  const AudioClip clip = load_wav(manifest.entries[0].path);
  const ClipPrediction p1 = predict_clip(loaded, clip);
  const ClipPrediction p2 = predict_clip(loaded, clip);
  CHECK(p1.label == p2.label);
  CHECK(p1.scores == p2.scores);
  CHECK(p1.scores.size() == 4);

  const LatencyStats stats = bench_inference(loaded, {clip}, 2, 5);
  CHECK(stats.reps == 5);
  CHECK(stats.mean_seconds > 0.0);
  CHECK(stats.mean_seconds <= stats.p95_seconds);

  const LatencyStats single = bench_inference(loaded, {clip}, 0, 1);
  CHECK(single.mean_seconds == single.p95_seconds);
}

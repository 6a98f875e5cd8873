#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "mispron/augment.hpp"
#include "mispron/corpus.hpp"
#include "mispron/split.hpp"

using namespace mispron;

namespace {
constexpr int kRate = 22050;
}

TEST_CASE("add_noise hits the requested SNR within 0.5 dB") {
  const AudioClip tone = make_sine(440.0, 1.0, kRate, 1.0);  // unit-ish power
  const AudioClip noisy = add_noise(tone, 20.0, 4242);
  REQUIRE(noisy.samples.size() == tone.samples.size());
  std::vector<double> noise(tone.samples.size());
  for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = noisy.samples[i] - tone.samples[i];
  const double measured = 10.0 * std::log10(signal_power(tone.samples) / signal_power(noise));
  CHECK(std::abs(measured - 20.0) < 0.5);
}

TEST_CASE("add_noise at 60 dB adds ~1e-3 relative RMS") {
  const AudioClip tone = make_sine(220.0, 0.5, kRate, 0.7);
  const AudioClip noisy = add_noise(tone, 60.0, 7);
  std::vector<double> noise(tone.samples.size());
  for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = noisy.samples[i] - tone.samples[i];
  const double ratio = rms(noise) / rms(tone.samples);
  CHECK(ratio == doctest::Approx(1e-3).epsilon(0.1));
}

TEST_CASE("add_noise is deterministic and rejects silence / bad params") {
  const AudioClip tone = make_sine(300.0, 0.2, kRate, 0.5);
  const AudioClip a = add_noise(tone, 20.0, 99);
  const AudioClip b = add_noise(tone, 20.0, 99);
  CHECK(a.samples == b.samples);

  AudioClip zeros;
  zeros.sample_rate = kRate;
  zeros.samples.assign(1000, 0.0);
  CHECK_THROWS_WITH_AS(add_noise(zeros, 20.0, 1), doctest::Contains("zero_signal_power"), Error);
  CHECK_THROWS_WITH_AS(add_noise(tone, std::numeric_limits<double>::infinity(), 1),
                       doctest::Contains("bad_param"), Error);
}

TEST_CASE("time_shift rotates circularly") {
  AudioClip clip;
  clip.sample_rate = 4;
  clip.samples = {1.0, 2.0, 3.0, 4.0};
  const AudioClip forward = time_shift(clip, 0.25);
  CHECK(forward.samples == std::vector<double>{4.0, 1.0, 2.0, 3.0});
  const AudioClip none = time_shift(clip, 0.0);
  CHECK(none.samples == clip.samples);
  const AudioClip back = time_shift(clip, -0.25);
  CHECK(back.samples == std::vector<double>{2.0, 3.0, 4.0, 1.0});
}

TEST_CASE("time_shift preserves the sample multiset") {
  const AudioClip clip = add_noise(make_sine(500.0, 0.3, kRate, 0.4), 10.0, 5);
  const AudioClip shifted = time_shift(clip, 0.37);
  auto a = clip.samples, b = shifted.samples;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
}

TEST_CASE("time_stretch at rate 1.0 is a near-identity") {
  const AudioClip tone = make_sine(440.0, 1.0, kRate, 0.8);
  const AudioClip out = time_stretch(tone, 1.0);
  CHECK(std::llabs(static_cast<long long>(out.samples.size()) -
                   static_cast<long long>(tone.samples.size())) <= 512);
  const std::size_t n = std::min(out.samples.size(), tone.samples.size());
  std::vector<double> a(tone.samples.begin(), tone.samples.begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<double> b(out.samples.begin(), out.samples.begin() + static_cast<std::ptrdiff_t>(n));
  CHECK(normalized_correlation(a, b) >= 0.99);
}

TEST_CASE("time_stretch changes duration, not pitch") {
  const AudioClip tone = make_sine(440.0, 1.0, kRate, 0.8);
  const int bin_before = dominant_bin(tone);

  SUBCASE("rate 0.9 lengthens by 1/0.9") {
    const AudioClip out = time_stretch(tone, 0.9);
    const auto expected = static_cast<long long>(std::llround(tone.samples.size() / 0.9));
    CHECK(std::llabs(static_cast<long long>(out.samples.size()) - expected) <= 512);
    CHECK(std::abs(dominant_bin(out) - bin_before) <= 1);
  }
  SUBCASE("rate 2.0 halves a 2 s clip") {
    const AudioClip two = make_sine(440.0, 2.0, kRate, 0.8);
    const AudioClip out = time_stretch(two, 2.0);
    CHECK(std::llabs(static_cast<long long>(out.samples.size()) -
                     static_cast<long long>(two.samples.size() / 2)) <= 512);
    CHECK(std::abs(dominant_bin(out) - bin_before) <= 1);
  }
  SUBCASE("rate outside [0.5, 2] is rejected") {
    CHECK_THROWS_WITH_AS(time_stretch(tone, 0.4), doctest::Contains("bad_param"), Error);
    CHECK_THROWS_WITH_AS(time_stretch(tone, 2.5), doctest::Contains("bad_param"), Error);
  }
}

TEST_CASE("pitch_shift moves pitch and keeps duration") {
  const AudioClip tone = make_sine(440.0, 1.0, kRate, 0.8);

  SUBCASE("0 semitones is a near-identity") {
    const AudioClip out = pitch_shift(tone, 0.0);
    REQUIRE(out.samples.size() == tone.samples.size());
    CHECK(normalized_correlation(tone.samples, out.samples) >= 0.99);
  }
  SUBCASE("+12 semitones doubles the frequency") {
    const AudioClip out = pitch_shift(tone, 12.0);
    REQUIRE(out.samples.size() == tone.samples.size());
    CHECK(std::abs(dominant_bin(out) - hz_to_bin(880.0, 2048, kRate)) <= 1);
  }
  SUBCASE("-12 semitones halves the frequency") {
    const AudioClip high = make_sine(880.0, 1.0, kRate, 0.8);
    const AudioClip out = pitch_shift(high, -12.0);
    REQUIRE(out.samples.size() == high.samples.size());
    CHECK(std::abs(dominant_bin(out) - hz_to_bin(440.0, 2048, kRate)) <= 1);
  }
  SUBCASE("out-of-range semitones are rejected") {
    CHECK_THROWS_WITH_AS(pitch_shift(tone, 13.0), doctest::Contains("bad_param"), Error);
  }
}

namespace {

std::filesystem::path fresh_corpus_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// tiny corpus: `classes` classes x `takes` distinct tones
void write_tiny_corpus(const std::filesystem::path& root, int classes, int takes) {
  for (int c = 0; c < classes; ++c) {
    const auto dir = root / ("class_" + std::to_string(c));
    std::filesystem::create_directories(dir);
    for (int t = 0; t < takes; ++t) {
      const double freq = 200.0 + 60.0 * c + 3.0 * t;
      AudioClip clip = make_sine(freq, 0.4, kRate, 0.6);
      write_wav((dir / ("s0" + std::to_string(t) + "_take" + std::to_string(c) + "-" +
                        std::to_string(t) + ".wav"))
                    .string(),
                clip);
    }
  }
}

}  // namespace

TEST_CASE("augment_training_set expands 5x and keeps groups") {
  const auto root = fresh_corpus_dir("mispron_aug_corpus");
  write_tiny_corpus(root, 2, 3);
  const CorpusManifest manifest = scan_corpus(root.string());
  REQUIRE(manifest.entries.size() == 6);

  AugmentPlan plan;
  plan.seed = 11;
  const CorpusManifest expanded = augment_training_set(manifest, plan);
  CHECK(expanded.entries.size() == 30);

  // each original contributes exactly four derivatives sharing its group
  for (const auto& e : manifest.entries) {
    int derivatives = 0;
    for (const auto& x : expanded.entries) {
      if (x.group == e.group && x.origin == EntryOrigin::augmented) {
        ++derivatives;
        CHECK(x.label == e.label);
      }
    }
    CHECK(derivatives == 4);
  }

  // a rescan of the directory tree sees the derivative files with the same groups
  const CorpusManifest rescanned = scan_corpus(root.string());
  CHECK(rescanned.entries.size() == 30);
  std::size_t augmented = 0;
  for (const auto& e : rescanned.entries) {
    if (e.origin == EntryOrigin::augmented) ++augmented;
  }
  CHECK(augmented == 24);
}

TEST_CASE("augmented entries never leak into test or validation folds") {
  const auto root = fresh_corpus_dir("mispron_leak_corpus");
  write_tiny_corpus(root, 3, 4);
  const CorpusManifest manifest = scan_corpus(root.string());

  // split first, then augment only the training side
  const SplitPlan holdout = stratified_split(manifest, 0.25, 9);
  CorpusManifest training;
  for (int idx : holdout.train_indices) {
    training.entries.push_back(manifest.entries[static_cast<std::size_t>(idx)]);
  }
  AugmentPlan plan;
  plan.seed = 5;
  const CorpusManifest expanded = augment_training_set(training, plan);
  CHECK(expanded.entries.size() == 5 * training.entries.size());

  // exhaustive scan: no augmented entry's group appears among test groups
  std::set<std::string> test_groups;
  for (int idx : holdout.test_indices) {
    test_groups.insert(manifest.entries[static_cast<std::size_t>(idx)].group);
  }
  for (const auto& e : expanded.entries) {
    CHECK(test_groups.find(e.group) == test_groups.end());
  }

  // plans built over a manifest containing derivatives only ever place
  // originals in test/validation
  const CorpusManifest rescanned = scan_corpus(root.string());
  const SplitPlan holdout2 = stratified_split(rescanned, 0.25, 9);
  for (int idx : holdout2.test_indices) {
    CHECK(rescanned.entries[static_cast<std::size_t>(idx)].origin == EntryOrigin::original);
  }
  const SplitPlan folds = kfold(rescanned, 2, 3);
  for (const auto& fold : folds.folds) {
    for (int idx : fold.validation_indices) {
      CHECK(rescanned.entries[static_cast<std::size_t>(idx)].origin == EntryOrigin::original);
    }
  }
}

TEST_CASE("augmentation draws are deterministic per (seed, group)") {
  const AudioClip tone = make_sine(440.0, 0.5, kRate, 0.7);
  AugmentPlan plan;
  plan.seed = 123;
  for (AugmentTechnique technique : kAllTechniques) {
    const AudioClip a = apply_augmentation(tone, technique, plan, "groupA");
    const AudioClip b = apply_augmentation(tone, technique, plan, "groupA");
    CHECK(a.samples == b.samples);
  }
  // a different group draws different noise
  const AudioClip a = apply_augmentation(tone, AugmentTechnique::noise, plan, "groupA");
  const AudioClip c = apply_augmentation(tone, AugmentTechnique::noise, plan, "groupB");
  CHECK(a.samples != c.samples);
}

TEST_CASE("augmentations preserve rate and length contracts") {
  const AudioClip tone = make_sine(440.0, 0.8, kRate, 0.7);
  AugmentPlan plan;
  plan.seed = 77;
  const AudioClip noise = apply_augmentation(tone, AugmentTechnique::noise, plan, "g");
  const AudioClip shift = apply_augmentation(tone, AugmentTechnique::shift, plan, "g");
  const AudioClip pitch = apply_augmentation(tone, AugmentTechnique::pitch, plan, "g");
  CHECK(noise.samples.size() == tone.samples.size());
  CHECK(shift.samples.size() == tone.samples.size());
  CHECK(pitch.samples.size() == tone.samples.size());
  for (const AudioClip* c : {&noise, &shift, &pitch}) CHECK(c->sample_rate == kRate);
}

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "mispron/audio.hpp"
#include "mispron/dsp.hpp"
#include "mispron/error.hpp"
#include "mispron/rng.hpp"

namespace mispron {

// Desk-scale stand-in corpus: harmonic tones, not human speech. Each class
// gets a distinct fundamental, spectral tilt and formant-like noise band;
// takes jitter in pitch, duration and amplitude. Deterministic under seed,
// down to the written bytes.
struct SynthParams {
  int classes = 29;
  int takes_per_class = 10;
  int speakers = 11;
  int sample_rate = 22050;
  double base_seconds = 1.0;
  std::uint64_t seed = 42;
};

namespace detail {

inline AudioClip synth_take(const SynthParams& params, int klass, int take, Rng& rng) {
  const int sr = params.sample_rate;
  const double duration = params.base_seconds * rng.uniform(0.85, 1.15);
  const auto n = static_cast<std::size_t>(std::llround(duration * sr));
  const auto pad = static_cast<std::size_t>(std::llround(0.15 * sr));

  // class identity: fundamental on a log grid plus a moving noise band
  const double f0 = 130.0 * std::pow(2.0, klass / 9.5) * rng.uniform(0.985, 1.015);
  const double tilt = 0.6 + 0.08 * (klass % 7) + 0.02 * ((klass + take) % 3);
  const double band_center = 1200.0 + 92.0 * klass;
  const double amplitude = rng.uniform(0.45, 0.8);

  std::vector<double> harmonics;
  for (int h = 1; h <= 6; ++h) harmonics.push_back(std::pow(h, -tilt));

  // narrowband "formant": a handful of random-phase sines inside the band
  std::vector<double> band_freq, band_phase;
  for (int j = 0; j < 8; ++j) {
    band_freq.push_back(rng.uniform(band_center - 60.0, band_center + 60.0));
    band_phase.push_back(rng.uniform(0.0, 2.0 * kPi));
  }

  AudioClip clip;
  clip.sample_rate = sr;
  clip.samples.assign(2 * pad + n, 0.0);
  const double noise_floor = 0.003;
  const auto fade = static_cast<std::size_t>(std::llround(0.03 * sr));
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    clip.samples[i] = noise_floor * rng.normal();  // room tone everywhere
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    double v = 0.0;
    for (std::size_t h = 0; h < harmonics.size(); ++h) {
      v += harmonics[h] * std::sin(2.0 * kPi * f0 * static_cast<double>(h + 1) * t);
    }
    for (std::size_t j = 0; j < band_freq.size(); ++j) {
      v += 0.12 * std::sin(2.0 * kPi * band_freq[j] * t + band_phase[j]);
    }
    double envelope = 1.0;
    if (i < fade) envelope = 0.5 * (1.0 - std::cos(kPi * static_cast<double>(i) / fade));
    if (n - 1 - i < fade) {
      envelope = 0.5 * (1.0 - std::cos(kPi * static_cast<double>(n - 1 - i) / fade));
    }
    clip.samples[pad + i] += amplitude * envelope * v / 3.0;
  }
  return clip;
}

}  // namespace detail

// Writes <out_dir>/class_XX/sYY_classXX-tZZ.wav for every (class, take) and a
// manifest.csv alongside. Returns the number of files written.
inline int generate_synth_corpus(const std::string& out_dir, const SynthParams& params = {}) {
  if (params.classes < 1 || params.takes_per_class < 1) {
    raise(ErrorKind::param, "bad_param", "classes and takes must be >= 1");
  }
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) raise(ErrorKind::io, "io_error", "cannot create " + out_dir + ": " + ec.message());

  int written = 0;
  for (int klass = 0; klass < params.classes; ++klass) {
    char class_name[32];
    std::snprintf(class_name, sizeof(class_name), "class_%02d", klass);
    const fs::path dir = fs::path(out_dir) / class_name;
    fs::create_directories(dir, ec);
    if (ec) raise(ErrorKind::io, "io_error", "cannot create " + dir.string());

    for (int take = 0; take < params.takes_per_class; ++take) {
      const int speaker = (klass + take) % std::max(1, params.speakers);
      char file_name[64];
      std::snprintf(file_name, sizeof(file_name), "s%02d_%s-t%02d.wav", speaker, class_name, take);
      Rng rng(mix_seed(params.seed, hash64(std::string(class_name) + "/" + file_name)));
      const AudioClip clip = detail::synth_take(params, klass, take, rng);
      write_wav((dir / file_name).string(), clip, WavFormat::pcm16);
      ++written;
    }
  }
  return written;
}

}  // namespace mispron

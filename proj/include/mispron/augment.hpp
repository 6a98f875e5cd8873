#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "mispron/dsp.hpp"
#include "mispron/error.hpp"
#include "mispron/rng.hpp"

namespace mispron {

// Training-side augmentation settings. Magnitudes are mild so the phoneme
// identity survives; every knob is configurable.
struct AugmentPlan {
  double snr_db = 20.0;
  double shift_fraction = 0.1;  // magnitude; direction is drawn per clip
  double stretch_lo = 0.9;
  double stretch_hi = 1.1;
  int max_semitones = 2;  // drawn from {-max..-1, +1..+max}
  std::uint64_t seed = 0;
};

// Adds white Gaussian noise at the requested signal-to-noise ratio.
inline AudioClip add_noise(const AudioClip& clip, double snr_db, std::uint64_t seed) {
  if (clip.samples.empty()) raise(ErrorKind::data, "empty_audio", "cannot add noise to an empty clip");
  if (!std::isfinite(snr_db)) raise(ErrorKind::param, "bad_param", "snr_db must be finite");
  const double power = signal_power(clip.samples);
  if (power == 0.0) {
    raise(ErrorKind::data, "zero_signal_power", "cannot scale noise against a silent clip");
  }
  const double noise_std = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  Rng rng(seed);
  AudioClip out = clip;
  for (double& s : out.samples) s += noise_std * rng.normal();
  return out;
}

// Circular rotation by round(fraction * length) samples; positive fractions
// rotate forward (content moves later, tail wraps to the front).
inline AudioClip time_shift(const AudioClip& clip, double signed_fraction) {
  if (clip.samples.empty()) raise(ErrorKind::data, "empty_audio", "cannot shift an empty clip");
  if (!(std::abs(signed_fraction) < 1.0)) {
    raise(ErrorKind::param, "bad_param", "|shift_fraction| must be < 1");
  }
  const long long n = static_cast<long long>(clip.samples.size());
  long long k = std::llround(signed_fraction * static_cast<double>(n)) % n;
  if (k < 0) k += n;
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.resize(clip.samples.size());
  for (long long i = 0; i < n; ++i) {
    out.samples[static_cast<std::size_t>(i)] =
        clip.samples[static_cast<std::size_t>((i - k + n) % n)];
  }
  return out;
}

// Phase-vocoder time stretch: duration scales by 1/rate, pitch is preserved.
inline AudioClip time_stretch(const AudioClip& clip, double rate, int n_fft = 2048,
                              int hop = 512) {
  if (clip.samples.empty()) raise(ErrorKind::data, "empty_audio", "cannot stretch an empty clip");
  if (!(rate >= 0.5 && rate <= 2.0)) {
    raise(ErrorKind::param, "bad_param", "stretch rate must lie in [0.5, 2.0]");
  }

  const ComplexSpectrogram spec = stft_complex(clip, n_fft, hop);
  const int n_bins = spec.n_bins;

  // Expected per-hop phase advance of each bin.
  std::vector<double> advance(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    advance[static_cast<std::size_t>(b)] = 2.0 * kPi * hop * b / n_fft;
  }

  std::vector<double> steps;
  for (double t = 0.0; t < static_cast<double>(spec.n_frames); t += rate) steps.push_back(t);

  ComplexSpectrogram stretched;
  stretched.n_bins = n_bins;
  stretched.n_frames = static_cast<int>(steps.size());
  stretched.n_fft = n_fft;
  stretched.hop = hop;
  stretched.sample_rate = clip.sample_rate;
  stretched.data.resize(steps.size() * static_cast<std::size_t>(n_bins));

  auto column = [&](int t, int b) -> std::complex<double> {
    if (t >= spec.n_frames) return {0.0, 0.0};
    return spec.at(b, t);
  };
  auto wrap_pi = [](double x) {
    x = std::fmod(x + kPi, 2.0 * kPi);
    if (x < 0.0) x += 2.0 * kPi;
    return x - kPi;
  };

  std::vector<double> phase(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) phase[static_cast<std::size_t>(b)] = std::arg(column(0, b));

  for (std::size_t s = 0; s < steps.size(); ++s) {
    const double t = steps[s];
    const int t0 = static_cast<int>(t);
    const double alpha = t - t0;
    for (int b = 0; b < n_bins; ++b) {
      const std::complex<double> c0 = column(t0, b);
      const std::complex<double> c1 = column(t0 + 1, b);
      const double mag = (1.0 - alpha) * std::abs(c0) + alpha * std::abs(c1);
      stretched.data[s * static_cast<std::size_t>(n_bins) + b] =
          std::polar(mag, phase[static_cast<std::size_t>(b)]);
      const double dphase =
          wrap_pi(std::arg(c1) - std::arg(c0) - advance[static_cast<std::size_t>(b)]);
      phase[static_cast<std::size_t>(b)] += advance[static_cast<std::size_t>(b)] + dphase;
    }
  }

  const auto out_len = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(static_cast<double>(clip.samples.size()) / rate)));
  return istft(stretched, out_len);
}

// Pitch shift by semitones with duration preserved: stretch at
// rate = 2^(-semitones/12), then resample the stretched clip back to the
// original length, scaling every frequency by 2^(semitones/12).
inline AudioClip pitch_shift(const AudioClip& clip, double semitones, int n_fft = 2048,
                             int hop = 512) {
  if (clip.samples.empty()) raise(ErrorKind::data, "empty_audio", "cannot pitch-shift an empty clip");
  if (!(std::abs(semitones) <= 12.0)) {
    raise(ErrorKind::param, "bad_param", "|semitones| must be <= 12");
  }
  const double rate = std::pow(2.0, -semitones / 12.0);
  AudioClip stretched = time_stretch(clip, rate, n_fft, hop);
  AudioClip shifted = resample(stretched, rate);
  shifted.sample_rate = clip.sample_rate;
  // Pin the duration contract exactly.
  shifted.samples.resize(clip.samples.size(), 0.0);
  return shifted;
}

// The four per-clip techniques, parameter draws seeded per source recording.
enum class AugmentTechnique { noise, shift, stretch, pitch };

inline const char* technique_name(AugmentTechnique t) {
  switch (t) {
    case AugmentTechnique::noise: return "noise";
    case AugmentTechnique::shift: return "shift";
    case AugmentTechnique::stretch: return "stretch";
    case AugmentTechnique::pitch: return "pitch";
  }
  return "?";
}

// Applies one technique with parameters drawn deterministically from
// (plan.seed, group_id, technique).
inline AudioClip apply_augmentation(const AudioClip& clip, AugmentTechnique technique,
                                    const AugmentPlan& plan, const std::string& group_id) {
  const std::uint64_t entry_seed = mix_seed(plan.seed, hash64(group_id));
  const std::uint64_t tech_seed =
      mix_seed(entry_seed, static_cast<std::uint64_t>(technique) + 1);
  Rng rng(tech_seed);
  switch (technique) {
    case AugmentTechnique::noise:
      return add_noise(clip, plan.snr_db, tech_seed);
    case AugmentTechnique::shift: {
      const double sign = rng.coin() ? 1.0 : -1.0;
      return time_shift(clip, sign * plan.shift_fraction);
    }
    case AugmentTechnique::stretch:
      return time_stretch(clip, rng.uniform(plan.stretch_lo, plan.stretch_hi));
    case AugmentTechnique::pitch: {
      const int magnitude = rng.uniform_int(1, std::max(1, plan.max_semitones));
      return pitch_shift(clip, rng.coin() ? magnitude : -magnitude);
    }
  }
  raise(ErrorKind::param, "bad_param", "unknown augmentation technique");
}

inline const AugmentTechnique kAllTechniques[] = {
    AugmentTechnique::noise, AugmentTechnique::shift, AugmentTechnique::stretch,
    AugmentTechnique::pitch};

}  // namespace mispron

#include "mispron/corpus.hpp"

namespace mispron {

// Expands a training-side manifest 5x: each original gains one derivative per
// technique, written beside it as "<stem>.aug-<technique>.wav". Derivatives
// inherit label and group. A clip that fails one technique is skipped for
// that technique with a warning on the returned manifest.
inline CorpusManifest augment_training_set(const CorpusManifest& manifest,
                                           const AugmentPlan& plan) {
  for (const auto& e : manifest.entries) {
    if (e.origin != EntryOrigin::original) {
      raise(ErrorKind::data, "augmented_input",
            "augment_training_set expects originals only; found derivative " + e.path);
    }
  }

  CorpusManifest out;
  out.warnings = manifest.warnings;
  for (const auto& e : manifest.entries) {
    out.entries.push_back(e);
    const AudioClip clip = load_wav(e.path);
    for (AugmentTechnique technique : kAllTechniques) {
      AudioClip derived;
      try {
        derived = apply_augmentation(clip, technique, plan, e.group);
      } catch (const Error& err) {
        out.warnings.push_back(std::string("skipped ") + technique_name(technique) + " for " +
                               e.path + ": " + err.what());
        continue;
      }
      const std::filesystem::path src(e.path);
      std::filesystem::path dst = src.parent_path() /
          (src.stem().string() + ".aug-" + technique_name(technique) + ".wav");
      write_wav(dst.string(), derived, WavFormat::float32);

      CorpusEntry derivative = e;
      derivative.path = dst.string();
      derivative.origin = EntryOrigin::augmented;
      out.entries.push_back(std::move(derivative));
    }
  }
  return out;
}

}  // namespace mispron

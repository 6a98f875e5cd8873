#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mispron/dsp.hpp"
#include "mispron/error.hpp"

namespace mispron {

// Stationary spectral-gating noise reduction. The noise profile is estimated
// from the quietest fraction of frames, so input recordings are expected to
// contain some signal-free frames (leading/trailing room tone).
struct GateParams {
  int n_fft = 2048;
  int hop = 512;                     // 75% overlap
  double quiet_fraction = 0.1;       // share of frames used as the noise estimate
  double threshold_sigma = 1.5;      // profile = mean + sigma * std per bin
  int mask_smoothing = 3;            // box size (bins x frames) for mask averaging
  double attenuation_floor_db = -40.0;
};

struct TrimParams {
  double top_db = 30.0;  // frames quieter than peak - top_db are silence
  int frame = 2048;
  int hop = 512;
};

struct PreprocessParams {
  GateParams gate;
  TrimParams trim;
};

namespace detail {

// Per-(bin,frame) gains in [floor_gain, 1]: threshold mask smoothed by a box
// average, lifted onto the attenuation floor.
inline std::vector<double> gate_gains(const Spectrogram& mags, const GateParams& params) {
  const int n_bins = mags.n_bins;
  const int n_frames = mags.n_frames;

  std::vector<double> frame_energy(static_cast<std::size_t>(n_frames), 0.0);
  for (int t = 0; t < n_frames; ++t) {
    double e = 0.0;
    for (int b = 0; b < n_bins; ++b) e += mags.at(b, t) * mags.at(b, t);
    frame_energy[static_cast<std::size_t>(t)] = e;
  }

  std::vector<int> order(static_cast<std::size_t>(n_frames));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return frame_energy[static_cast<std::size_t>(a)] < frame_energy[static_cast<std::size_t>(b)];
  });
  const int n_quiet = std::max(1, static_cast<int>(std::floor(params.quiet_fraction * n_frames)));

  // Statistics run on dB magnitudes: the compressed upper tail of the noise
  // distribution makes mean + sigma*std a much sharper noise ceiling than the
  // same rule on linear magnitudes.
  const auto to_db = [](double m) { return 20.0 * std::log10(std::max(m, 1e-12)); };
  std::vector<double> threshold_db(static_cast<std::size_t>(n_bins), 0.0);
  for (int b = 0; b < n_bins; ++b) {
    double mean = 0.0;
    for (int q = 0; q < n_quiet; ++q) mean += to_db(mags.at(b, order[static_cast<std::size_t>(q)]));
    mean /= n_quiet;
    double var = 0.0;
    for (int q = 0; q < n_quiet; ++q) {
      const double d = to_db(mags.at(b, order[static_cast<std::size_t>(q)])) - mean;
      var += d * d;
    }
    var /= n_quiet;
    threshold_db[static_cast<std::size_t>(b)] = mean + params.threshold_sigma * std::sqrt(var);
  }

  std::vector<double> mask(mags.data.size(), 0.0);
  for (int t = 0; t < n_frames; ++t) {
    for (int b = 0; b < n_bins; ++b) {
      mask[static_cast<std::size_t>(t) * n_bins + b] =
          to_db(mags.at(b, t)) > threshold_db[static_cast<std::size_t>(b)] ? 1.0 : 0.0;
    }
  }

  // Box average over mask_smoothing x mask_smoothing neighborhoods.
  const int radius = std::max(0, params.mask_smoothing / 2);
  std::vector<double> smooth(mask.size(), 0.0);
  for (int t = 0; t < n_frames; ++t) {
    for (int b = 0; b < n_bins; ++b) {
      double acc = 0.0;
      int count = 0;
      for (int dt = -radius; dt <= radius; ++dt) {
        const int tt = t + dt;
        if (tt < 0 || tt >= n_frames) continue;
        for (int db = -radius; db <= radius; ++db) {
          const int bb = b + db;
          if (bb < 0 || bb >= n_bins) continue;
          acc += mask[static_cast<std::size_t>(tt) * n_bins + bb];
          ++count;
        }
      }
      smooth[static_cast<std::size_t>(t) * n_bins + b] = count > 0 ? acc / count : 0.0;
    }
  }

  const double floor_gain = std::pow(10.0, params.attenuation_floor_db / 20.0);
  for (double& g : smooth) g = floor_gain + (1.0 - floor_gain) * g;
  return smooth;
}

}  // namespace detail

// Noise reduction via spectral gating. Length and sample rate are preserved;
// output energy never exceeds input energy.
inline AudioClip spectral_gate(const AudioClip& clip, const GateParams& params = {}) {
  if (clip.samples.empty()) raise(ErrorKind::data, "empty_audio", "cannot gate an empty clip");
  if (!(params.quiet_fraction > 0.0 && params.quiet_fraction < 1.0)) {
    raise(ErrorKind::param, "bad_param", "quiet_fraction must be in (0,1)");
  }
  if (params.threshold_sigma < 0.0) {
    raise(ErrorKind::param, "bad_param", "threshold_sigma must be >= 0");
  }
  if (static_cast<int>(clip.samples.size()) < params.n_fft) {
    raise(ErrorKind::data, "too_short",
          "clip shorter than the gate analysis window (" + std::to_string(params.n_fft) + ")");
  }
  const bool all_zero =
      std::all_of(clip.samples.begin(), clip.samples.end(), [](double s) { return s == 0.0; });
  if (all_zero) return clip;

  ComplexSpectrogram spec = stft_complex(clip, params.n_fft, params.hop);
  const Spectrogram mags = magnitude(spec);
  const std::vector<double> gains = detail::gate_gains(mags, params);
  for (std::size_t i = 0; i < spec.data.size(); ++i) spec.data[i] *= gains[i];

  AudioClip out = istft(spec, clip.samples.size());

  // Overlap-add reconstruction can overshoot by rounding; pin the energy contract.
  const double e_in = clip_energy(clip);
  const double e_out = clip_energy(out);
  if (e_out > e_in && e_out > 0.0) {
    const double scale = std::sqrt(e_in / e_out);
    for (double& s : out.samples) s *= scale;
  }
  return out;
}

namespace detail {

// RMS of the zero-padded frame of length `frame` centered at sample t*hop.
inline double trim_frame_rms(const std::vector<double>& x, int t, int frame, int hop) {
  const long long len = static_cast<long long>(x.size());
  const long long begin = static_cast<long long>(t) * hop - frame / 2;
  double acc = 0.0;
  for (long long i = std::max<long long>(0, begin);
       i < std::min(len, begin + static_cast<long long>(frame)); ++i) {
    acc += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
  }
  return std::sqrt(acc / static_cast<double>(frame));
}

}  // namespace detail

// Removes leading/trailing frames whose RMS stays at or below
// peak * 10^(-top_db/20). The comparison is strict, so content exactly at the
// threshold counts as silence. Frames are centered at multiples of hop and the
// kept span is [first*hop, (last+1)*hop), so boundaries quantize to hop with a
// detection slop of up to frame/2 per side around a hard onset.
inline AudioClip trim_silence(const AudioClip& clip, const TrimParams& params = {}) {
  if (clip.samples.empty()) raise(ErrorKind::data, "empty_audio", "cannot trim an empty clip");
  if (params.top_db <= 0.0) raise(ErrorKind::param, "bad_param", "top_db must be positive");
  if (params.hop <= 0 || params.frame <= 0) {
    raise(ErrorKind::param, "bad_param", "trim frame and hop must be positive");
  }

  const double peak = clip_peak(clip);
  const double threshold = peak * std::pow(10.0, -params.top_db / 20.0);
  if (peak == 0.0) raise(ErrorKind::data, "all_silent", "clip has no content above the trim threshold");

  const std::size_t len = clip.samples.size();
  const int n_frames = 1 + static_cast<int>(len / static_cast<std::size_t>(params.hop));
  long long first = -1, last = -1;
  for (int t = 0; t < n_frames; ++t) {
    if (detail::trim_frame_rms(clip.samples, t, params.frame, params.hop) > threshold) {
      if (first < 0) first = t;
      last = t;
    }
  }
  if (first < 0) {
    raise(ErrorKind::data, "all_silent", "clip has no content above the trim threshold");
  }

  const std::size_t begin = static_cast<std::size_t>(first) * params.hop;
  const std::size_t end = std::min(len, (static_cast<std::size_t>(last) + 1) * params.hop);
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     clip.samples.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

// Noise reduction first, then silence trimming.
inline AudioClip preprocess_pipeline(const AudioClip& clip, const PreprocessParams& params = {}) {
  return trim_silence(spectral_gate(clip, params.gate), params.trim);
}

}  // namespace mispron

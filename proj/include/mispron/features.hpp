#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mispron/dsp.hpp"
#include "mispron/error.hpp"

namespace mispron {

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular mel filters over FFT bins, unit-area normalized so responses are
// comparable across bandwidths.
struct MelFilterbank {
  int n_mels = 0;
  int n_bins = 0;
  std::vector<double> weights;       // n_mels x n_bins, row-major
  std::vector<double> center_hz;     // filter centers

  double weight(int mel, int bin) const {
    return weights[static_cast<std::size_t>(mel) * n_bins + bin];
  }
};

inline MelFilterbank mel_filterbank(int n_mels, int n_fft, int sample_rate) {
  if (n_mels < 1) raise(ErrorKind::param, "bad_param", "n_mels must be >= 1");
  if (sample_rate <= 0) raise(ErrorKind::param, "bad_param", "sample_rate must be positive");

  const int n_bins = n_fft / 2 + 1;
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges_hz(static_cast<std::size_t>(n_mels) + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    edges_hz[static_cast<std::size_t>(i)] = mel_to_hz(mel_max * i / (n_mels + 1));
  }

  MelFilterbank bank;
  bank.n_mels = n_mels;
  bank.n_bins = n_bins;
  bank.weights.assign(static_cast<std::size_t>(n_mels) * n_bins, 0.0);
  bank.center_hz.resize(static_cast<std::size_t>(n_mels));

  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges_hz[static_cast<std::size_t>(m)];
    const double mid = edges_hz[static_cast<std::size_t>(m) + 1];
    const double hi = edges_hz[static_cast<std::size_t>(m) + 2];
    bank.center_hz[static_cast<std::size_t>(m)] = mid;
    const double area = (hi - lo) / 2.0;  // triangle of height 1
    bool nonzero = false;
    for (int b = 0; b < n_bins; ++b) {
      const double f = bin_to_hz(b, n_fft, sample_rate);
      double w = 0.0;
      if (f > lo && f < hi) {
        w = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      }
      if (w > 0.0) {
        bank.weights[static_cast<std::size_t>(m) * n_bins + b] = w / area;
        nonzero = true;
      }
    }
    if (!nonzero) {
      raise(ErrorKind::param, "degenerate_filter",
            "mel filter " + std::to_string(m) + " covers no FFT bin; reduce n_mels or raise n_fft");
    }
  }
  return bank;
}

enum class FeatureKind { mel128, mfcc20 };

inline const char* feature_kind_name(FeatureKind kind) {
  return kind == FeatureKind::mel128 ? "mel" : "mfcc";
}

inline FeatureKind parse_feature_kind(const std::string& name) {
  if (name == "mel" || name == "mel128") return FeatureKind::mel128;
  if (name == "mfcc" || name == "mfcc20") return FeatureKind::mfcc20;
  raise(ErrorKind::param, "bad_param", "unknown feature kind: " + name);
}

struct FeatureVector {
  FeatureKind kind = FeatureKind::mel128;
  std::vector<double> values;
};

struct MelFeatureParams {
  int n_mels = 128;
  int n_fft = 2048;
  int hop = 512;
  double power_floor = 1e-10;  // applied before the log
};

// How the 39-coefficient cepstral frame is assembled before keeping the last
// 20 entries. `last20` takes DCT coefficients 1..39 of a 40-filter cepstrum;
// `deltas` uses 13 static coefficients plus their first and second
// differences (the conventional alternative, not the default).
enum class MfccMode { last20, deltas };

struct MfccFeatureParams {
  int n_filters = 40;
  int n_fft = 2048;
  int hop = 512;
  double power_floor = 1e-10;
  MfccMode mode = MfccMode::last20;
};

// Mel power matrix in dB, n_mels x n_frames.
struct MelMatrix {
  int n_mels = 0;
  int n_frames = 0;
  std::vector<double> db;  // frame-major: db[frame * n_mels + mel]

  double at(int mel, int frame) const {
    return db[static_cast<std::size_t>(frame) * n_mels + mel];
  }
};

inline MelMatrix mel_spectrogram(const AudioClip& clip, const MelFeatureParams& params = {}) {
  const Spectrogram spec = stft(clip, params.n_fft, params.hop);
  const MelFilterbank bank = mel_filterbank(params.n_mels, params.n_fft, clip.sample_rate);

  MelMatrix out;
  out.n_mels = params.n_mels;
  out.n_frames = spec.n_frames;
  out.db.resize(static_cast<std::size_t>(params.n_mels) * spec.n_frames);
  for (int t = 0; t < spec.n_frames; ++t) {
    for (int m = 0; m < params.n_mels; ++m) {
      double p = 0.0;
      for (int b = 0; b < spec.n_bins; ++b) {
        const double w = bank.weight(m, b);
        if (w != 0.0) p += w * spec.at(b, t) * spec.at(b, t);
      }
      out.db[static_cast<std::size_t>(t) * params.n_mels + m] =
          10.0 * std::log10(std::max(p, params.power_floor));
    }
  }
  return out;
}

// Time-averaged mel spectrogram: one dB value per mel band.
inline FeatureVector mel_spectrogram_feature(const AudioClip& clip,
                                             const MelFeatureParams& params = {}) {
  const MelMatrix mat = mel_spectrogram(clip, params);
  FeatureVector fv;
  fv.kind = FeatureKind::mel128;
  fv.values.assign(static_cast<std::size_t>(mat.n_mels), 0.0);
  for (int t = 0; t < mat.n_frames; ++t) {
    for (int m = 0; m < mat.n_mels; ++m) {
      fv.values[static_cast<std::size_t>(m)] += mat.at(m, t);
    }
  }
  for (double& v : fv.values) v /= mat.n_frames;
  return fv;
}

namespace detail {

// Per-frame cepstral features before time averaging, n_frames x width.
inline std::vector<std::vector<double>> mfcc_frames(const AudioClip& clip,
                                                    const MfccFeatureParams& params) {
  const Spectrogram spec = stft(clip, params.n_fft, params.hop);
  const MelFilterbank bank = mel_filterbank(params.n_filters, params.n_fft, clip.sample_rate);

  std::vector<std::vector<double>> cepstra(static_cast<std::size_t>(spec.n_frames));
  std::vector<double> log_mel(static_cast<std::size_t>(params.n_filters));
  for (int t = 0; t < spec.n_frames; ++t) {
    for (int m = 0; m < params.n_filters; ++m) {
      double p = 0.0;
      for (int b = 0; b < spec.n_bins; ++b) {
        const double w = bank.weight(m, b);
        if (w != 0.0) p += w * spec.at(b, t) * spec.at(b, t);
      }
      log_mel[static_cast<std::size_t>(m)] = std::log(std::max(p, params.power_floor));
    }
    cepstra[static_cast<std::size_t>(t)] = dct2_orthonormal(log_mel);
  }

  std::vector<std::vector<double>> frames(cepstra.size());
  if (params.mode == MfccMode::last20) {
    // Coefficients 1..39 form the 39-feature cepstrum; keep all of them here,
    // the caller slices the tail.
    for (std::size_t t = 0; t < cepstra.size(); ++t) {
      frames[t].assign(cepstra[t].begin() + 1, cepstra[t].end());
    }
    return frames;
  }

  // deltas mode: 13 static (coefficients 1..13) + delta + delta-delta.
  const int n_static = 13;
  std::vector<std::vector<double>> statics(cepstra.size());
  for (std::size_t t = 0; t < cepstra.size(); ++t) {
    statics[t].assign(cepstra[t].begin() + 1, cepstra[t].begin() + 1 + n_static);
  }
  auto regression = [&](const std::vector<std::vector<double>>& src) {
    // Standard 2-frame regression window with edge replication.
    std::vector<std::vector<double>> out(src.size(), std::vector<double>(src[0].size(), 0.0));
    const auto clamp_t = [&](long long t) {
      return static_cast<std::size_t>(std::clamp<long long>(t, 0, static_cast<long long>(src.size()) - 1));
    };
    for (std::size_t t = 0; t < src.size(); ++t) {
      for (std::size_t d = 0; d < src[0].size(); ++d) {
        double num = 0.0;
        for (int n = 1; n <= 2; ++n) {
          num += n * (src[clamp_t(static_cast<long long>(t) + n)][d] -
                      src[clamp_t(static_cast<long long>(t) - n)][d]);
        }
        out[t][d] = num / 10.0;  // 2 * (1^2 + 2^2)
      }
    }
    return out;
  };
  const auto delta = regression(statics);
  const auto delta2 = regression(delta);
  for (std::size_t t = 0; t < cepstra.size(); ++t) {
    frames[t] = statics[t];
    frames[t].insert(frames[t].end(), delta[t].begin(), delta[t].end());
    frames[t].insert(frames[t].end(), delta2[t].begin(), delta2[t].end());
  }
  return frames;
}

}  // namespace detail

// Time-averaged 20-coefficient cepstral feature: the last 20 of the 39
// per-frame features, averaged across frames.
inline FeatureVector mfcc_feature(const AudioClip& clip, const MfccFeatureParams& params = {}) {
  const auto frames = detail::mfcc_frames(clip, params);
  const std::size_t width = frames.front().size();  // 39 in either mode
  const std::size_t keep = 20;
  const std::size_t offset = width - keep;

  FeatureVector fv;
  fv.kind = FeatureKind::mfcc20;
  fv.values.assign(keep, 0.0);
  for (const auto& frame : frames) {
    for (std::size_t i = 0; i < keep; ++i) fv.values[i] += frame[offset + i];
  }
  for (double& v : fv.values) v /= static_cast<double>(frames.size());
  return fv;
}

inline FeatureVector extract_feature(const AudioClip& clip, FeatureKind kind,
                                     const MelFeatureParams& mel_params = {},
                                     const MfccFeatureParams& mfcc_params = {}) {
  return kind == FeatureKind::mel128 ? mel_spectrogram_feature(clip, mel_params)
                                     : mfcc_feature(clip, mfcc_params);
}

inline int feature_dimension(FeatureKind kind, const MelFeatureParams& mel_params = {}) {
  return kind == FeatureKind::mel128 ? mel_params.n_mels : 20;
}

}  // namespace mispron

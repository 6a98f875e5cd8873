#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "mispron/audio.hpp"
#include "mispron/error.hpp"

namespace mispron {

inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// FFT
// ---------------------------------------------------------------------------

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 Cooley-Tukey. Inverse applies the 1/N scale.
inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse = false) {
  const std::size_t n = a.size();
  if (n == 0) return;
  if (!is_power_of_two(static_cast<int>(n))) {
    raise(ErrorKind::param, "bad_param", "FFT size must be a power of two");
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= scale;
  }
}

// Periodic Hann window; sums of squares are constant at 75% overlap, which the
// overlap-add reconstruction below relies on.
inline std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / n));
  }
  return w;
}

// ---------------------------------------------------------------------------
// STFT
// ---------------------------------------------------------------------------

// Linear magnitudes of an STFT, n_bins = n_fft/2 + 1, stored frame-major.
struct Spectrogram {
  int n_bins = 0;
  int n_frames = 0;
  int n_fft = 0;
  int hop = 0;
  int sample_rate = 0;
  std::vector<double> data;  // data[frame * n_bins + bin]

  double at(int bin, int frame) const {
    return data[static_cast<std::size_t>(frame) * n_bins + bin];
  }
};

struct ComplexSpectrogram {
  int n_bins = 0;
  int n_frames = 0;
  int n_fft = 0;
  int hop = 0;
  int sample_rate = 0;
  std::vector<std::complex<double>> data;  // frame-major

  std::complex<double>& at(int bin, int frame) {
    return data[static_cast<std::size_t>(frame) * n_bins + bin];
  }
  std::complex<double> at(int bin, int frame) const {
    return data[static_cast<std::size_t>(frame) * n_bins + bin];
  }
};

namespace detail {

// Signal value with reflection at the edges (no edge-sample repeat).
inline double reflect_sample(const std::vector<double>& x, long long i) {
  const long long n = static_cast<long long>(x.size());
  if (n == 1) return x[0];
  const long long period = 2 * (n - 1);
  long long j = i % period;
  if (j < 0) j += period;
  if (j >= n) j = period - j;
  return x[static_cast<std::size_t>(j)];
}

}  // namespace detail

// Centered STFT with reflection padding: frame t is the n_fft-sample window
// around sample t*hop. Frame count is 1 + floor(len/hop).
inline ComplexSpectrogram stft_complex(const AudioClip& clip, int n_fft = 2048,
                                       int hop = 512) {
  if (clip.samples.empty()) raise(ErrorKind::data, "empty_audio", "cannot STFT an empty clip");
  if (hop <= 0 || n_fft <= 0 || hop > n_fft) {
    raise(ErrorKind::param, "bad_param", "require 0 < hop <= n_fft");
  }
  if (!is_power_of_two(n_fft)) raise(ErrorKind::param, "bad_param", "n_fft must be a power of two");

  const long long len = static_cast<long long>(clip.samples.size());
  const int n_frames = 1 + static_cast<int>(len / hop);
  const int n_bins = n_fft / 2 + 1;
  const std::vector<double> window = hann_window(n_fft);

  ComplexSpectrogram out;
  out.n_bins = n_bins;
  out.n_frames = n_frames;
  out.n_fft = n_fft;
  out.hop = hop;
  out.sample_rate = clip.sample_rate;
  out.data.resize(static_cast<std::size_t>(n_frames) * n_bins);

  std::vector<std::complex<double>> buf(static_cast<std::size_t>(n_fft));
  for (int t = 0; t < n_frames; ++t) {
    const long long start = static_cast<long long>(t) * hop - n_fft / 2;
    for (int i = 0; i < n_fft; ++i) {
      buf[static_cast<std::size_t>(i)] = window[static_cast<std::size_t>(i)] *
                                         detail::reflect_sample(clip.samples, start + i);
    }
    fft_inplace(buf);
    for (int b = 0; b < n_bins; ++b) {
      out.data[static_cast<std::size_t>(t) * n_bins + b] = buf[static_cast<std::size_t>(b)];
    }
  }
  return out;
}

inline Spectrogram magnitude(const ComplexSpectrogram& spec) {
  Spectrogram out;
  out.n_bins = spec.n_bins;
  out.n_frames = spec.n_frames;
  out.n_fft = spec.n_fft;
  out.hop = spec.hop;
  out.sample_rate = spec.sample_rate;
  out.data.resize(spec.data.size());
  for (std::size_t i = 0; i < spec.data.size(); ++i) out.data[i] = std::abs(spec.data[i]);
  return out;
}

inline Spectrogram stft(const AudioClip& clip, int n_fft = 2048, int hop = 512) {
  return magnitude(stft_complex(clip, n_fft, hop));
}

// Weighted overlap-add inverse of stft_complex, normalized by the running
// window-square sum and cropped to `length` samples.
inline AudioClip istft(const ComplexSpectrogram& spec, std::size_t length) {
  const int n_fft = spec.n_fft;
  const int hop = spec.hop;
  const int n_bins = spec.n_bins;
  const std::vector<double> window = hann_window(n_fft);

  const std::size_t padded_len =
      static_cast<std::size_t>(spec.n_frames - 1) * hop + static_cast<std::size_t>(n_fft);
  std::vector<double> acc(padded_len, 0.0);
  std::vector<double> wsum(padded_len, 0.0);

  std::vector<std::complex<double>> buf(static_cast<std::size_t>(n_fft));
  for (int t = 0; t < spec.n_frames; ++t) {
    for (int b = 0; b < n_bins; ++b) {
      buf[static_cast<std::size_t>(b)] = spec.at(b, t);
    }
    for (int b = n_bins; b < n_fft; ++b) {
      buf[static_cast<std::size_t>(b)] = std::conj(spec.at(n_fft - b, t));
    }
    fft_inplace(buf, /*inverse=*/true);
    const std::size_t offset = static_cast<std::size_t>(t) * hop;
    for (int i = 0; i < n_fft; ++i) {
      const double w = window[static_cast<std::size_t>(i)];
      acc[offset + i] += w * buf[static_cast<std::size_t>(i)].real();
      wsum[offset + i] += w * w;
    }
  }

  AudioClip out;
  out.sample_rate = spec.sample_rate;
  out.samples.resize(length, 0.0);
  const std::size_t lead = static_cast<std::size_t>(n_fft / 2);  // undo centering
  for (std::size_t i = 0; i < length; ++i) {
    const std::size_t j = i + lead;
    if (j < padded_len && wsum[j] > 1e-12) out.samples[i] = acc[j] / wsum[j];
  }
  return out;
}

// ---------------------------------------------------------------------------
// DCT
// ---------------------------------------------------------------------------

// Orthonormal DCT-II. O(N^2); fine for the cepstral sizes used here.
inline std::vector<double> dct2_orthonormal(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n, 0.0);
  if (n == 0) return out;
  const double norm0 = std::sqrt(1.0 / static_cast<double>(n));
  const double norm = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += x[i] * std::cos(kPi * static_cast<double>(k) * (2.0 * i + 1.0) / (2.0 * n));
    }
    out[k] = acc * (k == 0 ? norm0 : norm);
  }
  return out;
}

// Inverse of dct2_orthonormal (orthonormal DCT-III).
inline std::vector<double> dct3_orthonormal(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n, 0.0);
  if (n == 0) return out;
  const double norm0 = std::sqrt(1.0 / static_cast<double>(n));
  const double norm = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double acc = norm0 * x[0];
    for (std::size_t k = 1; k < n; ++k) {
      acc += norm * x[k] * std::cos(kPi * static_cast<double>(k) * (2.0 * i + 1.0) / (2.0 * n));
    }
    out[i] = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------------

// Hann-windowed sinc interpolation. `factor` scales the length: output sample i
// reads input position i / factor. factor < 1 lowers the cutoff to avoid
// aliasing. The kernel is renormalized per output sample so DC is preserved.
inline AudioClip resample(const AudioClip& clip, double factor, int half_taps = 24) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    raise(ErrorKind::param, "bad_param", "resample factor must be positive and finite");
  }
  const std::size_t in_len = clip.samples.size();
  if (in_len == 0) raise(ErrorKind::data, "empty_audio", "cannot resample an empty clip");

  const std::size_t out_len =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(in_len * factor)));
  const double cutoff = std::min(1.0, factor) * 0.97;
  const double support = half_taps / std::min(1.0, factor);

  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.resize(out_len, 0.0);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double center = static_cast<double>(i) / factor;
    const long long k_lo = static_cast<long long>(std::ceil(center - support));
    const long long k_hi = static_cast<long long>(std::floor(center + support));
    double acc = 0.0, wacc = 0.0;
    for (long long k = k_lo; k <= k_hi; ++k) {
      if (k < 0 || k >= static_cast<long long>(in_len)) continue;
      const double t = (static_cast<double>(k) - center);
      const double x = cutoff * t;
      const double sinc = x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
      const double wpos = t / support;  // in [-1, 1]
      const double win = 0.5 * (1.0 + std::cos(kPi * wpos));
      const double w = cutoff * sinc * win;
      acc += w * clip.samples[static_cast<std::size_t>(k)];
      wacc += w;
    }
    out.samples[i] = wacc > 1e-12 ? acc / wacc : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Measurement helpers
// ---------------------------------------------------------------------------

inline double signal_power(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double e = 0.0;
  for (double s : x) e += s * s;
  return e / static_cast<double>(x.size());
}

inline double rms(const std::vector<double>& x) { return std::sqrt(signal_power(x)); }

// 10*log10(power(reference) / power(reference - signal)).
inline double snr_db(const std::vector<double>& reference, const std::vector<double>& signal) {
  const std::size_t n = std::min(reference.size(), signal.size());
  double ref_power = 0.0, err_power = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ref_power += reference[i] * reference[i];
    const double e = signal[i] - reference[i];
    err_power += e * e;
  }
  if (err_power == 0.0) return 300.0;  // effectively infinite
  return 10.0 * std::log10(ref_power / err_power);
}

// Scale-invariant similarity; 1.0 means identical shapes.
inline double normalized_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    saa += a[i] * a[i];
    sbb += b[i] * b[i];
    sab += a[i] * b[i];
  }
  if (saa == 0.0 || sbb == 0.0) return saa == sbb ? 1.0 : 0.0;
  return sab / std::sqrt(saa * sbb);
}

// Index of the strongest bin of the time-averaged magnitude spectrum.
inline int dominant_bin(const AudioClip& clip, int n_fft = 2048, int hop = 512) {
  const Spectrogram spec = stft(clip, n_fft, hop);
  int best = 0;
  double best_energy = -1.0;
  for (int b = 0; b < spec.n_bins; ++b) {
    double e = 0.0;
    for (int t = 0; t < spec.n_frames; ++t) e += spec.at(b, t) * spec.at(b, t);
    if (e > best_energy) {
      best_energy = e;
      best = b;
    }
  }
  return best;
}

inline double bin_to_hz(int bin, int n_fft, int sample_rate) {
  return static_cast<double>(bin) * sample_rate / n_fft;
}

inline int hz_to_bin(double hz, int n_fft, int sample_rate) {
  return static_cast<int>(std::lround(hz * n_fft / sample_rate));
}

// Test helper: a sine clip with optional onset/offset padding.
inline AudioClip make_sine(double freq_hz, double seconds, int sample_rate,
                           double amplitude = 1.0, double phase = 0.0) {
  AudioClip clip;
  clip.sample_rate = sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * sample_rate));
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    clip.samples[i] = amplitude * std::sin(2.0 * kPi * freq_hz * static_cast<double>(i) / sample_rate + phase);
  }
  return clip;
}

}  // namespace mispron

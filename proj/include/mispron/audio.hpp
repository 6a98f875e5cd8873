#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mispron/error.hpp"

namespace mispron {

// Mono audio buffer. Samples are dimensionless amplitudes, nominally [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

inline double clip_energy(const AudioClip& clip) {
  double e = 0.0;
  for (double s : clip.samples) e += s * s;
  return e;
}

inline double clip_peak(const AudioClip& clip) {
  double p = 0.0;
  for (double s : clip.samples) p = std::max(p, std::abs(s));
  return p;
}

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32le(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

inline void put_u16le(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

}  // namespace detail

// PCM sample layouts supported by the writer.
enum class WavFormat { pcm16, pcm24, float32, pcm8 };

// Decodes a RIFF/WAVE file. Integer PCM (8/16/24-bit) and 32-bit float data
// are accepted; multichannel audio is averaged down to mono.
inline AudioClip load_wav(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) raise(ErrorKind::io, "io_error", "cannot open WAV file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(file)),
                                   std::istreambuf_iterator<char>());
  if (file.bad()) raise(ErrorKind::io, "io_error", "cannot read WAV file: " + path);

  using detail::read_u16le;
  using detail::read_u32le;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    raise(ErrorKind::format, "decode_error", "not a RIFF/WAVE file: " + path);
  }

  std::uint16_t format_tag = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    std::uint32_t chunk_size = read_u32le(chunk + 4);
    const unsigned char* body = chunk + 8;
    if (pos + 8 + chunk_size > bytes.size()) {
      // Tolerate a final chunk whose declared size overruns the file.
      chunk_size = static_cast<std::uint32_t>(bytes.size() - pos - 8);
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0 && chunk_size >= 16) {
      format_tag = read_u16le(body);
      channels = read_u16le(body + 2);
      sample_rate = read_u32le(body + 4);
      bits = read_u16le(body + 14);
      if (format_tag == 0xFFFE && chunk_size >= 40) {
        // WAVE_FORMAT_EXTENSIBLE: the real tag leads the 16-byte subformat GUID.
        format_tag = read_u16le(body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = body;
      data_size = chunk_size;
    }
    pos += 8 + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!have_fmt || sample_rate == 0 || channels == 0) {
    raise(ErrorKind::format, "decode_error", "missing or bad fmt chunk: " + path);
  }
  const bool integer_pcm = format_tag == 1 && (bits == 8 || bits == 16 || bits == 24);
  const bool float_pcm = format_tag == 3 && bits == 32;
  if (!integer_pcm && !float_pcm) {
    raise(ErrorKind::format, "unsupported_format",
          "unsupported WAV encoding (tag=" + std::to_string(format_tag) +
              ", bits=" + std::to_string(bits) + "): " + path);
  }
  if (data == nullptr || data_size == 0) {
    raise(ErrorKind::data, "empty_audio", "WAV file has no audio data: " + path);
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t n_frames = data_size / frame_bytes;
  if (n_frames == 0) raise(ErrorKind::data, "empty_audio", "WAV file has no audio data: " + path);

  AudioClip clip;
  clip.sample_rate = static_cast<int>(sample_rate);
  clip.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t ch = 0; ch < channels; ++ch) {
      const unsigned char* p = data + i * frame_bytes + ch * bytes_per_sample;
      double v = 0.0;
      if (float_pcm) {
        std::uint32_t raw = read_u32le(p);
        float f;
        std::memcpy(&f, &raw, sizeof(f));
        v = static_cast<double>(f);
      } else if (bits == 16) {
        v = static_cast<std::int16_t>(read_u16le(p)) / 32768.0;
      } else if (bits == 24) {
        std::int32_t raw = p[0] | (p[1] << 8) | (p[2] << 16);
        if (raw & 0x800000) raw |= ~0xFFFFFF;  // sign extend
        v = raw / 8388608.0;
      } else {  // 8-bit is unsigned with a 128 offset
        v = (static_cast<int>(p[0]) - 128) / 128.0;
      }
      acc += v;
    }
    clip.samples[i] = acc / channels;
  }
  for (double s : clip.samples) {
    if (!std::isfinite(s)) {
      raise(ErrorKind::format, "decode_error", "non-finite sample in " + path);
    }
  }
  return clip;
}

// Writes a mono WAV. Values outside [-1, 1] are clamped for integer formats.
inline void write_wav(const std::string& path, const AudioClip& clip,
                      WavFormat format = WavFormat::pcm16) {
  if (clip.samples.empty()) raise(ErrorKind::data, "empty_audio", "refusing to write empty clip");
  if (clip.sample_rate <= 0) raise(ErrorKind::param, "bad_param", "sample_rate must be positive");

  using detail::put_u16le;
  using detail::put_u32le;
  const bool is_float = format == WavFormat::float32;
  const std::uint16_t bits = format == WavFormat::pcm8    ? 8
                             : format == WavFormat::pcm16 ? 16
                             : format == WavFormat::pcm24 ? 24
                                                          : 32;
  const std::uint16_t bytes_per_sample = bits / 8;
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(clip.samples.size() * bytes_per_sample);

  std::vector<unsigned char> out;
  out.reserve(60 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  const std::uint32_t fact_bytes = is_float ? 12 : 0;
  put_u32le(out, 4 + 8 + 16 + fact_bytes + 8 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E'});
  out.insert(out.end(), {'f', 'm', 't', ' '});
  put_u32le(out, 16);
  put_u16le(out, is_float ? 3 : 1);
  put_u16le(out, 1);  // mono
  put_u32le(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32le(out, static_cast<std::uint32_t>(clip.sample_rate) * bytes_per_sample);
  put_u16le(out, bytes_per_sample);
  put_u16le(out, bits);
  if (is_float) {
    out.insert(out.end(), {'f', 'a', 'c', 't'});
    put_u32le(out, 4);
    put_u32le(out, static_cast<std::uint32_t>(clip.samples.size()));
  }
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32le(out, data_size);

  for (double s : clip.samples) {
    if (is_float) {
      float f = static_cast<float>(s);
      std::uint32_t raw;
      std::memcpy(&raw, &f, sizeof(raw));
      put_u32le(out, raw);
    } else {
      const double clamped = std::clamp(s, -1.0, 1.0);
      if (format == WavFormat::pcm16) {
        auto v = static_cast<std::int32_t>(std::lrint(clamped * 32768.0));
        v = std::clamp(v, -32768, 32767);
        put_u16le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
      } else if (format == WavFormat::pcm24) {
        auto v = static_cast<std::int32_t>(std::lrint(clamped * 8388608.0));
        v = std::clamp(v, -8388608, 8388607);
        out.push_back(static_cast<unsigned char>(v & 0xff));
        out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
        out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
      } else {  // pcm8
        auto v = static_cast<std::int32_t>(std::lrint(clamped * 128.0)) + 128;
        v = std::clamp(v, 0, 255);
        out.push_back(static_cast<unsigned char>(v));
      }
    }
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) raise(ErrorKind::io, "io_error", "cannot open for writing: " + path);
  file.write(reinterpret_cast<const char*>(out.data()),
             static_cast<std::streamsize>(out.size()));
  if (!file) raise(ErrorKind::io, "io_error", "write failed: " + path);
}

}  // namespace mispron

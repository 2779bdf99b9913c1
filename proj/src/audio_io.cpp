// Copyright 2026 The Crydet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "crydet/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "crydet/error.hpp"

namespace crydet::audio {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

float decode_sample(const unsigned char* p, std::uint16_t format, int bits) {
  if (format == kFormatFloat) {
    if (bits == 32) {
      float f;
      std::uint32_t u = read_u32(p);
      std::memcpy(&f, &u, 4);
      return f;
    }
    // 64-bit float
    std::uint64_t u = static_cast<std::uint64_t>(read_u32(p)) |
                      (static_cast<std::uint64_t>(read_u32(p + 4)) << 32);
    double d;
    std::memcpy(&d, &u, 8);
    return static_cast<float>(d);
  }
  switch (bits) {
    case 8:  // unsigned
      return (static_cast<int>(p[0]) - 128) / 128.0f;
    case 16: {
      std::int16_t v = static_cast<std::int16_t>(read_u16(p));
      return static_cast<float>(v) / 32768.0f;
    }
    case 24: {
      std::int32_t v = (p[0] << 8) | (p[1] << 16) |
                       (static_cast<std::int32_t>(p[2]) << 24);
      v >>= 8;  // sign-extend
      return static_cast<float>(v) / 8388608.0f;
    }
    case 32: {
      std::int32_t v = static_cast<std::int32_t>(read_u32(p));
      return static_cast<float>(v) / 2147483648.0f;
    }
    default:
      throw DataError("wav: unsupported PCM bit depth " + std::to_string(bits));
  }
}

}  // namespace

AudioClip load_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("wav: cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw DataError("wav: not a RIFF/WAVE file: " + path);
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t off = 12;
  while (off + 8 <= n) {
    const std::uint32_t chunk_len = read_u32(p + off + 4);
    const unsigned char* body = p + off + 8;
    if (off + 8 + chunk_len > n) throw DataError("wav: truncated chunk in " + path);
    if (std::memcmp(p + off, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw DataError("wav: short fmt chunk in " + path);
      format = read_u16(body);
      channels = read_u16(body + 2);
      rate = read_u32(body + 4);
      bits = read_u16(body + 14);
      if (format == kFormatExtensible) {
        if (chunk_len < 40) throw DataError("wav: short extensible fmt in " + path);
        format = read_u16(body + 24);  // first two bytes of the subformat GUID
      }
    } else if (std::memcmp(p + off, "data", 4) == 0) {
      data = body;
      data_len = chunk_len;
    }
    off += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }

  if (format == 0 || data == nullptr) throw DataError("wav: missing fmt/data chunk in " + path);
  if (format != kFormatPcm && format != kFormatFloat) {
    throw DataError("wav: unsupported codec (format tag " + std::to_string(format) +
                    ") in " + path);
  }
  if (channels == 0 || rate == 0) throw DataError("wav: bad fmt fields in " + path);
  if (format == kFormatFloat && bits != 32 && bits != 64) {
    throw DataError("wav: unsupported float bit depth in " + path);
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  if (frame_bytes == 0) throw DataError("wav: zero frame size in " + path);
  const std::size_t frames = data_len / frame_bytes;
  if (frames == 0) throw DataError("wav: zero-length audio in " + path);

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      acc += decode_sample(data + i * frame_bytes + c * bytes_per_sample, format,
                           bits);
    }
    float v = static_cast<float>(acc / channels);
    clip.samples[i] = std::clamp(v, -1.0f, 1.0f);
  }
  return clip;
}

void save_wav(const std::string& path, const AudioClip& clip, bool float_format) {
  if (clip.samples.empty()) throw DataError("wav: refusing to write empty clip");
  const std::uint16_t bits = float_format ? 32 : 16;
  const std::uint16_t fmt = float_format ? kFormatFloat : kFormatPcm;
  const std::uint32_t data_len =
      static_cast<std::uint32_t>(clip.samples.size() * (bits / 8));

  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, fmt);
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * (bits / 8));
  put_u16(out, static_cast<std::uint16_t>(bits / 8));
  put_u16(out, bits);
  out += "data";
  put_u32(out, data_len);

  if (float_format) {
    for (float v : clip.samples) {
      std::uint32_t u;
      std::memcpy(&u, &v, 4);
      put_u32(out, u);
    }
  } else {
    for (float v : clip.samples) {
      const double x = std::clamp(static_cast<double>(v), -1.0, 1.0);
      long q = std::lround(x * 32768.0);
      q = std::clamp(q, -32768l, 32767l);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("wav: cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("wav: write failed for " + path);
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw std::invalid_argument("resample: target_rate <= 0");
  if (clip.sample_rate == target_rate) return clip;

  AudioClip out;
  out.sample_rate = target_rate;
  out.recording_id = clip.recording_id;
  out.participant_id = clip.participant_id;

  const std::size_t in_len = clip.samples.size();
  const std::size_t out_len = static_cast<std::size_t>(std::llround(
      static_cast<double>(in_len) * target_rate / clip.sample_rate));
  out.samples.resize(out_len);
  const double ratio = static_cast<double>(clip.sample_rate) / target_rate;
  for (std::size_t i = 0; i < out_len; ++i) {
    const double pos = i * ratio;
    std::size_t i0 = static_cast<std::size_t>(pos);
    if (i0 >= in_len - 1) {
      out.samples[i] = clip.samples[in_len - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(i0);
    out.samples[i] = static_cast<float>((1.0 - frac) * clip.samples[i0] +
                                        frac * clip.samples[i0 + 1]);
  }
  return out;
}

}  // namespace crydet::audio

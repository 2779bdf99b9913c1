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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "crydet/audio_io.hpp"
#include "crydet/error.hpp"
#include "crydet/rng.hpp"

using namespace crydet;
namespace fs = std::filesystem;

namespace {

const fs::path kTmp = fs::temp_directory_path() / "crydet_audio_test";

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

// hand-rolled PCM16 writer, independent of save_wav
std::string write_pcm16(const std::vector<std::int16_t>& interleaved,
                        int channels, int rate, std::uint16_t format_tag = 1) {
  std::string out;
  const std::uint32_t data_len = static_cast<std::uint32_t>(interleaved.size() * 2);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, format_tag);
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, static_cast<std::uint32_t>(rate));
  put_u32(out, static_cast<std::uint32_t>(rate * channels * 2));
  put_u16(out, static_cast<std::uint16_t>(channels * 2));
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_len);
  for (std::int16_t v : interleaved) put_u16(out, static_cast<std::uint16_t>(v));

  fs::create_directories(kTmp);
  const std::string path = (kTmp / "hand.wav").string();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  return path;
}

}  // namespace

TEST_CASE("pcm16 scaling: 32767 -> 32767/32768") {
  const auto path = write_pcm16({32767, -32768, 0}, 1, 22050);
  const auto clip = audio::load_wav(path);
  REQUIRE(clip.samples.size() == 3);
  CHECK(clip.samples[0] == doctest::Approx(32767.0 / 32768.0).epsilon(1e-9));
  CHECK(clip.samples[1] == doctest::Approx(-1.0));
  CHECK(clip.samples[2] == 0.0f);
  CHECK(clip.sample_rate == 22050);
}

TEST_CASE("stereo averages to mono") {
  // frames: (0.5, -0.5), (0.25, 0.25)
  const auto path = write_pcm16({16384, -16384, 8192, 8192}, 2, 22050);
  const auto clip = audio::load_wav(path);
  REQUIRE(clip.samples.size() == 2);
  CHECK(clip.samples[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(clip.samples[1] == doctest::Approx(0.25).epsilon(1e-4));
}

TEST_CASE("duration bookkeeping") {
  std::vector<std::int16_t> one_second(22050, 1000);
  const auto path = write_pcm16(one_second, 1, 22050);
  const auto clip = audio::load_wav(path);
  CHECK(clip.samples.size() == 22050);
  CHECK(clip.duration_seconds() == doctest::Approx(1.0));
}

TEST_CASE("load errors: missing, zero-length, unsupported codec") {
  CHECK_THROWS_AS(audio::load_wav((kTmp / "nope.wav").string()), DataError);
  CHECK_THROWS_AS(audio::load_wav(write_pcm16({}, 1, 22050)), DataError);
  // ADPCM format tag
  CHECK_THROWS_AS(audio::load_wav(write_pcm16({1, 2, 3}, 1, 22050, 2)), DataError);
}

TEST_CASE("pcm16 round-trip within one quantization step") {
  Rng rng(3);
  audio::AudioClip clip;
  clip.sample_rate = 22050;
  clip.samples.resize(5000);
  for (auto& v : clip.samples) v = static_cast<float>(rng.uniform(-1.0, 1.0));

  fs::create_directories(kTmp);
  const std::string path = (kTmp / "rt.wav").string();
  audio::save_wav(path, clip);
  const auto back = audio::load_wav(path);
  REQUIRE(back.samples.size() == clip.samples.size());
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    CHECK(std::abs(back.samples[i] - clip.samples[i]) <= 1.0f / 32768.0f);
  }

  // float32 container is exact
  audio::save_wav(path, clip, /*float_format=*/true);
  const auto fb = audio::load_wav(path);
  CHECK(fb.samples == clip.samples);
}

TEST_CASE("resample: identity, constants, duration") {
  audio::AudioClip clip;
  clip.sample_rate = 22050;
  clip.samples.assign(22050, 0.25f);
  const auto same = audio::resample(clip, 22050);
  CHECK(same.samples == clip.samples);

  audio::AudioClip low;
  low.sample_rate = 8000;
  low.samples.assign(8000, 0.3f);
  const auto up = audio::resample(low, 22050);
  CHECK(up.samples.size() == 22050);
  for (float v : up.samples) CHECK(v == doctest::Approx(0.3).epsilon(1e-6));
  // duration preserved within one output sample period
  CHECK(std::abs(up.duration_seconds() - low.duration_seconds()) <= 1.0 / 22050);

  CHECK_THROWS_AS(audio::resample(clip, 0), std::invalid_argument);
}

TEST_CASE("resampled sine correlates with analytic sine") {
  audio::AudioClip hi;
  hi.sample_rate = 44100;
  hi.samples.resize(44100);
  for (std::size_t i = 0; i < hi.samples.size(); ++i) {
    hi.samples[i] =
        static_cast<float>(std::sin(2.0 * 3.14159265358979323846 * 100.0 * i / 44100.0));
  }
  const auto down = audio::resample(hi, 22050);
  REQUIRE(down.samples.size() == 22050);

  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < down.samples.size(); ++i) {
    const double ref =
        std::sin(2.0 * 3.14159265358979323846 * 100.0 * i / 22050.0);
    num += ref * down.samples[i];
    da += ref * ref;
    db += static_cast<double>(down.samples[i]) * down.samples[i];
  }
  CHECK(num / std::sqrt(da * db) > 0.999);
}

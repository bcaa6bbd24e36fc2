// Copyright 2026  aqeval authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace aqeval {

enum class SampleFormat { kPcm16, kFloat32 };

struct WavInfo {
  int sample_rate = 0;
  int channels = 0;
  int bits_per_sample = 0;
  SampleFormat format = SampleFormat::kPcm16;
  std::uint64_t frames = 0;
  std::uint64_t data_offset = 0;
  std::uint64_t data_bytes = 0;

  double duration() const {
    return sample_rate > 0 ? static_cast<double>(frames) / sample_rate : 0.0;
  }
};

// Planar multichannel audio. Samples are nominally in [-1, 1]; anything
// finite is accepted and out-of-range values are clipped on write.
class AudioBuffer {
 public:
  AudioBuffer() = default;
  AudioBuffer(int sample_rate, int channels, std::size_t frames);
  // Throws AudioError if channel lengths differ or a sample is not finite.
  AudioBuffer(int sample_rate, std::vector<std::vector<double>> channels);

  static AudioBuffer mono(int sample_rate, std::vector<double> samples);

  int sample_rate() const { return sample_rate_; }
  int channels() const { return static_cast<int>(data_.size()); }
  std::size_t frames() const { return data_.empty() ? 0 : data_[0].size(); }
  bool empty() const { return frames() == 0; }
  double duration() const {
    return sample_rate_ > 0 ? static_cast<double>(frames()) / sample_rate_ : 0.0;
  }

  std::vector<double>& channel(int c) { return data_[static_cast<std::size_t>(c)]; }
  const std::vector<double>& channel(int c) const { return data_[static_cast<std::size_t>(c)]; }

  // Average over channels.
  std::vector<double> downmix() const;
  double peak() const;

  friend bool operator==(const AudioBuffer&, const AudioBuffer&) = default;

 private:
  int sample_rate_ = 0;
  std::vector<std::vector<double>> data_;
};

// Header-only probe. Checks the RIFF size against the file size and the data
// chunk against the bytes actually present.
WavInfo probe_wav(const std::filesystem::path& path);
WavInfo parse_wav_header(std::string_view bytes);

AudioBuffer read_wav(const std::filesystem::path& path);
AudioBuffer decode_wav(std::string_view bytes);

// 16-bit PCM, no dither; samples are clipped to [-1, 1] and rounded to the
// nearest code.
std::string encode_wav_pcm16(const AudioBuffer& audio);
void write_wav(const AudioBuffer& audio, const std::filesystem::path& path);

}  // namespace aqeval

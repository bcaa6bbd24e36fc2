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

#include "aqeval/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "aqeval/digest.hpp"
#include "aqeval/error.hpp"

namespace aqeval {

static_assert(std::endian::native == std::endian::little,
              "WAV codec assumes a little-endian host");

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <class T>
T load(std::string_view bytes, std::size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

template <class T>
void store(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

}  // namespace

AudioBuffer::AudioBuffer(int sample_rate, int channels, std::size_t frames)
    : sample_rate_(sample_rate),
      data_(static_cast<std::size_t>(channels), std::vector<double>(frames, 0.0)) {}

AudioBuffer::AudioBuffer(int sample_rate, std::vector<std::vector<double>> channels)
    : sample_rate_(sample_rate), data_(std::move(channels)) {
  if (sample_rate_ <= 0) throw AudioError("sample rate must be positive");
  for (const auto& ch : data_) {
    if (ch.size() != data_.front().size()) throw AudioError("channel lengths differ");
    for (double s : ch) {
      if (!std::isfinite(s)) throw AudioError("non-finite sample");
    }
  }
}

AudioBuffer AudioBuffer::mono(int sample_rate, std::vector<double> samples) {
  std::vector<std::vector<double>> ch;
  ch.push_back(std::move(samples));
  return AudioBuffer(sample_rate, std::move(ch));
}

std::vector<double> AudioBuffer::downmix() const {
  if (data_.size() == 1) return data_[0];
  std::vector<double> out(frames(), 0.0);
  for (const auto& ch : data_) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += ch[i];
  }
  const double scale = 1.0 / static_cast<double>(data_.size());
  for (double& v : out) v *= scale;
  return out;
}

double AudioBuffer::peak() const {
  double p = 0.0;
  for (const auto& ch : data_) {
    for (double s : ch) p = std::max(p, std::abs(s));
  }
  return p;
}

WavInfo parse_wav_header(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE") {
    throw AudioError("not a RIFF/WAVE file");
  }
  const auto riff_size = load<std::uint32_t>(bytes, 4);
  if (static_cast<std::uint64_t>(riff_size) + 8 != bytes.size()) {
    throw AudioError("truncated or padded WAV: RIFF size " + std::to_string(riff_size + 8ULL) +
                     " != file size " + std::to_string(bytes.size()));
  }

  WavInfo info;
  bool have_fmt = false;
  bool have_data = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const auto id = bytes.substr(pos, 4);
    const std::uint64_t size = load<std::uint32_t>(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (size < 16 || body + size > bytes.size()) throw AudioError("bad fmt chunk");
      std::uint16_t tag = load<std::uint16_t>(bytes, body);
      info.channels = load<std::uint16_t>(bytes, body + 2);
      info.sample_rate = static_cast<int>(load<std::uint32_t>(bytes, body + 4));
      info.bits_per_sample = load<std::uint16_t>(bytes, body + 14);
      if (tag == kFormatExtensible) {
        if (size < 40) throw AudioError("bad extensible fmt chunk");
        tag = load<std::uint16_t>(bytes, body + 24);
      }
      if (tag == kFormatPcm && info.bits_per_sample == 16) {
        info.format = SampleFormat::kPcm16;
      } else if (tag == kFormatFloat && info.bits_per_sample == 32) {
        info.format = SampleFormat::kFloat32;
      } else {
        throw AudioError("unsupported WAV encoding (format " + std::to_string(tag) + ", " +
                         std::to_string(info.bits_per_sample) + " bits)");
      }
      if (info.channels != 1 && info.channels != 2) {
        throw AudioError("unsupported channel count " + std::to_string(info.channels));
      }
      if (info.sample_rate <= 0) throw AudioError("bad sample rate");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw AudioError("data chunk before fmt chunk");
      if (body + size > bytes.size()) {
        throw AudioError("truncated data chunk: declares " + std::to_string(size) +
                         " bytes, " + std::to_string(bytes.size() - body) + " present");
      }
      const std::uint64_t frame_bytes =
          static_cast<std::uint64_t>(info.channels) * (info.bits_per_sample / 8);
      if (size % frame_bytes != 0) throw AudioError("data chunk is not whole frames");
      info.data_offset = body;
      info.data_bytes = size;
      info.frames = size / frame_bytes;
      have_data = true;
      break;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt) throw AudioError("missing fmt chunk");
  if (!have_data) throw AudioError("missing data chunk");
  return info;
}

WavInfo probe_wav(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw AudioError("missing audio file: " + path.string());
  }
  try {
    return parse_wav_header(read_file(path));
  } catch (const AudioError& e) {
    throw AudioError(path.string() + ": " + e.what());
  }
}

AudioBuffer decode_wav(std::string_view bytes) {
  const WavInfo info = parse_wav_header(bytes);
  std::vector<std::vector<double>> ch(static_cast<std::size_t>(info.channels),
                                      std::vector<double>(info.frames));
  const std::string_view data = bytes.substr(info.data_offset, info.data_bytes);
  const std::size_t nch = ch.size();
  for (std::size_t f = 0; f < info.frames; ++f) {
    for (std::size_t c = 0; c < nch; ++c) {
      const std::size_t i = f * nch + c;
      if (info.format == SampleFormat::kPcm16) {
        ch[c][f] = load<std::int16_t>(data, i * 2) / 32768.0;
      } else {
        const float v = load<float>(data, i * 4);
        if (!std::isfinite(v)) throw AudioError("non-finite float sample");
        ch[c][f] = v;
      }
    }
  }
  return AudioBuffer(info.sample_rate, std::move(ch));
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw AudioError("missing audio file: " + path.string());
  }
  try {
    return decode_wav(read_file(path));
  } catch (const AudioError& e) {
    throw AudioError(path.string() + ": " + e.what());
  }
}

std::string encode_wav_pcm16(const AudioBuffer& audio) {
  const auto nch = static_cast<std::uint16_t>(audio.channels());
  const auto frames = audio.frames();
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * nch * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  store<std::uint32_t>(out, 36 + data_bytes);
  out += "WAVEfmt ";
  store<std::uint32_t>(out, 16);
  store<std::uint16_t>(out, kFormatPcm);
  store<std::uint16_t>(out, nch);
  store<std::uint32_t>(out, static_cast<std::uint32_t>(audio.sample_rate()));
  store<std::uint32_t>(out, static_cast<std::uint32_t>(audio.sample_rate()) * nch * 2);
  store<std::uint16_t>(out, static_cast<std::uint16_t>(nch * 2));
  store<std::uint16_t>(out, 16);
  out += "data";
  store<std::uint32_t>(out, data_bytes);
  for (std::size_t f = 0; f < frames; ++f) {
    for (int c = 0; c < nch; ++c) {
      const double s = std::clamp(audio.channel(c)[f], -1.0, 1.0);
      const long code = std::clamp(std::lround(s * 32768.0), -32768L, 32767L);
      store<std::int16_t>(out, static_cast<std::int16_t>(code));
    }
  }
  return out;
}

void write_wav(const AudioBuffer& audio, const std::filesystem::path& path) {
  write_file_atomic(path, encode_wav_pcm16(audio));
}

}  // namespace aqeval

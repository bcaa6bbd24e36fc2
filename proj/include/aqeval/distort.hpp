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

// Labelled distortions for proxy-task corpora: reverberation, sudden
// silence, tonal anomalies and band-limited noise bursts.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "aqeval/audio.hpp"
#include "aqeval/corpus.hpp"

namespace aqeval {

enum class DistortionKind { kReverb, kSilence, kAnomalyTone, kNoiseBurst };
std::string_view to_string(DistortionKind k);
DistortionKind parse_distortion_kind(std::string_view s);

struct DistortionSpec {
  DistortionKind kind = DistortionKind::kSilence;
  // reverb
  double rt60 = 0.5;
  double wet_mix = 0.5;
  // silence
  double start = 0.0;
  // silence, anomaly_tone, noise_burst
  double duration = 0.2;
  // anomaly_tone
  double frequency = 1000.0;
  // anomaly_tone, noise_burst: signal-to-burst power ratio in dB
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

// Seeded random-sign noise under the envelope exp(-t * ln(10^3) / rt60), so
// the energy envelope falls by 60 dB at rt60. Length ceil(1.5 * rt60 * sr),
// normalised to unit energy.
std::vector<double> reverb_impulse_response(double rt60, int sample_rate, std::uint64_t seed);

// (1 - wet) * dry + wet * (dry * IR), truncated to the input length. The
// result is peak-normalised only if some |sample| would exceed 1.
AudioBuffer apply_reverb(const AudioBuffer& audio, double rt60, double wet_mix,
                         std::uint64_t seed, bool parallel = true);

// Samples in [round(start*sr), round((start+duration)*sr)) become exactly 0.
AudioBuffer inject_silence(const AudioBuffer& audio, double start, double duration);

// Mixes a tone or band-limited (300-3400 Hz) noise burst at a seeded random
// position, scaled so signal power / burst power over the burst window equals
// snr_db. Silent windows fall back to the clip power, then to -40 dBFS.
AudioBuffer inject_anomaly(const AudioBuffer& audio, const DistortionSpec& spec);

// Start frame chosen for a burst of `burst_frames` in a clip of `frames`.
std::size_t anomaly_position(std::size_t frames, std::size_t burst_frames, std::uint64_t seed);

AudioBuffer apply_distortion(const AudioBuffer& audio, const DistortionSpec& spec);

struct SynthOptions {
  DistortionKind kind = DistortionKind::kSilence;
  double rate = 0.5;
  std::uint64_t seed = 0;
  // Parameter ranges drawn per clip.
  double rt60_min = 0.3, rt60_max = 1.2;
  double wet_min = 0.4, wet_max = 0.8;
  double silence_duration = 0.2;
  double burst_duration = 0.2;
  double snr_min_db = 0.0, snr_max_db = 10.0;
  double tone_min_hz = 400.0, tone_max_hz = 3000.0;
};

struct ClipSource {
  std::string id;
  AudioRef audio;
};

// Task definition used for a distortion kind's detection records.
TaskDefinition proxy_task(DistortionKind kind);

// Distorts round(rate * n) clips (seeded selection), copies the rest
// byte-for-byte, writes audio under out_dir/audio and returns binary
// records (score 1 = distorted) in input order. Per-clip parameters come
// from derive_seed(seed, id), so parallel and serial runs agree.
std::vector<EvalRecord> synth_proxy_corpus(std::span<const ClipSource> clean,
                                           const SynthOptions& options,
                                           const std::filesystem::path& out_dir);

}  // namespace aqeval

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

#include "aqeval/distort.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "aqeval/error.hpp"
#include "aqeval/kernels.hpp"
#include "aqeval/rng.hpp"

namespace aqeval {

namespace {

constexpr double kFallbackPower = 1e-4;  // -40 dBFS
constexpr double kSilentPower = 1e-12;

// RBJ cookbook biquad, direct form I.
class Biquad {
 public:
  static Biquad highpass(double fc, double sr) { return make(fc, sr, true); }
  static Biquad lowpass(double fc, double sr) { return make(fc, sr, false); }

  void process(std::vector<double>& x) const {
    double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
    for (double& v : x) {
      const double y = b0_ * v + b1_ * x1 + b2_ * x2 - a1_ * y1 - a2_ * y2;
      x2 = x1;
      x1 = v;
      y2 = y1;
      y1 = y;
      v = y;
    }
  }

 private:
  static Biquad make(double fc, double sr, bool high) {
    const double w0 = 2.0 * std::numbers::pi * fc / sr;
    const double alpha = std::sin(w0) / std::numbers::sqrt2;  // Q = 1/sqrt(2)
    const double c = std::cos(w0);
    const double a0 = 1.0 + alpha;
    Biquad q;
    if (high) {
      q.b0_ = (1.0 + c) / 2.0 / a0;
      q.b1_ = -(1.0 + c) / a0;
      q.b2_ = (1.0 + c) / 2.0 / a0;
    } else {
      q.b0_ = (1.0 - c) / 2.0 / a0;
      q.b1_ = (1.0 - c) / a0;
      q.b2_ = (1.0 - c) / 2.0 / a0;
    }
    q.a1_ = -2.0 * c / a0;
    q.a2_ = (1.0 - alpha) / a0;
    return q;
  }
  double b0_ = 1, b1_ = 0, b2_ = 0, a1_ = 0, a2_ = 0;
};

double mean_power(const AudioBuffer& a, std::size_t begin, std::size_t end) {
  if (end <= begin) return 0.0;
  double acc = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    const auto& ch = a.channel(c);
    for (std::size_t i = begin; i < end; ++i) acc += ch[i] * ch[i];
  }
  return acc / (static_cast<double>(end - begin) * a.channels());
}

std::size_t to_frames(double seconds, int sample_rate) {
  return static_cast<std::size_t>(std::llround(seconds * sample_rate));
}

}  // namespace

std::string_view to_string(DistortionKind k) {
  switch (k) {
    case DistortionKind::kReverb: return "reverb";
    case DistortionKind::kSilence: return "silence";
    case DistortionKind::kAnomalyTone: return "anomaly_tone";
    case DistortionKind::kNoiseBurst: return "noise_burst";
  }
  return "?";
}

DistortionKind parse_distortion_kind(std::string_view s) {
  if (s == "reverb") return DistortionKind::kReverb;
  if (s == "silence") return DistortionKind::kSilence;
  if (s == "anomaly_tone") return DistortionKind::kAnomalyTone;
  if (s == "noise_burst") return DistortionKind::kNoiseBurst;
  throw ValidationError("unknown distortion kind '" + std::string(s) + "'");
}

std::vector<double> reverb_impulse_response(double rt60, int sample_rate, std::uint64_t seed) {
  if (!(rt60 > 0.05 && rt60 <= 5.0)) throw ValidationError("rt60 must lie in (0.05, 5.0] s");
  if (sample_rate <= 0) throw ValidationError("sample rate must be positive");
  const auto length = static_cast<std::size_t>(std::ceil(1.5 * rt60 * sample_rate));
  const double decay = std::log(1e3) / rt60;
  Rng rng(seed);
  std::vector<double> ir(length);
  double energy = 0.0;
  for (std::size_t n = 0; n < length; ++n) {
    const double t = static_cast<double>(n) / sample_rate;
    ir[n] = rng.sign() * std::exp(-t * decay);
    energy += ir[n] * ir[n];
  }
  const double norm = 1.0 / std::sqrt(energy);
  for (double& v : ir) v *= norm;
  return ir;
}

AudioBuffer apply_reverb(const AudioBuffer& audio, double rt60, double wet_mix,
                         std::uint64_t seed, bool parallel) {
  if (audio.empty()) throw AudioError("apply_reverb: empty buffer");
  if (!(wet_mix >= 0.0 && wet_mix <= 1.0)) throw ValidationError("wet_mix must lie in [0, 1]");
  const auto ir = reverb_impulse_response(rt60, audio.sample_rate(), seed);
  if (wet_mix == 0.0) return audio;

  const auto convolve = parallel ? &kernels::omp::convolve : &kernels::serial::convolve;
  std::vector<std::vector<double>> out(static_cast<std::size_t>(audio.channels()));
  double peak = 0.0;
  for (int c = 0; c < audio.channels(); ++c) {
    const auto& dry = audio.channel(c);
    const auto wet = convolve(dry, ir);
    auto& o = out[static_cast<std::size_t>(c)];
    o.resize(dry.size());
    for (std::size_t i = 0; i < dry.size(); ++i) {
      o[i] = (1.0 - wet_mix) * dry[i] + wet_mix * wet[i];
      peak = std::max(peak, std::abs(o[i]));
    }
  }
  if (peak > 1.0) {
    for (auto& ch : out) {
      for (double& v : ch) v /= peak;
    }
  }
  return AudioBuffer(audio.sample_rate(), std::move(out));
}

AudioBuffer inject_silence(const AudioBuffer& audio, double start, double duration) {
  if (start < 0.0 || duration < 0.0) throw ValidationError("silence span must be non-negative");
  const std::size_t begin = to_frames(start, audio.sample_rate());
  const std::size_t end = to_frames(start + duration, audio.sample_rate());
  if (end > audio.frames()) {
    throw ValidationError("silence span [" + std::to_string(start) + ", " +
                          std::to_string(start + duration) + ") s exceeds the clip");
  }
  AudioBuffer out = audio;
  for (int c = 0; c < out.channels(); ++c) {
    auto& ch = out.channel(c);
    std::fill(ch.begin() + static_cast<std::ptrdiff_t>(begin),
              ch.begin() + static_cast<std::ptrdiff_t>(end), 0.0);
  }
  return out;
}

std::size_t anomaly_position(std::size_t frames, std::size_t burst_frames, std::uint64_t seed) {
  Rng rng(derive_seed(seed, std::string_view("anomaly-position")));
  return static_cast<std::size_t>(rng.below(frames - burst_frames + 1));
}

AudioBuffer inject_anomaly(const AudioBuffer& audio, const DistortionSpec& spec) {
  if (spec.kind != DistortionKind::kAnomalyTone && spec.kind != DistortionKind::kNoiseBurst) {
    throw ValidationError("inject_anomaly needs an anomaly_tone or noise_burst spec");
  }
  if (!(spec.duration > 0.0)) throw ValidationError("burst duration must be positive");
  const int sr = audio.sample_rate();
  const std::size_t burst = std::max<std::size_t>(1, to_frames(spec.duration, sr));
  if (burst > audio.frames()) {
    throw ValidationError("clip shorter than the burst duration");
  }
  const std::size_t pos = anomaly_position(audio.frames(), burst, spec.seed);

  std::vector<double> shape(burst);
  if (spec.kind == DistortionKind::kAnomalyTone) {
    for (std::size_t i = 0; i < burst; ++i) {
      shape[i] = std::sin(2.0 * std::numbers::pi * spec.frequency * static_cast<double>(i) / sr);
    }
  } else {
    Rng rng(derive_seed(spec.seed, std::string_view("noise-burst")));
    for (double& v : shape) v = rng.normal();
    Biquad::highpass(300.0, sr).process(shape);
    if (3400.0 < 0.45 * sr) Biquad::lowpass(3400.0, sr).process(shape);
  }
  double shape_power = 0.0;
  for (double v : shape) shape_power += v * v;
  shape_power /= static_cast<double>(burst);
  if (shape_power <= 0.0) return audio;

  double signal_power = mean_power(audio, pos, pos + burst);
  if (signal_power < kSilentPower) signal_power = mean_power(audio, 0, audio.frames());
  if (signal_power < kSilentPower) signal_power = kFallbackPower;

  const double target_power = signal_power / std::pow(10.0, spec.snr_db / 10.0);
  const double gain = std::sqrt(target_power / shape_power);
  AudioBuffer out = audio;
  for (int c = 0; c < out.channels(); ++c) {
    auto& ch = out.channel(c);
    for (std::size_t i = 0; i < burst; ++i) ch[pos + i] += gain * shape[i];
  }
  return out;
}

AudioBuffer apply_distortion(const AudioBuffer& audio, const DistortionSpec& spec) {
  switch (spec.kind) {
    case DistortionKind::kReverb:
      return apply_reverb(audio, spec.rt60, spec.wet_mix, spec.seed);
    case DistortionKind::kSilence:
      return inject_silence(audio, spec.start, spec.duration);
    case DistortionKind::kAnomalyTone:
    case DistortionKind::kNoiseBurst:
      return inject_anomaly(audio, spec);
  }
  return audio;
}

TaskDefinition proxy_task(DistortionKind kind) {
  TaskDefinition t;
  t.scale = CalibrationScale::binary();
  t.higher_is_better = false;
  switch (kind) {
    case DistortionKind::kReverb:
      t.task_id = "proxy_reverb";
      t.name = "Reverberation detection";
      t.description =
          "Does this recording contain added reverberation, as if it were played in a large "
          "echoing room? Please respond with 1 if reverberation is present, 0 otherwise.";
      break;
    case DistortionKind::kSilence:
      t.task_id = "proxy_silence";
      t.name = "Sudden silence detection";
      t.description =
          "Does the audio drop out into sudden silence partway through? Please respond with 1 "
          "if a sudden silence is present, 0 otherwise.";
      break;
    case DistortionKind::kAnomalyTone:
      t.task_id = "proxy_anomaly_tone";
      t.name = "Anomalous sound detection";
      t.description =
          "Does the audio contain an anomalous tonal sound that does not belong to the "
          "recording? Please respond with 1 if an anomalous sound is present, 0 otherwise.";
      break;
    case DistortionKind::kNoiseBurst:
      t.task_id = "proxy_noise_burst";
      t.name = "Noise burst detection";
      t.description =
          "Is the recording interrupted by a burst of voice-band noise? Please respond with 1 "
          "if a noise burst is present, 0 otherwise.";
      break;
  }
  return t;
}

namespace {

DistortionSpec draw_spec(const SynthOptions& o, const AudioBuffer& audio, std::uint64_t clip_seed) {
  Rng rng(clip_seed);
  DistortionSpec s;
  s.kind = o.kind;
  s.seed = clip_seed;
  switch (o.kind) {
    case DistortionKind::kReverb:
      s.rt60 = rng.uniform(o.rt60_min, o.rt60_max);
      s.wet_mix = rng.uniform(o.wet_min, o.wet_max);
      break;
    case DistortionKind::kSilence: {
      s.duration = std::min(o.silence_duration, audio.duration());
      const double slack = audio.duration() - s.duration;
      // Quantise to whole frames so start + duration never rounds past the end.
      const auto slack_frames = static_cast<std::uint64_t>(std::floor(slack * audio.sample_rate()));
      s.start = static_cast<double>(rng.below(slack_frames + 1)) / audio.sample_rate();
      break;
    }
    case DistortionKind::kAnomalyTone:
      s.duration = std::min(o.burst_duration, audio.duration());
      s.frequency = rng.uniform(o.tone_min_hz, o.tone_max_hz);
      s.snr_db = rng.uniform(o.snr_min_db, o.snr_max_db);
      break;
    case DistortionKind::kNoiseBurst:
      s.duration = std::min(o.burst_duration, audio.duration());
      s.snr_db = rng.uniform(o.snr_min_db, o.snr_max_db);
      break;
  }
  return s;
}

}  // namespace

std::vector<EvalRecord> synth_proxy_corpus(std::span<const ClipSource> clean,
                                           const SynthOptions& options,
                                           const std::filesystem::path& out_dir) {
  if (!(options.rate > 0.0 && options.rate < 1.0)) {
    throw ValidationError("distortion rate must lie in (0, 1)");
  }
  if (clean.empty()) return {};

  const std::filesystem::path audio_dir = out_dir / "audio";
  std::error_code ec;
  std::filesystem::create_directories(audio_dir, ec);
  if (ec || !std::filesystem::is_directory(audio_dir)) {
    throw IoError("cannot create output directory " + audio_dir.string());
  }

  const std::size_t n = clean.size();
  const auto n_distorted = static_cast<std::size_t>(std::llround(options.rate * n));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng selector(derive_seed(options.seed, std::string_view("selection")));
  selector.shuffle(order);
  std::vector<bool> distort(n, false);
  for (std::size_t i = 0; i < n_distorted; ++i) distort[order[i]] = true;

  const TaskDefinition task = proxy_task(options.kind);
  const std::string kind_name(to_string(options.kind));
  std::vector<EvalRecord> records(n);
  std::vector<std::string> errors(n);

  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    try {
      const auto& src = clean[i];
      EvalRecord r;
      r.id = kind_name + "-" + src.id;
      r.origin_id = r.id;
      r.source = "synth-" + kind_name;
      r.task = task;
      r.split = Split::kTrain;
      r.label_kind = LabelKind::kProxy;
      r.audio.path = audio_dir / (r.id + ".wav");
      if (distort[i]) {
        const AudioBuffer audio = read_wav(src.audio.path);
        const auto spec = draw_spec(options, audio, derive_seed(options.seed, src.id));
        AudioBuffer distorted = apply_distortion(audio, spec);
        write_wav(distorted, r.audio.path);
        r.score = 1.0;
      } else {
        if (!std::filesystem::is_regular_file(src.audio.path)) {
          throw AudioError("unreadable input " + src.audio.path.string());
        }
        std::filesystem::copy_file(src.audio.path, r.audio.path,
                                   std::filesystem::copy_options::overwrite_existing);
        r.score = 0.0;
      }
      records[i] = std::move(r);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) throw IoError("synth " + clean[i].id + ": " + errors[i]);
  }
  return records;
}

}  // namespace aqeval

// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#include "idl/synth.hpp"

#include <cmath>
#include <numbers>

namespace idl {
namespace {

constexpr int kRate = 16000;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

Waveform synth_utterance(double f0, double resonance_hz, double am_rate_hz,
                         double tilt, std::uint64_t seed) {
  auto rng = make_rng(seed);
  // Long enough that even the shortest utterance yields at least one
  // 120-frame segment after a minimum-length crop (120 frames ~ 3.87 s).
  std::uniform_real_distribution<double> dur_dist(4.0, 7.0);
  std::uniform_real_distribution<double> phase_dist(0.0, kTwoPi);
  std::normal_distribution<double> noise_dist(0.0, 1.0);

  const double duration_s = dur_dist(rng);
  const int n = static_cast<int>(duration_s * kRate);

  // Harmonic stack with a resonance bump; amplitudes roll off as 1/k.
  const int n_harmonics = static_cast<int>(4000.0 / f0);
  std::vector<double> amp(n_harmonics + 1, 0.0);
  std::vector<double> phase(n_harmonics + 1, 0.0);
  for (int k = 1; k <= n_harmonics; ++k) {
    double fk = k * f0;
    double res = std::exp(-(fk - resonance_hz) * (fk - resonance_hz) /
                          (2.0 * 300.0 * 300.0));
    // `tilt` darkens the voice by steepening the high-frequency rolloff,
    // a static voice-quality cue on top of the harmonic stack.
    amp[k] = (1.0 / k) * (1.0 + 2.0 * res) * std::exp(-tilt * fk / 2000.0);
    phase[k] = phase_dist(rng);
  }
  const double vibrato_hz = 5.0;
  const double vibrato_depth = 0.01 * f0;
  const double am_phase = phase_dist(rng);

  std::vector<double> raw(n);
  double peak = 1e-9;
  for (int i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / kRate;
    double f0_t = f0 + vibrato_depth * std::sin(kTwoPi * vibrato_hz * t);
    double s = 0.0;
    for (int k = 1; k <= n_harmonics; ++k)
      s += amp[k] * std::sin(kTwoPi * k * f0_t * t + phase[k]);
    double am = 1.0 - 0.4 + 0.4 * std::sin(kTwoPi * am_rate_hz * t + am_phase);
    raw[i] = s * am;
    peak = std::max(peak, std::abs(raw[i]));
  }

  Waveform wave;
  wave.sample_rate_hz = kRate;
  wave.samples.resize(n);
  for (int i = 0; i < n; ++i) {
    double v = 0.3 * raw[i] / peak + 0.003 * noise_dist(rng);
    wave.samples[i] = static_cast<float>(v);
  }
  return wave;
}

}  // namespace

SynthCorpus synth_corpus(int n_speakers, int utts_per_speaker,
                         std::uint64_t seed, bool labeled) {
  if (n_speakers < 1) throw std::invalid_argument("n_speakers must be >= 1");
  if (utts_per_speaker < 1)
    throw std::invalid_argument("utts_per_speaker must be >= 1");

  SynthCorpus corpus;
  corpus.speaker_f0_hz.resize(n_speakers);
  for (int s = 0; s < n_speakers; ++s) {
    corpus.speaker_f0_hz[s] =
        n_speakers == 1 ? 200.0
                        : 100.0 + 200.0 * s / (n_speakers - 1);
  }

  // Unlabeled corpora split speakers 9:1 train:validation; labeled corpora
  // split speakers 60/20/20 train/validation/test.
  auto unlabeled_split = [&](int s) {
    int n_val = std::max(1, n_speakers / 10);
    return s >= n_speakers - n_val ? Split::Validation : Split::Train;
  };
  auto labeled_split = [&](int s) {
    int r = s % 5;
    if (r == 3) return Split::Validation;
    if (r == 4) return Split::Test;
    return Split::Train;
  };

  for (int s = 0; s < n_speakers; ++s) {
    double f0 = corpus.speaker_f0_hz[s];
    double resonance =
        500.0 + 3000.0 * s / std::max(1, n_speakers - 1);
    int label = labeled ? (s % 4 == 0 ? 1 : 0) : -1;

    auto utt_rng = make_rng(derive_seed(seed, 0x5eed, s));
    std::uniform_real_distribution<double> am_fast(5.0, 7.0);
    std::uniform_real_distribution<double> am_slow(1.5, 2.5);
    std::uniform_real_distribution<double> am_any(2.0, 7.0);
    // The positive class pairs slowed amplitude modulation with a darker
    // spectral tilt; unlabeled corpora draw from the pooled range so that
    // both cues vary in the pre-training material.
    std::uniform_real_distribution<double> tilt_pos(1.5, 2.5);
    std::uniform_real_distribution<double> tilt_neg(0.0, 0.5);
    std::uniform_real_distribution<double> tilt_any(0.0, 2.5);

    for (int u = 0; u < utts_per_speaker; ++u) {
      double am_rate, tilt;
      if (!labeled) {
        am_rate = am_any(utt_rng);
        tilt = tilt_any(utt_rng);
      } else {
        am_rate = label == 1 ? am_slow(utt_rng) : am_fast(utt_rng);
        tilt = label == 1 ? tilt_pos(utt_rng) : tilt_neg(utt_rng);
      }
      ManifestEntry e;
      char name[64];
      std::snprintf(name, sizeof(name), "spk%03d_utt%03d.wav", s, u);
      e.path = name;
      e.speaker_id = "spk" + std::to_string(s);
      e.label = label;
      e.split = labeled ? labeled_split(s) : unlabeled_split(s);
      corpus.entries.push_back(e);
      corpus.waves.push_back(synth_utterance(f0, resonance, am_rate, tilt,
                                             derive_seed(seed, s, u)));
    }
  }
  return corpus;
}

}  // namespace idl

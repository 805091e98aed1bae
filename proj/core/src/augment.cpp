// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#include "idl/augment.hpp"

#include <algorithm>
#include <cmath>

namespace idl {

AugmentKind augment_kind_from_string(const std::string& s) {
  if (s == "noise") return AugmentKind::Noise;
  if (s == "volume") return AugmentKind::Volume;
  if (s == "vtlp") return AugmentKind::Vtlp;
  if (s == "tm") return AugmentKind::TimeMask;
  if (s == "fm") return AugmentKind::FreqMask;
  if (s == "specaug") return AugmentKind::SpecAugment;
  throw std::invalid_argument("unknown augmentation: " + s);
}

std::string augment_kind_to_string(AugmentKind k) {
  switch (k) {
    case AugmentKind::Noise: return "noise";
    case AugmentKind::Volume: return "volume";
    case AugmentKind::Vtlp: return "vtlp";
    case AugmentKind::TimeMask: return "tm";
    case AugmentKind::FreqMask: return "fm";
    case AugmentKind::SpecAugment: return "specaug";
  }
  return "?";
}

bool is_signal_level(AugmentKind k) {
  return k == AugmentKind::Noise || k == AugmentKind::Volume ||
         k == AugmentKind::Vtlp;
}

Waveform add_noise(const Waveform& wave, double snr_db, std::uint64_t seed) {
  double signal_power = 0.0;
  for (float s : wave.samples) signal_power += double(s) * s;
  signal_power /= static_cast<double>(wave.samples.size());
  if (signal_power <= 0.0)
    throw std::runtime_error("add_noise: zero-energy input");

  auto rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> noise(wave.samples.size());
  double noise_power = 0.0;
  for (auto& v : noise) {
    v = gauss(rng);
    noise_power += v * v;
  }
  noise_power /= static_cast<double>(noise.size());

  const double target_noise_power = signal_power / std::pow(10.0, snr_db / 10.0);
  const double scale = std::sqrt(target_noise_power / noise_power);

  Waveform out = wave;
  for (size_t i = 0; i < out.samples.size(); ++i)
    out.samples[i] = static_cast<float>(out.samples[i] + scale * noise[i]);
  return out;
}

Waveform perturb_volume(const Waveform& wave, double gain) {
  if (gain <= 0.0) throw std::invalid_argument("perturb_volume: gain <= 0");
  Waveform out = wave;
  for (auto& s : out.samples)
    s = std::clamp(static_cast<float>(gain * s), -1.0f, 1.0f);
  return out;
}

Matrix vtlp_warp(const Matrix& power_spec, double alpha) {
  if (alpha <= 0.5 || alpha >= 2.0)
    throw std::invalid_argument("vtlp_warp: alpha outside (0.5, 2.0)");

  const int n_bins = power_spec.cols;
  const double f_max = static_cast<double>(n_bins - 1);
  const double f_b = f_max * std::min(alpha, 1.0) / alpha * (7.0 / 8.0);
  const double g_b = alpha * f_b;

  // Inverse of the piecewise-linear warp, evaluated per output bin.
  std::vector<double> src(n_bins);
  for (int j = 0; j < n_bins; ++j) {
    const double phi = static_cast<double>(j);
    if (phi <= g_b) {
      src[j] = phi / alpha;
    } else {
      src[j] = f_b + (phi - g_b) * (f_max - f_b) / (f_max - g_b);
    }
  }

  Matrix out(power_spec.rows, n_bins);
  for (int t = 0; t < power_spec.rows; ++t) {
    for (int j = 0; j < n_bins; ++j) {
      const double f = src[j];
      const int k0 = std::clamp(static_cast<int>(std::floor(f)), 0, n_bins - 1);
      const int k1 = std::min(k0 + 1, n_bins - 1);
      const double frac = f - k0;
      out.at(t, j) = static_cast<float>((1.0 - frac) * power_spec.at(t, k0) +
                                        frac * power_spec.at(t, k1));
    }
  }
  return out;
}

namespace {

float matrix_mean(const Matrix& m) {
  double acc = 0.0;
  for (float v : m.v) acc += v;
  return static_cast<float>(acc / static_cast<double>(m.size()));
}

// Piecewise-linear time warp with one control frame moved by w.
Matrix time_warp(const Matrix& seg, int warp_w, std::uint64_t seed) {
  const int frames = seg.cols;
  if (warp_w <= 0 || frames < 2 * warp_w + 2) return seg;
  auto rng = make_rng(seed);
  std::uniform_int_distribution<int> w_dist(-warp_w, warp_w);
  std::uniform_int_distribution<int> c_dist(warp_w, frames - 1 - warp_w);
  const int w = w_dist(rng);
  const int c = c_dist(rng);
  if (w == 0) return seg;

  const int c2 = c + w;  // warped position of the control frame
  Matrix out(seg.rows, frames);
  for (int j = 0; j < frames; ++j) {
    double t;
    if (j <= c2) {
      t = static_cast<double>(j) * c / c2;
    } else {
      t = c + static_cast<double>(j - c2) * (frames - 1 - c) /
                  (frames - 1 - c2);
    }
    const int t0 = std::clamp(static_cast<int>(std::floor(t)), 0, frames - 1);
    const int t1 = std::min(t0 + 1, frames - 1);
    const double frac = t - t0;
    for (int m = 0; m < seg.rows; ++m)
      out.at(m, j) = static_cast<float>((1.0 - frac) * seg.at(m, t0) +
                                        frac * seg.at(m, t1));
  }
  return out;
}

}  // namespace

Matrix time_mask(const Matrix& seg, int t_max, std::uint64_t seed) {
  const int frames = seg.cols;
  if (t_max < 0 || t_max > frames)
    throw std::invalid_argument("time_mask: t_max out of range");
  auto rng = make_rng(seed);
  std::uniform_int_distribution<int> width_dist(0, t_max);
  const int t = width_dist(rng);
  std::uniform_int_distribution<int> start_dist(0, frames - t);
  const int t0 = start_dist(rng);

  Matrix out = seg;
  if (t == 0) return out;
  const float fill = matrix_mean(seg);
  for (int m = 0; m < seg.rows; ++m)
    for (int j = t0; j < t0 + t; ++j) out.at(m, j) = fill;
  return out;
}

Matrix freq_mask(const Matrix& seg, int f_max, std::uint64_t seed) {
  const int bins = seg.rows;
  if (f_max < 0 || f_max > bins)
    throw std::invalid_argument("freq_mask: f_max out of range");
  auto rng = make_rng(seed);
  std::uniform_int_distribution<int> width_dist(0, f_max);
  const int f = width_dist(rng);
  std::uniform_int_distribution<int> start_dist(0, bins - f);
  const int m0 = start_dist(rng);

  Matrix out = seg;
  if (f == 0) return out;
  const float fill = matrix_mean(seg);
  for (int m = m0; m < m0 + f; ++m)
    for (int j = 0; j < seg.cols; ++j) out.at(m, j) = fill;
  return out;
}

Matrix spec_augment(const Matrix& seg, const AugmentParams& p,
                    std::uint64_t seed) {
  Matrix warped = time_warp(seg, p.warp_w, derive_seed(seed, 1));
  Matrix masked = time_mask(warped, p.t_max, derive_seed(seed, 2));
  return freq_mask(masked, p.f_max, derive_seed(seed, 3));
}

Matrix augment_features(AugmentKind kind, const Matrix& seg,
                        const AugmentParams& p, std::uint64_t seed) {
  switch (kind) {
    case AugmentKind::TimeMask: return time_mask(seg, p.t_max, seed);
    case AugmentKind::FreqMask: return freq_mask(seg, p.f_max, seed);
    case AugmentKind::SpecAugment: return spec_augment(seg, p, seed);
    default:
      throw std::invalid_argument(
          "augment_features: " + augment_kind_to_string(kind) +
          " is a signal-level augmentation");
  }
}

Waveform augment_signal(AugmentKind kind, const Waveform& wave,
                        const AugmentParams& p, std::uint64_t seed) {
  auto rng = make_rng(derive_seed(seed, 0xa46));
  switch (kind) {
    case AugmentKind::Noise: {
      std::uniform_real_distribution<double> d(p.snr_db_lo, p.snr_db_hi);
      return add_noise(wave, d(rng), derive_seed(seed, 0xa47));
    }
    case AugmentKind::Volume: {
      std::uniform_real_distribution<double> d(p.gain_lo, p.gain_hi);
      return perturb_volume(wave, d(rng));
    }
    default:
      throw std::invalid_argument(
          "augment_signal: " + augment_kind_to_string(kind) +
          " does not act on waveforms");
  }
}

double draw_vtlp_alpha(const AugmentParams& p, std::uint64_t seed) {
  auto rng = make_rng(derive_seed(seed, 0xa48));
  std::uniform_real_distribution<double> d(p.alpha_lo, p.alpha_hi);
  return d(rng);
}

}  // namespace idl

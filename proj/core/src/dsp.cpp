// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#include "idl/dsp.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace idl {
namespace {

constexpr double kPi = std::numbers::pi;

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) {
  return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
}

}  // namespace

std::vector<double> hann_window(int n) {
  if (n < 2) throw std::invalid_argument("hann_window: n must be >= 2");
  std::vector<double> w(n);
  for (int k = 0; k < n; ++k)
    w[k] = 0.5 - 0.5 * std::cos(2.0 * kPi * k / (n - 1));
  return w;
}

void fft_radix2(std::vector<std::complex<double>>& x) {
  const size_t n = x.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft_radix2: size must be a power of two");

  // Bit-reversal permutation.
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }

  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = x[i + k];
        std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

int num_frames(size_t n_samples) {
  if (n_samples < kFftSize) return 0;
  return static_cast<int>((n_samples - kFftSize) / kHopSize) + 1;
}

Matrix stft_power(const Waveform& wave) {
  const int frames = num_frames(wave.samples.size());
  if (frames == 0)
    throw std::runtime_error("stft_power: waveform shorter than one window");

  static const std::vector<double> window = hann_window(kFftSize);
  Matrix power(frames, kNumFftBins);
  std::vector<std::complex<double>> buf(kFftSize);
  for (int t = 0; t < frames; ++t) {
    const size_t off = static_cast<size_t>(t) * kHopSize;
    for (int i = 0; i < kFftSize; ++i)
      buf[i] = wave.samples[off + i] * window[i];
    fft_radix2(buf);
    for (int k = 0; k < kNumFftBins; ++k)
      power.at(t, k) = static_cast<float>(std::norm(buf[k]));
  }
  return power;
}

std::vector<double> mel_points_hz(int n_mels, double f_min_hz,
                                  double f_max_hz) {
  const double mel_min = hz_to_mel(f_min_hz);
  const double mel_max = hz_to_mel(f_max_hz);
  std::vector<double> pts(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    double m = mel_min + (mel_max - mel_min) * i / (n_mels + 1);
    pts[i] = mel_to_hz(m);
  }
  return pts;
}

Matrix mel_filterbank(int n_mels, int n_fft_bins, double f_min_hz,
                      double f_max_hz) {
  if (n_mels < 1) throw std::invalid_argument("mel_filterbank: n_mels >= 1");
  const double nyquist = 8000.0;
  if (f_min_hz < 0 || f_max_hz > nyquist || f_min_hz >= f_max_hz)
    throw std::invalid_argument("mel_filterbank: invalid frequency range");

  const auto pts = mel_points_hz(n_mels, f_min_hz, f_max_hz);
  const double bin_hz = 16000.0 / kFftSize;

  Matrix fb(n_mels, n_fft_bins);
  for (int m = 0; m < n_mels; ++m) {
    const double f_lo = pts[m], f_c = pts[m + 1], f_hi = pts[m + 2];
    const double norm = 2.0 / (f_hi - f_lo);  // unit triangle area
    for (int k = 0; k < n_fft_bins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > f_lo && f < f_c) {
        w = (f - f_lo) / (f_c - f_lo);
      } else if (f >= f_c && f < f_hi) {
        w = (f_hi - f) / (f_hi - f_c);
      }
      fb.at(m, k) = static_cast<float>(w * norm);
    }
  }
  return fb;
}

Matrix apply_log_mel(const Matrix& power, const Matrix& filterbank) {
  Matrix out(power.rows, filterbank.rows);
  for (int t = 0; t < power.rows; ++t) {
    for (int m = 0; m < filterbank.rows; ++m) {
      double acc = 0.0;
      for (int k = 0; k < power.cols; ++k)
        acc += static_cast<double>(filterbank.at(m, k)) * power.at(t, k);
      out.at(t, m) = static_cast<float>(std::log(acc + kLogFloor));
    }
  }
  return out;
}

Matrix extract_log_mel(const Waveform& wave) {
  static const Matrix fb = mel_filterbank();
  return apply_log_mel(stft_power(wave), fb);
}

void save_features(const std::string& path, const Matrix& features) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write features: " + path);
  const std::uint32_t t = static_cast<std::uint32_t>(features.rows);
  const std::uint32_t m = static_cast<std::uint32_t>(features.cols);
  out.write(reinterpret_cast<const char*>(&t), 4);
  out.write(reinterpret_cast<const char*>(&m), 4);
  out.write(reinterpret_cast<const char*>(features.v.data()),
            static_cast<std::streamsize>(features.v.size() * sizeof(float)));
}

Matrix load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("feature file not found: " + path);
  std::uint32_t t = 0, m = 0;
  in.read(reinterpret_cast<char*>(&t), 4);
  in.read(reinterpret_cast<char*>(&m), 4);
  if (!in) throw std::runtime_error("truncated feature header: " + path);
  Matrix out(static_cast<int>(t), static_cast<int>(m));
  in.read(reinterpret_cast<char*>(out.v.data()),
          static_cast<std::streamsize>(out.v.size() * sizeof(float)));
  if (!in) throw std::runtime_error("truncated feature payload: " + path);
  return out;
}

}  // namespace idl

// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <complex>
#include <string>
#include <vector>

#include "idl/common.hpp"

namespace idl {

inline constexpr int kFftSize = 1024;   // 64 ms at 16 kHz
inline constexpr int kHopSize = 512;    // 32 ms at 16 kHz
inline constexpr int kNumFftBins = kFftSize / 2 + 1;
inline constexpr float kLogFloor = 1e-10f;

// Symmetric Hann window, w[k] = 0.5 - 0.5 cos(2*pi*k/(n-1)).
std::vector<double> hann_window(int n);

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& x);

// Frame count for a given number of samples: floor((n - win)/hop) + 1.
int num_frames(size_t n_samples);

// Power spectrogram, T x 513. Per frame: Hann window, 1024-point DFT,
// power = |X[k]|^2 for k = 0..512.
Matrix stft_power(const Waveform& wave);

// Triangular mel filterbank, n_mels x n_fft_bins. Centers equally spaced
// on mel(f) = 2595*log10(1 + f/700); each triangle area-normalized
// (weights scaled by 2/(f_hi - f_lo)).
Matrix mel_filterbank(int n_mels = kNumMels, int n_fft_bins = kNumFftBins,
                      double f_min_hz = 0.0, double f_max_hz = 8000.0);

// Center frequencies (Hz) of the n_mels+2 mel-spaced points; exposed for
// inspection and tests.
std::vector<double> mel_points_hz(int n_mels, double f_min_hz,
                                  double f_max_hz);

// Log-mel spectrogram, T x 40: ln(filterbank * power + 1e-10).
Matrix extract_log_mel(const Waveform& wave);

// Applies a (cached) filterbank to a precomputed power spectrogram.
Matrix apply_log_mel(const Matrix& power, const Matrix& filterbank);

// Feature cache: 8-byte header (uint32 T, uint32 n_mels, little-endian)
// followed by row-major float32 values.
void save_features(const std::string& path, const Matrix& features);
Matrix load_features(const std::string& path);

}  // namespace idl

// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0
//
// Shared test utilities: finite-difference gradient checking, a naive DFT
// reference, and small fixture builders.

#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "idl/autograd.hpp"
#include "idl/common.hpp"

namespace idltest {

// Scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("idltest_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::vector<double> random_vec(size_t n, std::mt19937_64& rng,
                                      double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Central finite differences against an analytic gradient, in double.
// `forward` must build a fresh graph from the leaf values and return the
// scalar loss value; `leaf_values` are perturbed in place. Returns the
// maximum relative error max(|fd - an| / max(1, |fd|, |an|)).
inline double fd_check(
    const std::function<double(const std::vector<double>&)>& forward,
    std::vector<double> leaf_values, const std::vector<double>& analytic,
    double eps = 1e-5) {
  double worst = 0.0;
  for (size_t i = 0; i < leaf_values.size(); ++i) {
    const double keep = leaf_values[i];
    leaf_values[i] = keep + eps;
    const double fp = forward(leaf_values);
    leaf_values[i] = keep - eps;
    const double fm = forward(leaf_values);
    leaf_values[i] = keep;
    const double fd = (fp - fm) / (2.0 * eps);
    const double an = analytic[i];
    const double scale = std::max({1.0, std::fabs(fd), std::fabs(an)});
    worst = std::max(worst, std::fabs(fd - an) / scale);
  }
  return worst;
}

// O(n^2) reference DFT used as the FFT oracle.
inline std::vector<std::complex<double>> naive_dft(
    const std::vector<std::complex<double>>& x) {
  const size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * M_PI * double(k) * double(t) / double(n);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

// A fixed-seed feature segment with mild structure (not pure noise).
inline idl::Matrix random_segment(std::uint64_t seed, int rows = 40,
                                  int cols = 120) {
  idl::Matrix m(rows, cols);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(0.0f, 1.0f);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      m.at(r, c) = d(rng) + 0.05f * float(r) - 0.01f * float(c);
  return m;
}

// A sine waveform at the given frequency.
inline idl::Waveform sine_wave(double freq_hz, double seconds,
                               double amplitude = 0.5) {
  idl::Waveform w;
  const int n = static_cast<int>(seconds * idl::kSampleRate);
  w.samples.resize(n);
  for (int i = 0; i < n; ++i)
    w.samples[i] = static_cast<float>(
        amplitude * std::sin(2.0 * M_PI * freq_hz * i / idl::kSampleRate));
  return w;
}

}  // namespace idltest

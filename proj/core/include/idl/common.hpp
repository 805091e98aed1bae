// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace idl {

// Deterministic sub-seed derivation (splitmix64 over the mixed-in words).
// Parallel consumers each derive their own stream; no generator is shared.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::uint64_t a = 0,
                                 std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  auto mix = [](std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t state = base;
  std::uint64_t out = mix(state);
  state ^= a * 0xff51afd7ed558ccdULL + 1;
  out ^= mix(state);
  state ^= b * 0xc4ceb9fe1a85ec53ULL + 2;
  out ^= mix(state);
  state ^= c * 0x2545f4914f6cdd1dULL + 3;
  out ^= mix(state);
  return out;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

// Row-major real matrix. Features are stored frames x bins (T x 40);
// segments are bins x frames (40 x 120).
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> v;

  Matrix() = default;
  Matrix(int r, int c, float fill = 0.0f)
      : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {}

  float& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
  float at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
  size_t size() const { return v.size(); }
};

struct Waveform {
  std::vector<float> samples;  // amplitudes in [-1, 1]
  int sample_rate_hz = 16000;
};

enum class Split { Train, Validation, Test };

inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "validation") return Split::Validation;
  if (s == "test") return Split::Test;
  throw std::invalid_argument("unknown split: " + s);
}

inline std::string split_to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "?";
}

struct ManifestEntry {
  std::string path;
  std::string speaker_id;
  int label = -1;  // -1 = absent; 0 = non-depression, 1 = depression
  Split split = Split::Train;

  bool has_label() const { return label >= 0; }
};

inline constexpr int kSampleRate = 16000;
inline constexpr int kNumMels = 40;
inline constexpr int kSegmentFrames = 120;
inline constexpr int kEmbeddingDim = 128;

// One instance of the contrastive task: a fixed-length feature slice.
struct Segment {
  Matrix features;  // 40 x 120
  std::string utterance_id;
  std::string speaker_id;
  int segment_index = 0;  // position within the source stream
  int label = -1;         // -1 = absent
  int pseudo_label = -1;  // -1 = unassigned

  bool has_label() const { return label >= 0; }
  bool has_pseudo_label() const { return pseudo_label >= 0; }
};

}  // namespace idl

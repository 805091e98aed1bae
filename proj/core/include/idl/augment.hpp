// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "idl/common.hpp"

namespace idl {

// Noise, Volume and Vtlp act before the mel projection (waveform or linear
// power spectrum); TimeMask, FreqMask and SpecAugment act on 40x120 feature
// segments.
enum class AugmentKind { Noise, Volume, Vtlp, TimeMask, FreqMask, SpecAugment };

AugmentKind augment_kind_from_string(const std::string& s);
std::string augment_kind_to_string(AugmentKind k);
bool is_signal_level(AugmentKind k);

struct AugmentParams {
  double snr_db_lo = 10.0, snr_db_hi = 30.0;
  double gain_lo = 0.5, gain_hi = 2.0;
  double alpha_lo = 0.9, alpha_hi = 1.1;
  int t_max = 25;  // time-mask width bound, frames
  int f_max = 8;   // freq-mask width bound, bins
  int warp_w = 5;  // SpecAugment time-warp bound, frames
};

// Adds white Gaussian noise scaled so the signal-to-noise ratio equals
// snr_db (measured against the empirical noise power, so the ratio is exact
// up to float rounding).
Waveform add_noise(const Waveform& wave, double snr_db, std::uint64_t seed);

// Multiplies every sample by gain and clips to [-1, 1].
Waveform perturb_volume(const Waveform& wave, double gain);

// Piecewise-linear warp of the frequency axis of a T x 513 power spectrum:
// g(f) = alpha*f up to the boundary f_b = f_max*min(alpha,1)/alpha*(7/8),
// then linearly rescaled so g(f_max) = f_max. Output resampled by linear
// interpolation; frame count unchanged.
Matrix vtlp_warp(const Matrix& power_spec, double alpha);

// Masks a random contiguous block of up to t_max frames with the segment
// mean. Width t ~ U{0..t_max}, start ~ U{0..frames-t}.
Matrix time_mask(const Matrix& seg, int t_max, std::uint64_t seed);

// Same along the mel axis, width bound f_max bins.
Matrix freq_mask(const Matrix& seg, int f_max, std::uint64_t seed);

// Time-warp (control frame shifted by w ~ U{-W..W}, linear interpolation
// along time) followed by one time mask and one freq mask; sub-seeds are
// derived deterministically from seed.
Matrix spec_augment(const Matrix& seg, const AugmentParams& p,
                    std::uint64_t seed);

// Applies a feature-level augmentation with parameters drawn from p.
// Signal-level kinds are rejected.
Matrix augment_features(AugmentKind kind, const Matrix& seg,
                        const AugmentParams& p, std::uint64_t seed);

// Applies a signal-level augmentation to a waveform with parameters drawn
// from p (Vtlp is handled separately since it acts on the power spectrum).
Waveform augment_signal(AugmentKind kind, const Waveform& wave,
                        const AugmentParams& p, std::uint64_t seed);

// Draws the VTLP warp factor from p.
double draw_vtlp_alpha(const AugmentParams& p, std::uint64_t seed);

}  // namespace idl

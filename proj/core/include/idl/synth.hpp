// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <vector>

#include "idl/common.hpp"

namespace idl {

// Deterministic synthetic corpus. Stands in for large or access-restricted
// speech corpora. Speaker identity is encoded in a distinct fundamental
// frequency in [100, 300] Hz plus a formant-like resonance peak, so a
// speaker probe has real signal to find.
//
// When `labeled` is set, each speaker carries a binary class label and the
// positive class is synthesized with slowed amplitude modulation, giving the
// downstream classifier a label-correlated temporal attribute. Speaker labels
// follow a 3:1 negative:positive ratio and splits are assigned per speaker.
struct SynthCorpus {
  std::vector<Waveform> waves;           // one per manifest entry
  std::vector<ManifestEntry> entries;    // paths are bare file names
  std::vector<double> speaker_f0_hz;     // f0 table, index = speaker
};

SynthCorpus synth_corpus(int n_speakers, int utts_per_speaker,
                         std::uint64_t seed, bool labeled = false);

}  // namespace idl

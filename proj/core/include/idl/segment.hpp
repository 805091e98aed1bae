// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "idl/common.hpp"

namespace idl {

struct UtteranceFeatures {
  Matrix features;  // T x 40 log-mel frames
  std::string utterance_id;
  std::string speaker_id;
  int label = -1;
};

// Pre-training segmentation: per speaker, utterances are concatenated along
// time (in input order) and split into consecutive non-overlapping
// segment_len-frame segments; the trailing remainder is discarded. A speaker
// with fewer than segment_len total frames yields no segments.
std::vector<Segment> concat_and_segment(
    const std::vector<UtteranceFeatures>& utterances,
    int segment_len = kSegmentFrames);

// Downstream segmentation: one utterance split into consecutive
// non-overlapping windows, no cross-utterance concatenation.
std::vector<Segment> segment_utterance(const UtteranceFeatures& utt,
                                       int segment_len = kSegmentFrames);

// Downstream balancing: every utterance is cropped (random start) to the
// minimum utterance frame length over the input, segmented into 120-frame
// windows, and a class-balanced subset of size 2*min(class counts) is drawn
// without replacement.
std::vector<Segment> random_crop_and_subsample(
    const std::vector<UtteranceFeatures>& utterances, std::uint64_t seed,
    int segment_len = kSegmentFrames);

}  // namespace idl

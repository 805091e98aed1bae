// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#include "idl/segment.hpp"

#include <algorithm>
#include <map>

namespace idl {
namespace {

// Extracts frames [start, start+len) of a T x 40 feature matrix as a
// 40 x len segment matrix.
Matrix slice_transposed(const Matrix& features, int start, int len) {
  Matrix seg(features.cols, len);
  for (int t = 0; t < len; ++t)
    for (int m = 0; m < features.cols; ++m)
      seg.at(m, t) = features.at(start + t, m);
  return seg;
}

}  // namespace

std::vector<Segment> concat_and_segment(
    const std::vector<UtteranceFeatures>& utterances, int segment_len) {
  if (segment_len < 1) throw std::invalid_argument("segment_len must be >= 1");
  for (const auto& u : utterances)
    if (u.features.rows < 1)
      throw std::invalid_argument("empty spectrogram for " + u.utterance_id);

  // Group by speaker, preserving first-appearance order of speakers and
  // input order of utterances within a speaker.
  std::vector<std::string> speaker_order;
  std::map<std::string, std::vector<const UtteranceFeatures*>> by_speaker;
  for (const auto& u : utterances) {
    if (!by_speaker.count(u.speaker_id)) speaker_order.push_back(u.speaker_id);
    by_speaker[u.speaker_id].push_back(&u);
  }

  std::vector<Segment> segments;
  for (const auto& spk : speaker_order) {
    const auto& utts = by_speaker[spk];
    // Concatenate along time.
    int total = 0;
    for (const auto* u : utts) total += u->features.rows;
    Matrix concat(total, kNumMels);
    std::vector<std::string> frame_owner_id(total);
    int off = 0;
    for (const auto* u : utts) {
      std::copy(u->features.v.begin(), u->features.v.end(),
                concat.v.begin() + static_cast<size_t>(off) * kNumMels);
      for (int t = 0; t < u->features.rows; ++t)
        frame_owner_id[off + t] = u->utterance_id;
      off += u->features.rows;
    }

    const int n_segments = total / segment_len;
    for (int s = 0; s < n_segments; ++s) {
      Segment seg;
      seg.features = slice_transposed(concat, s * segment_len, segment_len);
      seg.speaker_id = spk;
      seg.utterance_id = frame_owner_id[s * segment_len];
      seg.segment_index = s;
      seg.label = utts.front()->label;
      segments.push_back(std::move(seg));
    }
  }
  return segments;
}

std::vector<Segment> segment_utterance(const UtteranceFeatures& utt,
                                       int segment_len) {
  std::vector<Segment> segments;
  const int n = utt.features.rows / segment_len;
  for (int s = 0; s < n; ++s) {
    Segment seg;
    seg.features = slice_transposed(utt.features, s * segment_len, segment_len);
    seg.utterance_id = utt.utterance_id;
    seg.speaker_id = utt.speaker_id;
    seg.segment_index = s;
    seg.label = utt.label;
    segments.push_back(std::move(seg));
  }
  return segments;
}

std::vector<Segment> random_crop_and_subsample(
    const std::vector<UtteranceFeatures>& utterances, std::uint64_t seed,
    int segment_len) {
  bool have[2] = {false, false};
  int min_len = 1 << 30;
  for (const auto& u : utterances) {
    if (u.label != 0 && u.label != 1)
      throw std::invalid_argument("unlabeled utterance " + u.utterance_id);
    have[u.label] = true;
    min_len = std::min(min_len, u.features.rows);
  }
  if (!have[0] || !have[1])
    throw std::runtime_error("need at least one utterance per class");

  auto rng = make_rng(derive_seed(seed, 0xc409));
  std::vector<Segment> per_class[2];
  for (const auto& u : utterances) {
    const int slack = u.features.rows - min_len;
    int start = 0;
    if (slack > 0) {
      std::uniform_int_distribution<int> d(0, slack);
      start = d(rng);
    }
    UtteranceFeatures cropped;
    cropped.utterance_id = u.utterance_id;
    cropped.speaker_id = u.speaker_id;
    cropped.label = u.label;
    cropped.features = Matrix(min_len, u.features.cols);
    std::copy_n(u.features.v.begin() + static_cast<size_t>(start) * u.features.cols,
                cropped.features.v.size(), cropped.features.v.begin());
    for (auto& seg : segment_utterance(cropped, segment_len))
      per_class[u.label].push_back(std::move(seg));
  }

  if (per_class[0].empty() || per_class[1].empty())
    throw std::runtime_error("class exhausted after cropping");

  const size_t n_per_class =
      std::min(per_class[0].size(), per_class[1].size());
  std::vector<Segment> out;
  for (int c = 0; c < 2; ++c) {
    std::shuffle(per_class[c].begin(), per_class[c].end(), rng);
    for (size_t i = 0; i < n_per_class; ++i)
      out.push_back(std::move(per_class[c][i]));
  }
  return out;
}

}  // namespace idl

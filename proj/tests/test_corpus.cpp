// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "idl/dsp.hpp"
#include "idl/manifest.hpp"
#include "idl/segment.hpp"
#include "idl/synth.hpp"
#include "idl/wav.hpp"

using namespace idl;

namespace {

void write_lines(const std::string& path,
                 const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& l : lines) out << l << "\n";
}

UtteranceFeatures make_utt(const std::string& id, const std::string& spk,
                           int frames, int label = -1) {
  UtteranceFeatures u;
  u.utterance_id = id;
  u.speaker_id = spk;
  u.label = label;
  u.features = Matrix(frames, kNumMels);
  for (int t = 0; t < frames; ++t)
    for (int m = 0; m < kNumMels; ++m)
      u.features.at(t, m) = float(t) + 0.001f * float(m);
  return u;
}

}  // namespace

TEST_CASE("manifest round trip and validation") {
  idltest::TempDir tmp("manifest");
  write_lines(tmp.file("ok.jsonl"),
              {R"({"path":"a.wav","speaker_id":"s1","label":1,"split":"train"})",
               R"({"path":"b.wav","speaker_id":"s2","label":null,"split":"test"})",
               R"({"path":"c.wav","speaker_id":"s1","label":0,"split":"validation"})"});
  auto entries = load_manifest(tmp.file("ok.jsonl"));
  REQUIRE(entries.size() == 3);
  CHECK(entries[0].label == 1);
  CHECK(entries[1].label == -1);
  CHECK(entries[1].split == Split::Test);
  CHECK(entries[2].split == Split::Validation);

  save_manifest(tmp.file("copy.jsonl"), entries);
  auto copy = load_manifest(tmp.file("copy.jsonl"));
  REQUIRE(copy.size() == entries.size());
  for (size_t i = 0; i < copy.size(); ++i) {
    CHECK(copy[i].path == entries[i].path);
    CHECK(copy[i].speaker_id == entries[i].speaker_id);
    CHECK(copy[i].label == entries[i].label);
    CHECK(copy[i].split == entries[i].split);
  }

  write_lines(tmp.file("dup.jsonl"),
              {R"({"path":"a.wav","speaker_id":"s1","label":1,"split":"train"})",
               R"({"path":"a.wav","speaker_id":"s2","label":0,"split":"train"})"});
  CHECK_THROWS(load_manifest(tmp.file("dup.jsonl")));

  write_lines(tmp.file("split.jsonl"),
              {R"({"path":"a.wav","speaker_id":"s1","label":1,"split":"dev"})"});
  CHECK_THROWS(load_manifest(tmp.file("split.jsonl")));

  write_lines(tmp.file("spk.jsonl"),
              {R"({"path":"a.wav","speaker_id":"","label":1,"split":"train"})"});
  CHECK_THROWS(load_manifest(tmp.file("spk.jsonl")));

  write_lines(tmp.file("label.jsonl"),
              {R"({"path":"a.wav","speaker_id":"s1","label":3,"split":"train"})"});
  CHECK_THROWS(load_manifest(tmp.file("label.jsonl")));
}

TEST_CASE("wav encode/decode round trip") {
  idltest::TempDir tmp("wav");
  Waveform w = idltest::sine_wave(300.0, 0.25, 0.8);
  encode_wav(tmp.file("x.wav"), w);
  Waveform r = decode_wav(tmp.file("x.wav"));
  REQUIRE(r.samples.size() == w.samples.size());
  CHECK(r.sample_rate_hz == 16000);
  // Quantization plus the 32767/32768 scale mismatch: error < 2 LSB.
  for (size_t i = 0; i < w.samples.size(); ++i)
    CHECK(std::fabs(r.samples[i] - w.samples[i]) <= 2.0f / 32768.0f);

  // Clipping: out-of-range samples land on the rails.
  Waveform hot;
  hot.samples = {2.0f, -2.0f, 0.0f};
  encode_wav(tmp.file("hot.wav"), hot);
  Waveform rh = decode_wav(tmp.file("hot.wav"));
  CHECK(rh.samples[0] == doctest::Approx(32767.0 / 32768.0));
  CHECK(rh.samples[1] == doctest::Approx(-32767.0 / 32768.0));
  CHECK(rh.samples[2] == 0.0f);

  CHECK_THROWS(decode_wav(tmp.file("missing.wav")));
}

TEST_CASE("synthetic corpus structure") {
  auto c = synth_corpus(10, 3, 17, false);
  REQUIRE(c.entries.size() == 30);
  REQUIRE(c.waves.size() == 30);
  REQUIRE(c.speaker_f0_hz.size() == 10);
  // f0 spacing is even over [100, 300].
  CHECK(c.speaker_f0_hz.front() == doctest::Approx(100.0));
  CHECK(c.speaker_f0_hz.back() == doctest::Approx(300.0));
  for (size_t s = 1; s < 10; ++s)
    CHECK(c.speaker_f0_hz[s] - c.speaker_f0_hz[s - 1] ==
          doctest::Approx(200.0 / 9.0).epsilon(1e-9));
  std::set<std::string> speakers;
  for (const auto& e : c.entries) {
    speakers.insert(e.speaker_id);
    CHECK(e.label == -1);
  }
  CHECK(speakers.size() == 10);
  // Deterministic in seed.
  auto c2 = synth_corpus(10, 3, 17, false);
  for (size_t i = 0; i < c.waves.size(); ++i)
    CHECK(c.waves[i].samples == c2.waves[i].samples);
  auto c3 = synth_corpus(10, 3, 18, false);
  CHECK(c.waves[0].samples != c3.waves[0].samples);
}

TEST_CASE("labeled corpus has a 1:3 ratio and per-speaker splits") {
  auto c = synth_corpus(12, 2, 5, true);
  std::map<std::string, int> spk_label;
  std::map<std::string, Split> spk_split;
  for (const auto& e : c.entries) {
    REQUIRE((e.label == 0 || e.label == 1));
    if (spk_label.count(e.speaker_id)) {
      // Labels and splits are speaker-level attributes.
      CHECK(spk_label[e.speaker_id] == e.label);
      CHECK(spk_split[e.speaker_id] == e.split);
    }
    spk_label[e.speaker_id] = e.label;
    spk_split[e.speaker_id] = e.split;
  }
  int pos = 0;
  for (auto& [spk, l] : spk_label) pos += l;
  CHECK(pos == 3);  // 12 speakers, every 4th positive
  int n_test = 0, n_val = 0;
  for (auto& [spk, s] : spk_split) {
    n_test += (s == Split::Test);
    n_val += (s == Split::Validation);
  }
  CHECK(n_test >= 1);
  CHECK(n_val >= 1);
}

TEST_CASE("concat_and_segment concatenates per speaker and drops remainder") {
  std::vector<UtteranceFeatures> utts;
  utts.push_back(make_utt("u0", "a", 100));
  utts.push_back(make_utt("u1", "b", 130));
  utts.push_back(make_utt("u2", "a", 150));  // a: 250 frames total
  auto segs = concat_and_segment(utts, 120);
  // a: floor(250/120) = 2 segments; b: floor(130/120) = 1.
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].speaker_id == "a");
  CHECK(segs[1].speaker_id == "a");
  CHECK(segs[2].speaker_id == "b");
  CHECK(segs[0].segment_index == 0);
  CHECK(segs[1].segment_index == 1);
  // Segments are 40 x 120 transposes of the concatenated stream: frame 0 of
  // segment 1 for speaker a is frame 120, i.e. frame 20 of utterance u2.
  CHECK(segs[0].features.rows == 40);
  CHECK(segs[0].features.cols == 120);
  CHECK(segs[1].features.at(0, 0) == doctest::Approx(20.0f));
  // Cross-utterance segment is attributed to the utterance owning its first
  // frame.
  CHECK(segs[0].utterance_id == "u0");
  CHECK(segs[1].utterance_id == "u2");

  // A short speaker yields nothing.
  auto none = concat_and_segment({make_utt("u", "x", 119)}, 120);
  CHECK(none.empty());
}

TEST_CASE("segment_utterance windows a single utterance") {
  auto u = make_utt("u", "s", 365, 1);
  auto segs = segment_utterance(u, 120);
  REQUIRE(segs.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(segs[i].segment_index == i);
    CHECK(segs[i].label == 1);
    CHECK(segs[i].features.at(0, 0) == doctest::Approx(120.0f * i));
  }
}

TEST_CASE("random_crop_and_subsample balances classes") {
  std::vector<UtteranceFeatures> utts;
  // 3 negatives, 1 positive, varying lengths; min length 240 -> 2 segments
  // per utterance after cropping.
  utts.push_back(make_utt("n0", "a", 400, 0));
  utts.push_back(make_utt("n1", "b", 240, 0));
  utts.push_back(make_utt("n2", "c", 300, 0));
  utts.push_back(make_utt("p0", "d", 350, 1));
  auto segs = random_crop_and_subsample(utts, 9, 120);
  // Positive yields 2 segments, so 2 per class = 4 total.
  REQUIRE(segs.size() == 4);
  int pos = 0;
  for (const auto& s : segs) pos += s.label;
  CHECK(pos == 2);
  // Deterministic in seed.
  auto again = random_crop_and_subsample(utts, 9, 120);
  REQUIRE(again.size() == segs.size());
  for (size_t i = 0; i < segs.size(); ++i)
    CHECK(again[i].features.v == segs[i].features.v);

  // Unlabeled input is rejected; single-class input is rejected.
  utts[3].label = -1;
  CHECK_THROWS(random_crop_and_subsample(utts, 9, 120));
  utts[3].label = 0;
  CHECK_THROWS(random_crop_and_subsample(utts, 9, 120));
}

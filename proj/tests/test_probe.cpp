// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <map>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "idl/probe.hpp"

using namespace idl;

namespace {

// Linearly separable speakers: speaker s clusters around 3*e_s.
ProbeDataset separable(int n_speakers, int per_speaker, int dim,
                       std::uint64_t seed) {
  ProbeDataset d;
  d.n_speakers = n_speakers;
  d.embeddings = Matrix(n_speakers * per_speaker, dim);
  d.speaker_ids.resize(size_t(n_speakers) * per_speaker);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 0.15f);
  int row = 0;
  for (int s = 0; s < n_speakers; ++s)
    for (int i = 0; i < per_speaker; ++i, ++row) {
      for (int c = 0; c < dim; ++c)
        d.embeddings.at(row, c) = g(rng) + (c == s ? 3.0f : 0.0f);
      d.speaker_ids[row] = s;
    }
  return d;
}

}  // namespace

TEST_CASE("probe reaches 100% on linearly separable speakers") {
  auto all = separable(5, 30, 8, 3);
  auto [train, test] = probe_split(all, 0.25, 7);
  auto w = train_linear_svm(train);
  CHECK(probe_accuracy(w, test) == doctest::Approx(1.0));
  CHECK(probe_accuracy(w, train) == doctest::Approx(1.0));
}

TEST_CASE("probe_split stratifies per speaker") {
  auto all = separable(4, 10, 3, 5);
  auto [train, test] = probe_split(all, 0.3, 1);
  std::map<int, int> train_count, test_count;
  for (int s : train.speaker_ids) ++train_count[s];
  for (int s : test.speaker_ids) ++test_count[s];
  for (int s = 0; s < 4; ++s) {
    CHECK(train_count[s] == 7);
    CHECK(test_count[s] == 3);
  }
  CHECK(train.embeddings.rows + test.embeddings.rows == all.embeddings.rows);

  // A 2-row speaker still lands one row in test.
  auto tiny = separable(3, 2, 3, 5);
  auto [tr2, te2] = probe_split(tiny, 0.1, 1);
  std::map<int, int> c2;
  for (int s : te2.speaker_ids) ++c2[s];
  for (int s = 0; s < 3; ++s) CHECK(c2[s] == 1);

  // Determinism in seed.
  auto [tr3, te3] = probe_split(all, 0.3, 1);
  CHECK(tr3.embeddings.v == train.embeddings.v);
  auto [tr4, te4] = probe_split(all, 0.3, 2);
  CHECK(tr4.embeddings.v != train.embeddings.v);
}

TEST_CASE("svm objective decreases from the zero solution") {
  auto all = separable(4, 20, 6, 9);
  auto trace = svm_objective_trace(all, 1e-4, 50, 0);
  REQUIRE(trace.size() == 50);
  // The averaged iterate beats zero weights after training, and the tail
  // of the trace improves on its start.
  Matrix zero(all.n_speakers, all.embeddings.cols + 1);
  const double at_zero = svm_objective(zero, all, 1e-4);
  CHECK(trace.back() < at_zero);
  CHECK(trace.back() <= trace.front());
  // Objective of the trained averaged weights matches the last trace entry.
  auto w = train_linear_svm(all, 1e-4, 50, 0);
  CHECK(svm_objective(w, all, 1e-4) == doctest::Approx(trace.back()));
}

TEST_CASE("zero weights predict the lowest speaker index") {
  auto all = separable(3, 5, 4, 11);
  Matrix zero(all.n_speakers, all.embeddings.cols + 1);
  // All scores tie at 0 -> argmax tie-break picks speaker 0; accuracy is
  // the fraction of speaker-0 rows.
  CHECK(probe_accuracy(zero, all) == doctest::Approx(5.0 / 15.0));
}

TEST_CASE("probe input validation") {
  auto one = separable(1, 5, 4, 1);
  CHECK_THROWS(train_linear_svm(one));

  // A speaker id with no rows is an error.
  auto gap = separable(2, 5, 4, 1);
  gap.n_speakers = 3;
  CHECK_THROWS(train_linear_svm(gap));

  // Dimension mismatch between weights and test set.
  auto all = separable(3, 5, 4, 1);
  auto w = train_linear_svm(all);
  auto wrong = separable(3, 5, 6, 1);
  CHECK_THROWS(probe_accuracy(w, wrong));

  // Empty test set.
  ProbeDataset empty;
  empty.n_speakers = 3;
  CHECK_THROWS(probe_accuracy(w, empty));
}

TEST_CASE("probe report serialization") {
  ProbeReport r;
  r.accuracy = 0.75;
  r.n_speakers = 4;
  r.n_test = 40;
  r.embedding_source = "pretrained";
  auto j = r.to_json();
  CHECK(j["accuracy"] == 0.75);
  CHECK(j["n_speakers"] == 4);
  CHECK(j["n_test"] == 40);
  CHECK(j["embedding_source"] == "pretrained");
}

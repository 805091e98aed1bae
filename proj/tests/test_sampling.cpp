// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "idl/kmeans.hpp"
#include "idl/sampling.hpp"

using namespace idl;

namespace {

std::vector<Segment> make_pool(int n_speakers, int per_speaker) {
  std::vector<Segment> pool;
  for (int s = 0; s < n_speakers; ++s)
    for (int i = 0; i < per_speaker; ++i) {
      Segment seg;
      seg.speaker_id = "spk" + std::to_string(s);
      seg.utterance_id = seg.speaker_id + "_u" + std::to_string(i);
      seg.segment_index = i;
      seg.features = Matrix(kNumMels, kSegmentFrames);
      pool.push_back(std::move(seg));
    }
  return pool;
}

}  // namespace

TEST_CASE("RS covers the pool exactly once per epoch") {
  auto pool = make_pool(5, 7);  // 35 segments
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto plan = sample_rs(pool, 8, seed);
    CHECK(plan.batches.size() == 4);  // trailing 3 dropped
    std::set<int> seen;
    for (const auto& b : plan.batches) {
      CHECK(b.size() == 8);
      for (int idx : b) {
        CHECK(idx >= 0);
        CHECK(idx < int(pool.size()));
        CHECK(!seen.count(idx));  // no repeats within an epoch
        seen.insert(idx);
      }
    }
  }
  // Determinism and seed sensitivity.
  CHECK(sample_rs(pool, 8, 3).batches == sample_rs(pool, 8, 3).batches);
  CHECK(sample_rs(pool, 8, 3).batches != sample_rs(pool, 8, 4).batches);
}

TEST_CASE("DS batches hold n distinct speakers") {
  auto pool = make_pool(12, 5);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto plan = sample_ds(pool, 10, seed);
    CHECK(plan.batches.size() == 6);  // floor(60/10)
    for (const auto& b : plan.batches) {
      REQUIRE(b.size() == 10);
      std::set<std::string> speakers;
      for (int idx : b) speakers.insert(pool[idx].speaker_id);
      CHECK(speakers.size() == 10);
    }
  }
  // Too few speakers is an error.
  auto small = make_pool(4, 10);
  CHECK_THROWS(sample_ds(small, 5, 0));
}

TEST_CASE("PIS batches hold one segment per cluster") {
  auto pool = make_pool(6, 10);  // 60 segments
  // Assign pseudo labels round-robin over 6 clusters.
  for (size_t i = 0; i < pool.size(); ++i)
    pool[i].pseudo_label = int(i % 6);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto plan = sample_pis(pool, 6, seed);
    CHECK(plan.batches.size() == 10);
    for (const auto& b : plan.batches) {
      REQUIRE(b.size() == 6);
      std::set<int> clusters;
      for (int idx : b) clusters.insert(pool[idx].pseudo_label);
      CHECK(clusters.size() == 6);
    }
  }
  // Missing pseudo labels are an error.
  auto bare = make_pool(6, 10);
  CHECK_THROWS(sample_pis(bare, 6, 0));
  // An empty cluster is degenerate.
  for (size_t i = 0; i < pool.size(); ++i) pool[i].pseudo_label = int(i % 5);
  CHECK_THROWS(sample_pis(pool, 6, 0));
}

TEST_CASE("k-means recovers separated blobs") {
  // Three well-separated 2-d blobs.
  std::mt19937_64 rng(11);
  std::normal_distribution<float> jitter(0.0f, 0.05f);
  const float centers[3][2] = {{0.0f, 0.0f}, {5.0f, 5.0f}, {-5.0f, 4.0f}};
  Matrix pts(90, 2);
  for (int i = 0; i < 90; ++i) {
    pts.at(i, 0) = centers[i % 3][0] + jitter(rng);
    pts.at(i, 1) = centers[i % 3][1] + jitter(rng);
  }
  auto model = kmeans_fit(pts, 3, 4);
  REQUIRE(model.centroids.rows == 3);
  // Every true center is within 0.1 of some recovered centroid.
  for (const auto& c : centers) {
    double best = 1e9;
    for (int k = 0; k < 3; ++k) {
      double dx = model.centroids.at(k, 0) - c[0];
      double dy = model.centroids.at(k, 1) - c[1];
      best = std::min(best, std::sqrt(dx * dx + dy * dy));
    }
    CHECK(best < 0.1);
  }
  // Inertia never increases across Lloyd iterations.
  REQUIRE(!model.inertia_trace.empty());
  for (size_t i = 1; i < model.inertia_trace.size(); ++i)
    CHECK(model.inertia_trace[i] <= model.inertia_trace[i - 1] + 1e-9);
  CHECK(model.inertia == doctest::Approx(model.inertia_trace.back()));

  // Assignment maps each blob to one cluster, deterministically.
  int a0 = kmeans_assign(model, &pts.v[0], 2);
  int a3 = kmeans_assign(model, &pts.v[3 * 2], 2);
  CHECK(a0 == a3);  // same blob (i%3==0)
}

TEST_CASE("k-means inertia is non-increasing on random fixtures") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (int rep = 0; rep < 5; ++rep) {
    Matrix pts(40, 6);
    for (auto& v : pts.v) v = u(rng);
    for (int k : {2, 5, 8}) {
      auto model = kmeans_fit(pts, k, rep * 10 + k);
      for (size_t i = 1; i < model.inertia_trace.size(); ++i)
        CHECK(model.inertia_trace[i] <= model.inertia_trace[i - 1] + 1e-9);
    }
  }
}

TEST_CASE("k-means with C == m assigns one point per cluster") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Matrix pts(8, 3);
  for (auto& v : pts.v) v = u(rng);
  auto model = kmeans_fit(pts, 8, 0);
  CHECK(model.inertia == doctest::Approx(0.0).epsilon(1e-12));
  std::set<int> assigned;
  for (int i = 0; i < 8; ++i)
    assigned.insert(kmeans_assign(model, &pts.v[size_t(i) * 3], 3));
  CHECK(assigned.size() == 8);
  // More clusters than points is an error.
  CHECK_THROWS(kmeans_fit(pts, 9, 0));
}

TEST_CASE("kmeans_assign breaks ties toward the lowest index") {
  KMeansModel model;
  model.centroids = Matrix(3, 1);
  model.centroids.at(0, 0) = 1.0f;
  model.centroids.at(1, 0) = -1.0f;
  model.centroids.at(2, 0) = 1.0f;  // duplicate of centroid 0
  float p = 1.0f;
  CHECK(kmeans_assign(model, &p, 1) == 0);
  float q = 0.0f;  // equidistant from all three
  CHECK(kmeans_assign(model, &q, 1) == 0);
}

TEST_CASE("pseudo-label save/load round trip") {
  idltest::TempDir tmp("pseudo");
  auto pool = make_pool(3, 4);
  for (size_t i = 0; i < pool.size(); ++i) pool[i].pseudo_label = int(i % 3);
  save_pseudo_labels(tmp.file("pl.jsonl"), pool);

  auto fresh = make_pool(3, 4);
  load_pseudo_labels(tmp.file("pl.jsonl"), fresh);
  for (size_t i = 0; i < pool.size(); ++i)
    CHECK(fresh[i].pseudo_label == pool[i].pseudo_label);

  // A pool entry missing from the file is an error.
  auto larger = make_pool(4, 4);
  CHECK_THROWS(load_pseudo_labels(tmp.file("pl.jsonl"), larger));
}

TEST_CASE("strategy string round trip") {
  for (auto s :
       {SamplingStrategy::RS, SamplingStrategy::DS, SamplingStrategy::PIS})
    CHECK(strategy_from_string(strategy_to_string(s)) == s);
  CHECK_THROWS(strategy_from_string("bogus"));
}

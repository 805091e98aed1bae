// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "idl/common.hpp"
#include "idl/kmeans.hpp"

namespace idl {

enum class SamplingStrategy { RS, DS, PIS };

SamplingStrategy strategy_from_string(const std::string& s);
std::string strategy_to_string(SamplingStrategy s);

// One epoch worth of batches; each batch is a list of distinct
// segment indices into the pool.
struct BatchPlan {
  std::vector<std::vector<int>> batches;
  SamplingStrategy strategy = SamplingStrategy::RS;
  int batch_size = 20;
};

// Seeded shuffle of the pool chunked into batches of n; the trailing partial
// batch is dropped.
BatchPlan sample_rs(const std::vector<Segment>& pool, int n,
                    std::uint64_t seed);

// Per batch, n speakers drawn without replacement, then one segment drawn
// uniformly from each chosen speaker. Epoch length floor(pool/n) batches.
BatchPlan sample_ds(const std::vector<Segment>& pool, int n,
                    std::uint64_t seed);

// Per batch, one segment drawn uniformly from each of the C pseudo-label
// clusters; all segments must carry pseudo labels in [0, C).
BatchPlan sample_pis(const std::vector<Segment>& pool, int n_clusters,
                     std::uint64_t seed);

// Sets pseudo_label = nearest centroid of embed_fn(segment) for every
// segment in the pool.
void assign_pseudo_labels(
    std::vector<Segment>& pool, const KMeansModel& model,
    const std::function<std::vector<float>(const Segment&)>& embed_fn);

// Pseudo-label export: one JSON line per segment
// {utterance_id, segment_index, pseudo_label}.
void save_pseudo_labels(const std::string& path,
                        const std::vector<Segment>& pool);
// Applies a pseudo-label file to a pool, matching on
// (utterance_id, segment_index).
void load_pseudo_labels(const std::string& path, std::vector<Segment>& pool);

}  // namespace idl

// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0
//
// Speaker probe: one-vs-rest linear max-margin classifiers over frozen
// embeddings, trained by subgradient descent on the L2-regularized hinge
// loss. Quantifies how much speaker information survives in the embedding.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "idl/common.hpp"
#include "json.hpp"

namespace idl {

struct ProbeDataset {
  Matrix embeddings;             // m x dim
  std::vector<int> speaker_ids;  // m entries, 0-based speaker codes
  int n_speakers = 0;
};

// Stratified per-speaker split; test_fraction of each speaker's segments
// (rounded down, at least 1 when the speaker has >= 2) goes to the test set.
std::pair<ProbeDataset, ProbeDataset> probe_split(const ProbeDataset& all,
                                                  double test_fraction,
                                                  std::uint64_t seed);

// One-vs-rest weights, n_speakers x (dim + 1); the last column is the bias.
// Full-batch subgradient descent with a decaying step size; the returned
// weights are the average over iterates.
Matrix train_linear_svm(const ProbeDataset& train, double reg_lambda = 1e-4,
                        int epochs = 50, std::uint64_t seed = 0);

// Regularized hinge objective of a weight matrix on a dataset, summed over
// the one-vs-rest problems.
double svm_objective(const Matrix& weights, const ProbeDataset& data,
                     double reg_lambda);

// Objective of the running iterate average after each epoch.
std::vector<double> svm_objective_trace(const ProbeDataset& train,
                                        double reg_lambda = 1e-4,
                                        int epochs = 50,
                                        std::uint64_t seed = 0);

// argmax over per-speaker scores; ties break to the lowest speaker index.
double probe_accuracy(const Matrix& weights, const ProbeDataset& test);

struct ProbeReport {
  double accuracy = 0.0;
  int n_speakers = 0;
  int n_test = 0;
  std::string embedding_source;

  nlohmann::json to_json() const;
};

}  // namespace idl

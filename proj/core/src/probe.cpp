// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#include "idl/probe.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace idl {
namespace {

// Scores of one one-vs-rest classifier: w . x + b.
double score(const Matrix& weights, int cls, const float* x, int dim) {
  const float* row = weights.v.data() + static_cast<size_t>(cls) * (dim + 1);
  double acc = row[dim];  // bias
  for (int i = 0; i < dim; ++i) acc += double(row[i]) * x[i];
  return acc;
}

struct SvmState {
  Matrix w;      // current iterate
  Matrix w_avg;  // running average
};

void svm_epoch(SvmState& state, const ProbeDataset& train, double reg_lambda,
               int epoch) {
  const int dim = train.embeddings.cols;
  const int m = train.embeddings.rows;
  const int n_cls = train.n_speakers;
  // Step size: large initial rate with a harmonic decay. The hinge
  // subgradient is averaged over the batch and embeddings are unit-norm,
  // so per-epoch updates are small; a timid schedule leaves the probe far
  // from convergence within the default 50 epochs and understates how
  // linearly decodable the speaker identity actually is.
  const double eta = 20.0 / (1.0 + 0.1 * epoch);

  Matrix grad(n_cls, dim + 1);
  for (int c = 0; c < n_cls; ++c) {
    float* row = state.w.v.data() + static_cast<size_t>(c) * (dim + 1);
    float* grow = grad.v.data() + static_cast<size_t>(c) * (dim + 1);
    for (int i = 0; i < dim; ++i) grow[i] = static_cast<float>(reg_lambda * row[i]);
    for (int k = 0; k < m; ++k) {
      const float* x = train.embeddings.v.data() + static_cast<size_t>(k) * dim;
      const double y = train.speaker_ids[k] == c ? 1.0 : -1.0;
      if (y * score(state.w, c, x, dim) < 1.0) {
        const double coef = -y / m;
        for (int i = 0; i < dim; ++i)
          grow[i] += static_cast<float>(coef * x[i]);
        grow[dim] += static_cast<float>(coef);
      }
    }
    for (int i = 0; i <= dim; ++i)
      row[i] -= static_cast<float>(eta) * grow[i];
  }

  const double t = epoch + 1;
  for (size_t i = 0; i < state.w.v.size(); ++i)
    state.w_avg.v[i] =
        static_cast<float>(state.w_avg.v[i] * (t - 1) / t + state.w.v[i] / t);
}

}  // namespace

std::pair<ProbeDataset, ProbeDataset> probe_split(const ProbeDataset& all,
                                                  double test_fraction,
                                                  std::uint64_t seed) {
  std::map<int, std::vector<int>> by_speaker;
  for (int i = 0; i < all.embeddings.rows; ++i)
    by_speaker[all.speaker_ids[i]].push_back(i);

  auto rng = make_rng(derive_seed(seed, 0x5b));
  std::vector<int> train_rows, test_rows;
  for (auto& [spk, rows] : by_speaker) {
    std::shuffle(rows.begin(), rows.end(), rng);
    size_t n_test = static_cast<size_t>(test_fraction * rows.size());
    if (n_test == 0 && rows.size() >= 2) n_test = 1;
    for (size_t i = 0; i < rows.size(); ++i)
      (i < n_test ? test_rows : train_rows).push_back(rows[i]);
  }

  auto take = [&](const std::vector<int>& rows) {
    ProbeDataset d;
    d.n_speakers = all.n_speakers;
    d.embeddings = Matrix(static_cast<int>(rows.size()), all.embeddings.cols);
    d.speaker_ids.resize(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      std::copy_n(all.embeddings.v.begin() +
                      static_cast<size_t>(rows[i]) * all.embeddings.cols,
                  all.embeddings.cols,
                  d.embeddings.v.begin() +
                      static_cast<size_t>(i) * all.embeddings.cols);
      d.speaker_ids[i] = all.speaker_ids[rows[i]];
    }
    return d;
  };
  return {take(train_rows), take(test_rows)};
}

Matrix train_linear_svm(const ProbeDataset& train, double reg_lambda,
                        int epochs, std::uint64_t seed) {
  (void)seed;  // full-batch training is already deterministic
  if (train.n_speakers < 2)
    throw std::invalid_argument("svm: need at least 2 speakers");
  std::vector<int> counts(train.n_speakers, 0);
  for (int id : train.speaker_ids) ++counts[id];
  for (int c = 0; c < train.n_speakers; ++c)
    if (counts[c] == 0)
      throw std::runtime_error("svm: speaker " + std::to_string(c) +
                               " has no training segments");

  SvmState state{Matrix(train.n_speakers, train.embeddings.cols + 1),
                 Matrix(train.n_speakers, train.embeddings.cols + 1)};
  for (int e = 0; e < epochs; ++e) svm_epoch(state, train, reg_lambda, e);
  return state.w_avg;
}

double svm_objective(const Matrix& weights, const ProbeDataset& data,
                     double reg_lambda) {
  const int dim = data.embeddings.cols;
  double total = 0.0;
  for (int c = 0; c < data.n_speakers; ++c) {
    const float* row = weights.v.data() + static_cast<size_t>(c) * (dim + 1);
    double reg = 0.0;
    for (int i = 0; i < dim; ++i) reg += double(row[i]) * row[i];
    total += 0.5 * reg_lambda * reg;
    double hinge = 0.0;
    for (int k = 0; k < data.embeddings.rows; ++k) {
      const float* x =
          data.embeddings.v.data() + static_cast<size_t>(k) * dim;
      const double y = data.speaker_ids[k] == c ? 1.0 : -1.0;
      hinge += std::max(0.0, 1.0 - y * score(weights, c, x, dim));
    }
    total += hinge / data.embeddings.rows;
  }
  return total;
}

std::vector<double> svm_objective_trace(const ProbeDataset& train,
                                        double reg_lambda, int epochs,
                                        std::uint64_t seed) {
  (void)seed;
  SvmState state{Matrix(train.n_speakers, train.embeddings.cols + 1),
                 Matrix(train.n_speakers, train.embeddings.cols + 1)};
  std::vector<double> trace;
  for (int e = 0; e < epochs; ++e) {
    svm_epoch(state, train, reg_lambda, e);
    trace.push_back(svm_objective(state.w_avg, train, reg_lambda));
  }
  return trace;
}

double probe_accuracy(const Matrix& weights, const ProbeDataset& test) {
  if (test.embeddings.rows == 0)
    throw std::invalid_argument("probe_accuracy: empty test set");
  const int dim = test.embeddings.cols;
  if (weights.cols != dim + 1)
    throw std::invalid_argument("probe_accuracy: dimension mismatch");
  int correct = 0;
  for (int k = 0; k < test.embeddings.rows; ++k) {
    const float* x = test.embeddings.v.data() + static_cast<size_t>(k) * dim;
    int best = 0;
    double best_s = score(weights, 0, x, dim);
    for (int c = 1; c < weights.rows; ++c) {
      const double s = score(weights, c, x, dim);
      if (s > best_s) {
        best_s = s;
        best = c;
      }
    }
    if (best == test.speaker_ids[k]) ++correct;
  }
  return static_cast<double>(correct) / test.embeddings.rows;
}

nlohmann::json ProbeReport::to_json() const {
  return {{"accuracy", accuracy},
          {"n_speakers", n_speakers},
          {"n_test", n_test},
          {"embedding_source", embedding_source}};
}

}  // namespace idl

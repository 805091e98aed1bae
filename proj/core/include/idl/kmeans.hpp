// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <vector>

#include "idl/common.hpp"

namespace idl {

struct KMeansModel {
  Matrix centroids;  // C x dim
  double inertia = 0.0;
  std::vector<double> inertia_trace;  // one entry per Lloyd iteration
};

// k-means++ seeding followed by Lloyd iterations until the maximum centroid
// shift drops below tol or max_iter is reached. Empty clusters are repaired
// by stealing the point farthest from its assigned centroid. Deterministic
// in seed.
KMeansModel kmeans_fit(const Matrix& points, int n_clusters,
                       std::uint64_t seed, int max_iter = 100,
                       double tol = 1e-6);

// Index of the nearest centroid (squared Euclidean); ties break to the
// lowest index.
int kmeans_assign(const KMeansModel& model, const float* point, int dim);

}  // namespace idl

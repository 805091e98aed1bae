// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#include "idl/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace idl {
namespace {

double sq_dist(const float* a, const float* b, int dim) {
  double acc = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = double(a[i]) - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

int kmeans_assign(const KMeansModel& model, const float* point, int dim) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < model.centroids.rows; ++c) {
    const double d =
        sq_dist(point, model.centroids.v.data() +
                           static_cast<size_t>(c) * dim, dim);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

KMeansModel kmeans_fit(const Matrix& points, int n_clusters,
                       std::uint64_t seed, int max_iter, double tol) {
  const int m = points.rows, dim = points.cols;
  if (m < n_clusters)
    throw std::invalid_argument("kmeans_fit: fewer points than clusters");

  auto rng = make_rng(derive_seed(seed, 0x4a3a));
  auto point = [&](int i) {
    return points.v.data() + static_cast<size_t>(i) * dim;
  };

  // k-means++ seeding.
  KMeansModel model;
  model.centroids = Matrix(n_clusters, dim);
  std::vector<double> min_d(m, std::numeric_limits<double>::infinity());
  {
    std::uniform_int_distribution<int> first(0, m - 1);
    int pick = first(rng);
    std::copy_n(point(pick), dim, model.centroids.v.begin());
    for (int c = 1; c < n_clusters; ++c) {
      double total = 0.0;
      for (int i = 0; i < m; ++i) {
        min_d[i] = std::min(
            min_d[i],
            sq_dist(point(i),
                    model.centroids.v.data() +
                        static_cast<size_t>(c - 1) * dim,
                    dim));
        total += min_d[i];
      }
      int next = m - 1;
      if (total > 0.0) {
        std::uniform_real_distribution<double> u(0.0, total);
        double r = u(rng);
        double acc = 0.0;
        for (int i = 0; i < m; ++i) {
          acc += min_d[i];
          if (acc >= r) {
            next = i;
            break;
          }
        }
      } else {
        std::uniform_int_distribution<int> any(0, m - 1);
        next = any(rng);
      }
      std::copy_n(point(next), dim,
                  model.centroids.v.begin() + static_cast<size_t>(c) * dim);
    }
  }

  std::vector<int> assign(m, 0);
  for (int iter = 0; iter < max_iter; ++iter) {
    // Assignment step + inertia of the current centroids.
    double inertia = 0.0;
    std::vector<double> dist_to_centroid(m);
    for (int i = 0; i < m; ++i) {
      assign[i] = kmeans_assign(model, point(i), dim);
      dist_to_centroid[i] =
          sq_dist(point(i),
                  model.centroids.v.data() +
                      static_cast<size_t>(assign[i]) * dim,
                  dim);
      inertia += dist_to_centroid[i];
    }
    model.inertia = inertia;
    model.inertia_trace.push_back(inertia);

    // Update step; empty clusters steal the farthest point.
    Matrix sums(n_clusters, dim);
    std::vector<int> counts(n_clusters, 0);
    for (int i = 0; i < m; ++i) {
      ++counts[assign[i]];
      const float* p = point(i);
      float* s = sums.v.data() + static_cast<size_t>(assign[i]) * dim;
      for (int d = 0; d < dim; ++d) s[d] += p[d];
    }
    for (int c = 0; c < n_clusters; ++c) {
      if (counts[c] > 0) continue;
      int far = 0;
      double far_d = -1.0;
      for (int i = 0; i < m; ++i)
        if (counts[assign[i]] > 1 && dist_to_centroid[i] > far_d) {
          far_d = dist_to_centroid[i];
          far = i;
        }
      --counts[assign[far]];
      const float* p = point(far);
      float* s0 = sums.v.data() + static_cast<size_t>(assign[far]) * dim;
      for (int d = 0; d < dim; ++d) s0[d] -= p[d];
      assign[far] = c;
      counts[c] = 1;
      float* s1 = sums.v.data() + static_cast<size_t>(c) * dim;
      for (int d = 0; d < dim; ++d) s1[d] = p[d];
      dist_to_centroid[far] = 0.0;
    }

    double max_shift = 0.0;
    for (int c = 0; c < n_clusters; ++c) {
      float* ctr = model.centroids.v.data() + static_cast<size_t>(c) * dim;
      const float* s = sums.v.data() + static_cast<size_t>(c) * dim;
      double shift = 0.0;
      for (int d = 0; d < dim; ++d) {
        const float next = s[d] / counts[c];
        const double delta = double(next) - ctr[d];
        shift += delta * delta;
        ctr[d] = next;
      }
      max_shift = std::max(max_shift, std::sqrt(shift));
    }
    if (max_shift < tol) break;
  }

  // Final inertia against the converged centroids.
  double inertia = 0.0;
  for (int i = 0; i < m; ++i) {
    const int c = kmeans_assign(model, point(i), dim);
    inertia += sq_dist(point(i),
                       model.centroids.v.data() + static_cast<size_t>(c) * dim,
                       dim);
  }
  model.inertia = inertia;
  model.inertia_trace.push_back(inertia);
  return model;
}

}  // namespace idl

// Copyright 2026 The Habitat Forge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "habitat/core/error.hpp"
#include "habitat/core/random.hpp"
#include "habitat/textcluster/tfidf.hpp"

namespace habitat::textcluster {

/// Non-owning row-major point matrix.
struct MatrixView {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  const double* row(std::size_t i) const { return data + i * cols; }
};

inline MatrixView view(const DocumentVectors& dv) { return {dv.data.data(), dv.rows(), dv.dims()}; }

inline double squared_distance(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

struct ClusterAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> labels;
  std::vector<double> centroids;       // row-major k x dim
  double inertia = 0.0;
  std::vector<double> inertia_history;  // after the first assignment, then after every centroid update
  std::size_t iterations = 0;
  bool converged = false;

  const double* centroid(std::size_t c, std::size_t dim) const { return centroids.data() + c * dim; }
};

struct KMeansOptions {
  std::size_t max_iters = 300;
};

namespace detail {

// Sparse view of each row so assignment costs O(nnz) per (point, centroid).
struct SparseRows {
  std::vector<std::vector<std::size_t>> nz;

  explicit SparseRows(const MatrixView& x) : nz(x.rows) {
    for (std::size_t i = 0; i < x.rows; ++i)
      for (std::size_t j = 0; j < x.cols; ++j)
        if (x.row(i)[j] != 0.0) nz[i].push_back(j);
  }
};

// |x - c|^2 = |c|^2 + sum over nonzeros of x of ((x_j - c_j)^2 - c_j^2).
inline double sparse_distance(const MatrixView& x, const SparseRows& sp, std::size_t i, const double* c,
                              double c_norm2) {
  double s = c_norm2;
  const double* r = x.row(i);
  for (std::size_t j : sp.nz[i]) {
    const double d = r[j] - c[j];
    s += d * d - c[j] * c[j];
  }
  return s < 0.0 ? 0.0 : s;
}

inline std::vector<double> centroid_norms(const std::vector<double>& centroids, std::size_t k, std::size_t dim) {
  std::vector<double> out(k, 0.0);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < dim; ++j) out[c] += centroids[c * dim + j] * centroids[c * dim + j];
  return out;
}

inline double total_inertia(const MatrixView& x, const ClusterAssignment& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) s += squared_distance(x.row(i), a.centroid(a.labels[i], x.cols), x.cols);
  return s;
}

inline std::vector<std::size_t> kmeanspp_seeds(const MatrixView& x, std::size_t k, SeedStream& rng) {
  const std::size_t n = x.rows;
  std::vector<std::size_t> seeds;
  std::vector<bool> chosen(n, false);
  std::vector<double> d2(n);
  const std::size_t first = rng.uniform_index(n);
  seeds.push_back(first);
  chosen[first] = true;
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(x.row(i), x.row(first), x.cols);
  while (seeds.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += d2[i];
    std::size_t pick = n;
    if (total > 0.0) {
      const double r = rng.uniform01() * total;
      double cum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        cum += d2[i];
        pick = i;
        if (cum > r) break;
      }
    }
    if (pick == n || chosen[pick]) {
      // every remaining point coincides with a seed: draw among the unchosen
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) rest.push_back(i);
      pick = rest[rng.uniform_index(rest.size())];
    }
    seeds.push_back(pick);
    chosen[pick] = true;
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(x.row(i), x.row(pick), x.cols));
  }
  return seeds;
}

// Nearest centroid per point, ties to the lowest centroid index.
inline void assign(const MatrixView& x, const SparseRows& sp, ClusterAssignment& a, std::vector<double>& dist) {
  const auto norms = centroid_norms(a.centroids, a.k, x.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < a.k; ++c) {
      const double d = sparse_distance(x, sp, i, a.centroid(c, x.cols), norms[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    a.labels[i] = best;
    dist[i] = best_d;
  }
}

// Each empty cluster takes over the point farthest from its own centroid
// (ties to the lowest point index), drawn only from clusters with more than
// one member. The moved point then sits at distance 0, so inertia never rises.
inline void repair_empty(const MatrixView& x, ClusterAssignment& a, std::vector<double>& dist) {
  std::vector<std::size_t> sizes(a.k, 0);
  for (auto l : a.labels) ++sizes[l];
  for (std::size_t c = 0; c < a.k; ++c) {
    if (sizes[c] != 0) continue;
    std::size_t far = x.rows;
    double far_d = -1.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
      if (sizes[a.labels[i]] <= 1) continue;
      if (dist[i] > far_d) {
        far_d = dist[i];
        far = i;
      }
    }
    if (far == x.rows) break;
    --sizes[a.labels[far]];
    a.labels[far] = c;
    sizes[c] = 1;
    dist[far] = 0.0;
    std::copy(x.row(far), x.row(far) + x.cols, a.centroids.begin() + static_cast<std::ptrdiff_t>(c * x.cols));
  }
}

inline void update_centroids(const MatrixView& x, ClusterAssignment& a) {
  std::vector<double> sums(a.k * x.cols, 0.0);
  std::vector<std::size_t> sizes(a.k, 0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const std::size_t l = a.labels[i];
    ++sizes[l];
    const double* r = x.row(i);
    for (std::size_t j = 0; j < x.cols; ++j) sums[l * x.cols + j] += r[j];
  }
  for (std::size_t c = 0; c < a.k; ++c) {
    if (sizes[c] == 0) continue;  // keep the previous centroid
    const double inv = 1.0 / static_cast<double>(sizes[c]);
    for (std::size_t j = 0; j < x.cols; ++j) a.centroids[c * x.cols + j] = sums[c * x.cols + j] * inv;
  }
}

}  // namespace detail

/// Lloyd's k-means with k-means++ seeding. Deterministic in (points, k, seed).
/// Stops when an assignment pass changes no label, or after max_iters passes.
inline ClusterAssignment kmeans(const MatrixView& x, std::size_t k, std::uint64_t seed, const KMeansOptions& opts = {}) {
  if (k < 1 || k > x.rows) {
    throw Error(ErrorCode::KOutOfRange, "k=" + std::to_string(k) + " outside [1, " + std::to_string(x.rows) + "]");
  }
  SeedStream rng(seed);
  ClusterAssignment a;
  a.k = k;
  a.labels.assign(x.rows, k);  // sentinel: nothing assigned yet
  a.centroids.resize(k * x.cols);
  const auto seeds = detail::kmeanspp_seeds(x, k, rng);
  for (std::size_t c = 0; c < k; ++c)
    std::copy(x.row(seeds[c]), x.row(seeds[c]) + x.cols, a.centroids.begin() + static_cast<std::ptrdiff_t>(c * x.cols));

  const detail::SparseRows sp(x);
  std::vector<double> dist(x.rows);
  std::vector<std::size_t> prev = a.labels;
  for (std::size_t iter = 0; iter < opts.max_iters; ++iter) {
    detail::assign(x, sp, a, dist);
    detail::repair_empty(x, a, dist);
    a.iterations = iter + 1;
    if (a.labels == prev) {
      a.converged = true;
      break;
    }
    if (iter == 0) a.inertia_history.push_back(detail::total_inertia(x, a));
    prev = a.labels;
    detail::update_centroids(x, a);
    a.inertia_history.push_back(detail::total_inertia(x, a));
  }
  if (!a.converged) {
    // the last pass updated centroids; reassign so every label is nearest
    detail::assign(x, sp, a, dist);
    detail::repair_empty(x, a, dist);
  }
  a.inertia = detail::total_inertia(x, a);
  return a;
}

inline ClusterAssignment kmeans(const DocumentVectors& dv, std::size_t k, std::uint64_t seed, const KMeansOptions& opts = {}) {
  return kmeans(view(dv), k, seed, opts);
}

}  // namespace habitat::textcluster

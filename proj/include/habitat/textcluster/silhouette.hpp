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
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "habitat/core/error.hpp"
#include "habitat/textcluster/kmeans.hpp"

namespace habitat::textcluster {

/// Symmetric Euclidean distance matrix, computed once and reused across
/// every k of a silhouette scan.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(const MatrixView& x) : n_(x.rows), d_(x.rows * x.rows, 0.0) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) {
        const double v = std::sqrt(squared_distance(x.row(i), x.row(j), x.cols));
        d_[i * n_ + j] = v;
        d_[j * n_ + i] = v;
      }
  }

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }

 private:
  std::size_t n_;
  std::vector<double> d_;
};

/// Mean silhouette over all points. a(i) is the mean distance to the other
/// members of i's cluster, b(i) the smallest mean distance to another
/// cluster; s(i) = (b - a) / max(a, b), with s(i) = 0 for singletons and
/// when a = b = 0.
inline double silhouette(const DistanceMatrix& d, const std::vector<std::size_t>& labels, std::size_t k) {
  const std::size_t n = d.size();
  if (labels.size() != n) throw Error(ErrorCode::InvalidArgument, "label count differs from point count");
  if (k < 2 || k + 1 > n) {
    throw Error(ErrorCode::KOutOfRange, "silhouette needs 2 <= k <= N-1, got k=" + std::to_string(k) + " N=" + std::to_string(n));
  }
  std::vector<std::size_t> sizes(k, 0);
  for (auto l : labels) {
    if (l >= k) throw Error(ErrorCode::InvalidArgument, "label out of range");
    ++sizes[l];
  }
  for (auto s : sizes)
    if (s == 0) throw Error(ErrorCode::InvalidArgument, "silhouette needs every cluster nonempty");

  std::vector<double> sums(k);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t own = labels[i];
    if (sizes[own] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) sums[labels[j]] += d(i, j);
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c)
      if (c != own) b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    const double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

inline double silhouette(const MatrixView& x, const ClusterAssignment& a) {
  return silhouette(DistanceMatrix(x), a.labels, a.k);
}

inline double silhouette(const DocumentVectors& dv, const ClusterAssignment& a) { return silhouette(view(dv), a); }

}  // namespace habitat::textcluster

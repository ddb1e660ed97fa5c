#pragma once

#include "spar/types.hpp"

#include <cstdint>
#include <vector>

namespace spar {

struct KMeansOptions {
  int restarts = 10;
  int max_iter = 100;
};

struct KMeansResult {
  std::vector<int> labels;  // values in 1..K
  Matrix centers;           // K x d
  double wcss = 0.0;
  /// Within-cluster sum of squares after each Lloyd iteration of the winning restart.
  std::vector<double> wcss_trace;
};

/// Lloyd's algorithm with k-means++ seeding; best of `restarts` runs by WCSS.
KMeansResult kmeans(const Matrix& rows, int K, std::uint64_t seed, KMeansOptions opts = {});

}  // namespace spar
